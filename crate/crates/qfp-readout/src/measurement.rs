//! Half-plane coherent-state readout: the two-outcome POVM, the closed-form
//! measurement channel for photon-number conserving Hamiltonians, a
//! brute-force oracle channel, and fidelity functionals.
//!
//! Outcome `+` integrates the lower half of the coherent-state plane when
//! `chi_sign = +1`; a negative dispersive shift swaps the half-planes.

use std::f64::consts::PI;

use thiserror::Error;

use crate::hilbert::{
    coherent_state, evolve, kron, partial_trace, ComplexMatrix, FockSpace, LinalgError, StateVector, C64, ZERO,
};
use crate::models::{build_blocks, fq1_initial_state, ModelError, ModelSpec};
use crate::special::{ln_factorial, ln_gamma_half_plus_one};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("Hamiltonian mixes photon-number sectors (commutator {0:e}); use the oracle channel")]
    NotPhotonBlockDiagonal(f64),
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// `<m|E_x|n>` of the half-plane POVM.
pub fn povm_entry(m: usize, n: usize, x: Outcome) -> C64 {
    if m == n {
        return C64::new(0.5, 0.0);
    }
    let k = m as i64 - n as i64;
    if k % 2 == 0 {
        return ZERO;
    }
    let log_mag = ln_gamma_half_plus_one(m + n) - 0.5 * (ln_factorial(m) + ln_factorial(n));
    C64::new(0.0, -x.sign() * log_mag.exp() / (PI * k as f64))
}

/// `<n|alpha><alpha|m>` for real `alpha`.
fn coherent_weight(m: usize, n: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return if m + n == 0 { 1.0 } else { 0.0 };
    }
    (-alpha * alpha + (m + n) as f64 * alpha.ln() - 0.5 * (ln_factorial(m) + ln_factorial(n))).exp()
}

/// Channel coefficient `g_x(m, n) = <m|E_x|n> <n|alpha><alpha|m>`.
///
/// The diagonal term carries a Kronecker delta: summed over both outcomes
/// the coefficients reduce to the photon distribution of `|alpha>`.
pub fn g_coeff(m: usize, n: usize, alpha: f64, x: Outcome) -> C64 {
    povm_entry(m, n, x) * coherent_weight(m, n, alpha)
}

/// POVM element truncated to `space`; `E_+ + E_- = 1` entrywise.
pub fn povm_element(space: FockSpace, x: Outcome) -> ComplexMatrix {
    let n = space.n_max();
    let mut e = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = povm_entry(i, j, x);
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub alpha: f64,
    pub t_m: f64,
    /// Sign of the dispersive shift; selects which half-plane reads `+`.
    pub chi_sign: f64,
    pub space: FockSpace,
}

impl MeasurementConfig {
    pub fn new(alpha: f64, t_m: f64, chi_sign: f64, space: FockSpace) -> Self {
        assert!(alpha >= 0.0, "coherent amplitude must be nonnegative");
        assert!(t_m >= 0.0, "measurement time must be nonnegative");
        assert!(chi_sign == 1.0 || chi_sign == -1.0, "chi_sign must be +1 or -1");
        Self { alpha, t_m, chi_sign, space }
    }

    /// Measurement time `chi_t / |chi|`; `chi_t = pi/2` is the canonical choice.
    pub fn at_chi_t(alpha: f64, chi_t: f64, chi: f64, space: FockSpace) -> Self {
        assert!(chi != 0.0, "dispersive shift must be nonzero");
        let sign = if chi > 0.0 { 1.0 } else { -1.0 };
        Self::new(alpha, chi_t / chi.abs(), sign, space)
    }

    fn half_plane(&self, x: Outcome) -> Outcome {
        Outcome::from_sign(x.sign() * self.chi_sign)
    }

    /// Probability mass of `|alpha>` beyond the truncation.
    pub fn tail_mass(&self) -> f64 {
        let kept: f64 = (0..self.space.n_max()).map(|n| coherent_weight(n, n, self.alpha)).sum();
        (1.0 - kept).max(0.0)
    }
}

/// Unnormalized post-measurement states of both outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    pub post_state_plus: ComplexMatrix,
    pub post_state_minus: ComplexMatrix,
    pub p_plus: f64,
    pub p_minus: f64,
    /// Coherent-state weight lost to truncation.
    pub tail: f64,
}

impl ChannelResult {
    fn from_states(plus: ComplexMatrix, minus: ComplexMatrix, tail: f64) -> Self {
        let p_plus = plus.trace().re;
        let p_minus = minus.trace().re;
        Self { post_state_plus: plus, post_state_minus: minus, p_plus, p_minus, tail }
    }

    pub fn post_state(&self, x: Outcome) -> &ComplexMatrix {
        match x {
            Outcome::Plus => &self.post_state_plus,
            Outcome::Minus => &self.post_state_minus,
        }
    }

    /// `E_+(rho) + E_-(rho)`
    pub fn non_selective(&self) -> ComplexMatrix {
        &self.post_state_plus + &self.post_state_minus
    }

    /// Traces out every subsystem not listed in `keep`.
    pub fn reduce(&self, dims: &[usize], keep: &[usize]) -> Result<Self, MeasurementError> {
        Ok(Self::from_states(
            partial_trace(&self.post_state_plus, dims, keep)?,
            partial_trace(&self.post_state_minus, dims, keep)?,
            self.tail,
        ))
    }
}

/// Largest entry of `[h, 1 (x) a^dag a]` for a qubit (x) Fock operator.
pub fn photon_number_commutator(h: &ComplexMatrix, space: FockSpace) -> f64 {
    let n = space.n_max();
    let mut worst: f64 = 0.0;
    for r in 0..h.rows() {
        for c in 0..h.cols() {
            let shift = (r % n).abs_diff(c % n) as f64;
            worst = worst.max(h[(r, c)].norm() * shift);
        }
    }
    worst
}

/// Extracts the qubit-space blocks `<n|h|n>`.
pub fn photon_blocks(h: &ComplexMatrix, space: FockSpace) -> Result<Vec<ComplexMatrix>, MeasurementError> {
    let n = space.n_max();
    if !h.rows().is_multiple_of(n) || !h.is_square() {
        return Err(LinalgError::DimMismatch(format!("{}x{} operator on a Fock space of {n}", h.rows(), h.cols())).into());
    }
    let q = h.rows() / n;
    let off = photon_number_commutator(h, space);
    if off > 1e-10 {
        return Err(MeasurementError::NotPhotonBlockDiagonal(off));
    }
    Ok((0..n)
        .map(|k| {
            let mut b = ComplexMatrix::zeros(q, q);
            for i in 0..q {
                for j in 0..q {
                    b[(i, j)] = h[(i * n + k, j * n + k)];
                }
            }
            b
        })
        .collect())
}

/// Closed-form channel `E_x(rho) = sum_{m,n} g_x(m,n) K_n rho K_m^dag` with
/// `K_n = <n|U(t_m)|n>`. Requires a photon-number conserving `h`.
pub fn apply_channel_fast(
    h: &ComplexMatrix,
    rho0: &ComplexMatrix,
    cfg: &MeasurementConfig,
) -> Result<ChannelResult, MeasurementError> {
    apply_channel_blocks(&photon_blocks(h, cfg.space)?, rho0, cfg)
}

/// Fast channel from precomputed photon-sector blocks.
pub fn apply_channel_blocks(
    blocks: &[ComplexMatrix],
    rho0: &ComplexMatrix,
    cfg: &MeasurementConfig,
) -> Result<ChannelResult, MeasurementError> {
    let n = cfg.space.n_max();
    if blocks.len() != n || blocks.iter().any(|b| b.rows() != rho0.rows()) {
        return Err(LinalgError::DimMismatch("photon blocks do not match state or truncation".into()).into());
    }
    let kraus: Vec<ComplexMatrix> = blocks.iter().map(|b| evolve(b, cfg.t_m)).collect::<Result<_, _>>()?;
    let left: Vec<ComplexMatrix> = kraus.iter().map(|k| k * rho0).collect();
    let right: Vec<ComplexMatrix> = kraus.iter().map(ComplexMatrix::adjoint).collect();
    let q = rho0.rows();
    let mut states = [ComplexMatrix::zeros(q, q), ComplexMatrix::zeros(q, q)];
    for m in 0..n {
        for k in 0..n {
            let w = coherent_weight(m, k, cfg.alpha);
            if w == 0.0 {
                continue;
            }
            let term = &left[k] * &right[m];
            for (state, x) in states.iter_mut().zip(Outcome::BOTH) {
                let g = povm_entry(m, k, cfg.half_plane(x)) * w;
                if g != ZERO {
                    *state = &*state + &term.scale(g);
                }
            }
        }
    }
    let [plus, minus] = states;
    Ok(ChannelResult::from_states(plus, minus, cfg.tail_mass()))
}

/// Reference channel: evolve `rho (x) |alpha><alpha|` with the full
/// Hamiltonian, apply the POVM and trace out the resonator.
pub fn apply_channel_oracle(
    h: &ComplexMatrix,
    rho0: &ComplexMatrix,
    cfg: &MeasurementConfig,
) -> Result<ChannelResult, MeasurementError> {
    let n = cfg.space.n_max();
    let q = rho0.rows();
    if h.rows() != q * n || !h.is_square() {
        return Err(LinalgError::DimMismatch(format!("Hamiltonian {}x{} vs {q} x {n}", h.rows(), h.cols())).into());
    }
    let field = ComplexMatrix::outer(&coherent_state(cfg.space, cfg.alpha)?);
    let u = evolve(h, cfg.t_m)?;
    let evolved = u.conjugate(&kron(rho0, &field));
    let mut out = Vec::with_capacity(2);
    for x in Outcome::BOTH {
        let e = kron(&ComplexMatrix::identity(q), &povm_element(cfg.space, cfg.half_plane(x)));
        out.push(partial_trace(&(&e * &evolved), &[q, n], &[0])?);
    }
    let minus = out.pop().expect("two outcomes");
    let plus = out.pop().expect("two outcomes");
    Ok(ChannelResult::from_states(plus, minus, cfg.tail_mass()))
}

fn check_pure(psi0: &[C64], sigma: &ComplexMatrix) -> Result<(), MeasurementError> {
    if sigma.rows() != psi0.len() || !sigma.is_square() {
        return Err(MeasurementError::NotAState(format!("{}-dim state vs {}x{} matrix", psi0.len(), sigma.rows(), sigma.cols())));
    }
    let norm: f64 = psi0.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(MeasurementError::NotAState(format!("reference state has norm^2 {norm}")));
    }
    let herm = sigma.hermiticity_error();
    if herm > 1e-10 {
        return Err(MeasurementError::NotAState(format!("hermiticity error {herm:e}")));
    }
    Ok(())
}

/// `<psi0|sigma|psi0>` for a unit-trace `sigma`.
pub fn fidelity(psi0: &[C64], sigma: &ComplexMatrix) -> Result<f64, MeasurementError> {
    check_pure(psi0, sigma)?;
    let tr = sigma.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(MeasurementError::NotAState(format!("trace {tr}")));
    }
    Ok(sigma.sandwich(psi0, psi0).re.clamp(0.0, 1.0))
}

/// `<psi0|sigma|psi0>` for an unnormalized `sigma`; no trace check.
pub fn fidelity_unnormalized(psi0: &[C64], sigma: &ComplexMatrix) -> Result<f64, MeasurementError> {
    check_pure(psi0, sigma)?;
    Ok(sigma.sandwich(psi0, psi0).re)
}

/// The six single-qubit cardinal states: `|0>, |1>, |+>, |->, |+i>, |-i>`.
pub fn cardinal_states() -> [StateVector; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |a: f64, b: f64| C64::new(a, b);
    [
        vec![r(1.0, 0.0), ZERO],
        vec![ZERO, r(1.0, 0.0)],
        vec![r(h, 0.0), r(h, 0.0)],
        vec![r(h, 0.0), r(-h, 0.0)],
        vec![r(h, 0.0), r(0.0, h)],
        vec![r(h, 0.0), r(0.0, -h)],
    ]
}

/// Reference state of the measured qubit, in the coordinates of the readout basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitialState {
    #[default]
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl InitialState {
    pub const ALL: [InitialState; 6] = [Self::Zero, Self::One, Self::Plus, Self::Minus, Self::PlusI, Self::MinusI];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::One => "one",
            Self::Plus => "plus",
            Self::Minus => "minus",
            Self::PlusI => "plus_i",
            Self::MinusI => "minus_i",
        }
    }

    pub fn vector(&self) -> StateVector {
        let k = Self::ALL.iter().position(|s| s == self).expect("listed");
        cardinal_states()[k].clone()
    }
}

impl std::str::FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| format!("unknown initial state '{s}'"))
    }
}

/// Which functional of the post-measurement states is reported as fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FidelityMode {
    /// `<psi0|E_+(rho0) + E_-(rho0)|psi0>`
    #[default]
    NonSelective,
    /// `<psi0|E_x(rho0)|psi0>` for one outcome, unnormalized.
    Selective(Outcome),
    /// Larger of the two selective values; for a basis state this is the
    /// probability of the outcome that identifies it.
    BestOutcome,
}

impl FidelityMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::NonSelective => "non_selective",
            Self::Selective(Outcome::Plus) => "selective_plus",
            Self::Selective(Outcome::Minus) => "selective_minus",
            Self::BestOutcome => "best_outcome",
        }
    }
}

impl std::str::FromStr for FidelityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::NonSelective, Self::Selective(Outcome::Plus), Self::Selective(Outcome::Minus), Self::BestOutcome]
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| format!("unknown fidelity mode '{s}'"))
    }
}

/// Reduced post-measurement states of the measured qubit together with the
/// fidelities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    /// `<psi0|E_+(rho0) + E_-(rho0)|psi0>` over the kept coherent weight.
    pub fidelity: f64,
    /// `<psi0|E_x(rho0)|psi0>`, unnormalized.
    pub selective_plus: f64,
    pub selective_minus: f64,
    /// `<psi0|E_x(rho0)|psi0> / p_x`; zero for an outcome with vanishing weight.
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub channel: ChannelResult,
    /// Dispersive shift of the model; sets the measurement time scale.
    pub chi: f64,
}

impl ProtocolOutcome {
    pub fn value(&self, mode: FidelityMode) -> f64 {
        match mode {
            FidelityMode::NonSelective => self.fidelity,
            FidelityMode::Selective(Outcome::Plus) => self.selective_plus,
            FidelityMode::Selective(Outcome::Minus) => self.selective_minus,
            FidelityMode::BestOutcome => self.selective_plus.max(self.selective_minus),
        }
    }
}

/// Readout of the measured qubit of `model`: prepare `rho0` (FQ1 in its
/// ground state for two-qubit models), couple to `|alpha>` for `cfg.t_m`,
/// apply the POVM and keep only the measured qubit.
pub fn run_protocol(model: &ModelSpec, psi0: &[C64], cfg: &MeasurementConfig) -> Result<(f64, ChannelResult), MeasurementError> {
    let out = run_protocol_with(model, psi0, None, cfg)?;
    Ok((out.fidelity, out.channel))
}

/// As [`run_protocol`] with an explicit FQ1 state in the model's coordinates.
pub fn run_protocol_with(
    model: &ModelSpec,
    psi0: &[C64],
    fq1_state: Option<&[C64]>,
    cfg: &MeasurementConfig,
) -> Result<ProtocolOutcome, MeasurementError> {
    if cfg.space != model.space() {
        return Err(LinalgError::DimMismatch(format!(
            "measurement truncation {} vs model truncation {}",
            cfg.space.n_max(),
            model.space().n_max()
        ))
        .into());
    }
    let blocks = build_blocks(model)?;
    let rho0 = initial_density(model, &blocks.derived, psi0, fq1_state)?;
    let mut channel = apply_channel_blocks(&blocks.blocks, &rho0, cfg)?;
    if blocks.qubit_dims.len() == 2 {
        channel = channel.reduce(&blocks.qubit_dims, &[1])?;
    }
    summarize(psi0, channel, blocks.derived.chi)
}

/// `rho0` on the model's qubit space: `|fq1><fq1| (x) |psi0><psi0|` for two qubits.
pub fn initial_density(
    model: &ModelSpec,
    derived: &crate::models::Derived,
    psi0: &[C64],
    fq1_state: Option<&[C64]>,
) -> Result<ComplexMatrix, MeasurementError> {
    if psi0.len() != 2 {
        return Err(MeasurementError::NotAState(format!("reference state of dimension {}", psi0.len())));
    }
    let psi = ComplexMatrix::outer(psi0);
    if model.kind.qubits() == 1 {
        return Ok(psi);
    }
    let fq1 = fq1_state.map(<[C64]>::to_vec).unwrap_or_else(|| fq1_initial_state(model, derived));
    Ok(kron(&ComplexMatrix::outer(&fq1), &psi))
}

/// Fidelities of a reduced single-qubit channel result against `psi0`.
pub fn summarize(psi0: &[C64], channel: ChannelResult, chi: f64) -> Result<ProtocolOutcome, MeasurementError> {
    let selective_plus = fidelity_unnormalized(psi0, &channel.post_state_plus)?;
    let selective_minus = fidelity_unnormalized(psi0, &channel.post_state_minus)?;
    let conditional = |value: f64, p: f64| if p <= 1e-14 { 0.0 } else { (value / p).clamp(0.0, 1.0) };
    // Normalize by the kept weight so truncation loss does not read as infidelity.
    let kept = channel.p_plus + channel.p_minus;
    Ok(ProtocolOutcome {
        fidelity: ((selective_plus + selective_minus) / kept).clamp(0.0, 1.0),
        selective_plus,
        selective_minus,
        fidelity_plus: conditional(selective_plus, channel.p_plus),
        fidelity_minus: conditional(selective_minus, channel.p_minus),
        chi,
        channel,
    })
}

/// Measurement configuration for `model` at dimensionless time `chi_t`.
pub fn model_config(model: &ModelSpec, alpha: f64, chi_t: f64) -> Result<MeasurementConfig, MeasurementError> {
    let d = crate::models::derive(model)?;
    Ok(MeasurementConfig::at_chi_t(alpha, chi_t, d.chi, model.space()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{hermitian_eig, pauli, ONE};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `(1/pi) * integral over the outcome's half-plane of
    /// <m|b><b|n><n|alpha><alpha|m> d^2 b` on a polar grid.
    fn g_quadrature(m: usize, n: usize, alpha: f64, x: Outcome) -> C64 {
        let (nr, nphi, r_max) = (20_000, 200_000, 8.0);
        let (phi0, phi1) = match x {
            Outcome::Plus => (PI, 2.0 * PI),
            Outcome::Minus => (0.0, PI),
        };
        let norm = (0.5 * (ln_factorial(m) + ln_factorial(n))).exp();
        let dr = r_max / nr as f64;
        let dphi = (phi1 - phi0) / nphi as f64;
        // Midpoint rule in both coordinates.
        let radial: f64 = (0..nr)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                (-r * r).exp() * r.powi((m + n) as i32) * r * dr
            })
            .sum();
        let angular: C64 = (0..nphi)
            .map(|j| {
                let phi = phi0 + (j as f64 + 0.5) * dphi;
                C64::from_polar(dphi, (m as f64 - n as f64) * phi)
            })
            .sum();
        angular * radial / (PI * norm) * coherent_weight(m, n, alpha)
    }

    #[test]
    fn g_matches_quadrature() {
        for (m, n) in [(1, 0), (0, 1), (3, 0), (2, 1), (2, 2), (4, 1)] {
            for x in Outcome::BOTH {
                let exact = g_coeff(m, n, 1.0, x);
                let quad = g_quadrature(m, n, 1.0, x);
                assert!((exact - quad).norm() <= 1e-8, "({m},{n},{x:?}) {exact} vs {quad}");
            }
        }
        // Frozen value at m=1, n=0, alpha=1, outcome +.
        let g = g_coeff(1, 0, 1.0, Outcome::Plus);
        assert_abs_diff_eq!(g.re, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(g.im, -0.103_776_874_355_148_7, epsilon = 1e-15);
    }

    #[test]
    fn g_structural_identities() {
        let alpha = 1.3;
        for m in 0..12 {
            for n in 0..12 {
                let sum = g_coeff(m, n, alpha, Outcome::Plus) + g_coeff(m, n, alpha, Outcome::Minus);
                let expected = if m == n { coherent_weight(n, n, alpha) } else { 0.0 };
                assert!((sum - expected).norm() <= 1e-15);
                if m != n && (m + n) % 2 == 0 {
                    assert_eq!(g_coeff(m, n, alpha, Outcome::Plus), ZERO);
                }
            }
        }
        assert_abs_diff_eq!(g_coeff(0, 0, 0.0, Outcome::Plus).re, 0.5, epsilon = 0.0);
    }

    #[test]
    fn povm_is_complete_and_positive() {
        let space = FockSpace::new(27);
        let sum = &povm_element(space, Outcome::Plus) + &povm_element(space, Outcome::Minus);
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(27)) <= 1e-12);
        for x in Outcome::BOTH {
            let e = povm_element(space, x);
            assert!(e.is_hermitian(1e-14));
            assert!(e.diagonal().iter().all(|d| *d == C64::new(0.5, 0.0)));
            let ev = hermitian_eig(&e).unwrap().values;
            assert!(ev[0] >= -1e-10 && ev[ev.len() - 1] <= 1.0 + 1e-10);
        }
    }

    fn plus_state() -> ComplexMatrix {
        ComplexMatrix::outer(&cardinal_states()[2])
    }

    #[test]
    fn trivial_channel_halves_state() {
        let space = FockSpace::new(6);
        let h = kron(&pauli::z(), &ComplexMatrix::identity(6));
        let rho = plus_state();
        let cfg = MeasurementConfig::new(0.0, 0.0, 1.0, space);
        let r = apply_channel_fast(&h, &rho, &cfg).unwrap();
        assert!(r.post_state_plus.max_abs_diff(&rho.scale_real(0.5)) <= 1e-15);
        assert!(r.post_state_minus.max_abs_diff(&rho.scale_real(0.5)) <= 1e-15);
        let space = FockSpace::new(14);
        let zero = ComplexMatrix::zeros(28, 28);
        let cfg = MeasurementConfig::new(1.0, 3.0, 1.0, space);
        let r = apply_channel_oracle(&zero, &rho, &cfg).unwrap();
        assert!(r.post_state_plus.max_abs_diff(&rho.scale_real(0.5)) <= 1e-12);
        assert_abs_diff_eq!(r.p_plus + r.p_minus, 1.0, epsilon = 1e-8);
    }

    fn dispersive_toy(space: FockSpace, delta: f64, chi: f64, theta: f64) -> ComplexMatrix {
        let n = space.n_max();
        let axis = pauli::zx(theta.cos(), theta.sin());
        let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let b = axis.scale_real(-(delta / 2.0 + chi * (k as f64 + 0.5)));
            for i in 0..2 {
                for j in 0..2 {
                    h[(i * n + k, j * n + k)] = b[(i, j)];
                }
            }
        }
        h
    }

    #[test]
    fn fast_matches_oracle() {
        let space = FockSpace::new(16);
        let chi = -0.07;
        let h = dispersive_toy(space, 1.3, chi, 0.4);
        let cfg = MeasurementConfig::at_chi_t(1.0, PI / 2.0, chi, space);
        for psi in cardinal_states() {
            let rho = ComplexMatrix::outer(&psi);
            let fast = apply_channel_fast(&h, &rho, &cfg).unwrap();
            let oracle = apply_channel_oracle(&h, &rho, &cfg).unwrap();
            assert!(fast.post_state_plus.max_abs_diff(&oracle.post_state_plus) <= 1e-8);
            assert!(fast.post_state_minus.max_abs_diff(&oracle.post_state_minus) <= 1e-8);
        }
    }

    #[test]
    fn chi_sign_swaps_outcomes() {
        let space = FockSpace::new(20);
        let h = dispersive_toy(space, 0.9, 0.05, 0.7);
        let rho = ComplexMatrix::outer(&cardinal_states()[4]);
        let a = apply_channel_fast(&h, &rho, &MeasurementConfig::new(1.2, 9.0, 1.0, space)).unwrap();
        let b = apply_channel_fast(&h, &rho, &MeasurementConfig::new(1.2, 9.0, -1.0, space)).unwrap();
        assert_eq!(a.p_plus, b.p_minus);
        assert_eq!(a.post_state_minus, b.post_state_plus);
    }

    #[test]
    fn rejects_photon_mixing() {
        let space = FockSpace::new(10);
        let (a, a_dag, _) = crate::hilbert::ladder_ops(space);
        let h = kron(&pauli::x(), &(&a + &a_dag));
        let cfg = MeasurementConfig::new(1.0, 1.0, 1.0, space);
        let rho = plus_state();
        assert!(matches!(apply_channel_fast(&h, &rho, &cfg), Err(MeasurementError::NotPhotonBlockDiagonal(_))));
        // The oracle accepts it and still preserves trace.
        let r = apply_channel_oracle(&h.scale_real(0.1), &rho, &MeasurementConfig::new(0.5, 1.0, 1.0, space)).unwrap();
        assert_abs_diff_eq!(r.p_plus + r.p_minus, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn fidelity_cases() {
        let psi = cardinal_states()[2].clone();
        assert_abs_diff_eq!(fidelity(&psi, &ComplexMatrix::outer(&psi)).unwrap(), 1.0, epsilon = 1e-15);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert_abs_diff_eq!(fidelity(&psi, &mixed).unwrap(), 0.5, epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let reduced = partial_trace(&ComplexMatrix::outer(&bell), &[2, 2], &[1]).unwrap();
        assert_abs_diff_eq!(fidelity(&psi, &reduced).unwrap(), 0.5, epsilon = 1e-15);
        assert!(fidelity(&psi, &mixed.scale_real(0.5)).is_err());
        assert!(fidelity_unnormalized(&psi, &mixed.scale_real(0.5)).is_ok());
        let bad = ComplexMatrix::from_vec(2, 2, vec![ONE, ONE, ZERO, ZERO]);
        assert!(fidelity(&psi, &bad).is_err());
    }

    fn small(kind: crate::models::ModelKind, basis: crate::bases::BasisTag) -> ModelSpec {
        use crate::models::{InteractionMode, ModelParams};
        // Strong coupling so that the small truncation still shows dynamics.
        let params = ModelParams { n_max: 10, delta_over_g: 3.0, j_ratio: 0.2, ..ModelParams::default() };
        ModelSpec::new(kind, basis, InteractionMode::Full, params)
    }

    #[test]
    fn protocol_identity_limit() {
        use crate::models::ModelKind;
        for kind in [ModelKind::SingleQubit, ModelKind::TwoQubitNoAnneal, ModelKind::TwoQubitWithAnneal] {
            let s = small(kind, crate::bases::BasisTag::Flux);
            let cfg = MeasurementConfig::new(0.0, 0.0, 1.0, s.space());
            for state in InitialState::ALL {
                let (f, res) = run_protocol(&s, &state.vector(), &cfg).unwrap();
                assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(res.p_plus, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn protocol_fast_matches_oracle() {
        use crate::bases::BasisTag;
        use crate::models::{build_hamiltonian, derive, ModelKind};
        for (kind, basis) in [
            (ModelKind::SingleQubit, BasisTag::Flux),
            (ModelKind::TwoQubitNoAnneal, BasisTag::EnergyQ1Q2),
            (ModelKind::TwoQubitWithAnneal, BasisTag::Flux),
            (ModelKind::TwoQubitNoAnneal, BasisTag::DressedQ2),
        ] {
            let mut s = small(kind, basis);
            // Coherent-state tail below 1e-13, so truncation does not separate the paths.
            s.params.n_max = 16;
            let cfg = model_config(&s, 1.0, 0.7).unwrap();
            let psi = InitialState::Plus.vector();
            let fast = run_protocol_with(&s, &psi, None, &cfg).unwrap();
            let d = derive(&s).unwrap();
            let rho0 = initial_density(&s, &d, &psi, None).unwrap();
            let mut slow = apply_channel_oracle(&build_hamiltonian(&s).unwrap(), &rho0, &cfg).unwrap();
            if kind.qubits() == 2 {
                slow = slow.reduce(&[2, 2], &[1]).unwrap();
            }
            let slow = summarize(&psi, slow, d.chi).unwrap();
            assert!(fast.channel.post_state_plus.max_abs_diff(&slow.channel.post_state_plus) <= 1e-8);
            assert!(fast.channel.post_state_minus.max_abs_diff(&slow.channel.post_state_minus) <= 1e-8);
            assert_abs_diff_eq!(fast.fidelity, slow.fidelity, epsilon = 1e-8);
        }
    }

    #[test]
    fn protocol_outcome_accounting() {
        use crate::bases::BasisTag;
        use crate::models::ModelKind;
        let s = small(ModelKind::TwoQubitNoAnneal, BasisTag::EnergyQ2);
        let cfg = model_config(&s, 1.2, std::f64::consts::FRAC_PI_2).unwrap();
        let a = run_protocol_with(&s, &InitialState::Zero.vector(), None, &cfg).unwrap();
        let b = run_protocol_with(&s, &InitialState::Zero.vector(), None, &cfg).unwrap();
        assert_eq!(a, b);
        let kept = a.channel.p_plus + a.channel.p_minus;
        assert_abs_diff_eq!(kept, 1.0 - a.channel.tail, epsilon = 1e-10);
        assert_abs_diff_eq!(a.value(FidelityMode::NonSelective) * kept, a.selective_plus + a.selective_minus, epsilon = 1e-12);
        assert_eq!(a.value(FidelityMode::BestOutcome), a.selective_plus.max(a.selective_minus));
        assert!(a.channel.post_state_plus.rows() == 2);
        // The state read by outcome `-` under a positive shift is |0>.
        assert!(a.selective_minus > a.selective_plus);
        let wrong_space = MeasurementConfig::new(1.0, 1.0, 1.0, FockSpace::new(5));
        assert!(run_protocol(&s, &InitialState::Zero.vector(), &wrong_space).is_err());
        for m in ["non_selective", "selective_plus", "selective_minus", "best_outcome"] {
            assert_eq!(m.parse::<FidelityMode>().unwrap().label(), m);
        }
        for st in InitialState::ALL {
            assert_eq!(st.label().parse::<InitialState>().unwrap(), st);
        }
    }

    proptest! {
        #[test]
        fn g_is_conjugate_symmetric(m in 0usize..=40, n in 0usize..=40, alpha in 0.0f64..2.0) {
            for x in Outcome::BOTH {
                prop_assert_eq!(g_coeff(n, m, alpha, x), g_coeff(m, n, alpha, x).conj());
            }
        }

        #[test]
        fn channel_is_complete_and_positive(
            alpha in 0.0f64..2.0,
            chi_t in 0.0f64..3.0,
            theta in 0.0f64..1.5,
            a in -1.0f64..1.0,
            b in -1.0f64..1.0,
        ) {
            let space = FockSpace::new(27);
            let h = dispersive_toy(space, 0.8, 0.05, theta);
            let norm = (1.0 + a * a + b * b).sqrt();
            let psi = vec![C64::new(1.0 / norm, 0.0), C64::new(a / norm, b / norm)];
            let cfg = MeasurementConfig::at_chi_t(alpha, chi_t, 0.05, space);
            let r = apply_channel_fast(&h, &ComplexMatrix::outer(&psi), &cfg).unwrap();
            prop_assert!((r.p_plus + r.p_minus - 1.0).abs() <= 1e-8);
            for x in Outcome::BOTH {
                let s = r.post_state(x);
                prop_assert!(s.hermiticity_error() <= 1e-12);
                prop_assert!(hermitian_eig(s).unwrap().values[0] >= -1e-10);
            }
        }
    }
}
