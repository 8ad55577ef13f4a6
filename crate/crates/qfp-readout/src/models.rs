//! Catalog of dispersive-frame readout models for one and two flux qubits,
//! their representations in flux, energy and dressed coordinates, and the
//! rotating-wave validity ratios that decide between bare and dressed bases.
//!
//! Every catalog Hamiltonian is stored per photon sector `n`: the resonator
//! only enters through the shifted detuning `delta_n = delta + chi (2n + 1)`,
//! so each sector is a small qubit-space matrix. Two-qubit operators act on
//! FQ1 (x) FQ2.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bases::{block_angle, exchange_dressed_transform, flux_energy_unitary, BasisError, BasisTag, QubitParams};
use crate::hilbert::{hermitian_eig, kron, pauli, ComplexMatrix, FockSpace, LinalgError, StateVector, C64, ONE, ZERO};
use crate::jcm::{assemble_blocks, effective_qubit, EffectiveQubitParams, DISPERSIVE_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("effective qubit is resonant with the resonator")]
    ZeroDetuning,
    #[error("basis {basis} is not available for {kind} in {mode} mode")]
    UnsupportedBasis { kind: ModelKind, mode: InteractionMode, basis: BasisTag },
    #[error("no validity ratio is defined for {0} in {1} mode")]
    NoRatio(ModelKind, InteractionMode),
    #[error("no crossover at a nonnegative mean photon number")]
    NoCrossoverInRange,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SingleQubit,
    TwoQubitNoAnneal,
    TwoQubitWithAnneal,
    ExchangeReference,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [Self::SingleQubit, Self::TwoQubitNoAnneal, Self::TwoQubitWithAnneal, Self::ExchangeReference];

    pub fn label(&self) -> &'static str {
        match self {
            Self::SingleQubit => "single",
            Self::TwoQubitNoAnneal => "two_qubit",
            Self::TwoQubitWithAnneal => "two_qubit_annealed",
            Self::ExchangeReference => "exchange",
        }
    }

    pub fn qubits(&self) -> usize {
        if *self == Self::SingleQubit {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| format!("unknown model kind '{s}'"))
    }
}

/// Which part of the qubit-qubit coupling is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionMode {
    Full,
    /// Longitudinal part only; valid when both qubits are bias-dominated.
    ZZ,
    /// Transverse part only; valid when both qubits are tunnelling-dominated.
    XX,
}

impl InteractionMode {
    pub const ALL: [InteractionMode; 3] = [Self::Full, Self::ZZ, Self::XX];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::ZZ => "zz",
            Self::XX => "xx",
        }
    }
}

impl fmt::Display for InteractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InteractionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| format!("unknown interaction mode '{s}'"))
    }
}

/// Parameter record shared by all model kinds. Energies are absolute; the
/// measured qubit's bias `eps2` sets the unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub eps2: f64,
    /// Tunnelling of the measured qubit relative to its bias.
    pub delta2_ratio: f64,
    pub eta2: f64,
    pub eps1: f64,
    pub delta1: f64,
    /// Suppression of FQ1 tunnelling; only used when FQ1 is annealed.
    pub eta1: f64,
    pub eps_scale: f64,
    /// Qubit-resonator detuning over coupling.
    pub delta_over_g: f64,
    /// Resonator frequency as a fraction of the effective measured-qubit frequency.
    pub omega_r_ratio: f64,
    /// Qubit-qubit coupling in units of `w2 - w1`.
    pub j_ratio: f64,
    pub n_max: usize,
    /// FQ1 mixing angle from `tan = eps1 / delta1` instead of `delta1 / eps1`.
    pub literal_theta1: bool,
    /// Annealed-model shift with the tunnelling amplitude as SWT denominator.
    pub literal_lambda2: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eps2: 1.0,
            delta2_ratio: 1.0,
            eta2: 1.25,
            eps1: 0.7,
            delta1: 0.35,
            eta1: 1.25,
            eps_scale: 10.0,
            delta_over_g: 8.0,
            omega_r_ratio: 0.5,
            j_ratio: 0.05,
            n_max: 27,
            literal_theta1: false,
            literal_lambda2: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub basis: BasisTag,
    pub mode: InteractionMode,
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, basis: BasisTag, mode: InteractionMode, params: ModelParams) -> Self {
        Self { kind, basis, mode, params }
    }

    pub fn with_basis(&self, basis: BasisTag) -> Self {
        Self { basis, ..*self }
    }

    pub fn with_mode(&self, mode: InteractionMode) -> Self {
        Self { mode, ..*self }
    }

    pub fn space(&self) -> FockSpace {
        FockSpace::new(self.params.n_max)
    }

    /// Label used in sweep output, e.g. `energy_q1q2:zz`.
    pub fn basis_label(&self) -> String {
        match self.mode {
            InteractionMode::Full => self.basis.label().to_string(),
            m => format!("{}:{}", self.basis.label(), m.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelWarning {
    /// `g |sin(theta)| / |delta|` above the dispersive threshold.
    DispersiveRegime(f64),
    /// Interaction mode used outside its angular regime.
    RegimeMismatch(InteractionMode),
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DispersiveRegime(r) => write!(f, "dispersive_ratio={r}"),
            Self::RegimeMismatch(m) => write!(f, "regime_{m}"),
        }
    }
}

/// Frequencies, angles and couplings implied by a parameter record.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub measured: EffectiveQubitParams,
    pub omega2: f64,
    pub theta2: f64,
    pub omega_r: f64,
    /// `w2 - w_r`
    pub delta2: f64,
    pub g: f64,
    pub chi: f64,
    pub omega1: f64,
    pub theta1: f64,
    /// `w1 - w_r`; only meaningful for the annealed model.
    pub delta1: f64,
    pub j: f64,
    pub warnings: Vec<ModelWarning>,
}

impl Derived {
    pub fn j_zz(&self) -> f64 {
        self.j * self.theta1.cos() * self.theta2.cos()
    }

    pub fn j_xx(&self) -> f64 {
        self.j * self.theta1.sin() * self.theta2.sin()
    }

    /// `delta2 + chi (2n + 1)`
    pub fn shifted_detuning(&self, n: f64) -> f64 {
        self.delta2 + self.chi * (2.0 * n + 1.0)
    }
}

pub fn derive(spec: &ModelSpec) -> Result<Derived, ModelError> {
    let p = &spec.params;
    let measured = effective_qubit(QubitParams::new(p.eps2, p.delta2_ratio * p.eps2), p.eta2, p.eps_scale);
    let omega2 = measured.omega_eff();
    let theta2 = measured.theta_eff();
    let omega_r = p.omega_r_ratio * omega2;
    let delta2 = omega2 - omega_r;
    if delta2 == 0.0 {
        return Err(ModelError::ZeroDetuning);
    }
    let g = delta2.abs() / p.delta_over_g;
    let sin2 = theta2.sin();
    let chi = if spec.kind == ModelKind::TwoQubitWithAnneal && p.literal_lambda2 {
        g * sin2 * (g * sin2 / measured.delta_eff())
    } else {
        g * g * sin2 * sin2 / delta2
    };
    let fq1 = QubitParams::new(p.eps1, p.delta1);
    let (omega1, theta1) = match spec.kind {
        ModelKind::TwoQubitWithAnneal => {
            let e = effective_qubit(fq1, p.eta1, p.eps_scale);
            (e.omega_eff(), e.theta_eff())
        }
        _ if p.literal_theta1 => (fq1.omega(), p.eps1.atan2(p.delta1)),
        _ => (fq1.omega(), fq1.theta()),
    };
    let j = p.j_ratio * (omega2 - omega1);
    let mut warnings = Vec::new();
    let ratio = g * sin2.abs() / delta2.abs();
    if ratio > DISPERSIVE_THRESHOLD {
        warnings.push(ModelWarning::DispersiveRegime(ratio));
    }
    if spec.kind.qubits() == 2 {
        let (c, s) = (
            theta1.cos().abs().min(theta2.cos().abs()),
            theta1.sin().abs().max(theta2.sin().abs()),
        );
        let (c_small, s_small) = (
            theta1.cos().abs().max(theta2.cos().abs()),
            theta1.sin().abs().min(theta2.sin().abs()),
        );
        let mismatch = match spec.mode {
            InteractionMode::ZZ => c <= s,
            InteractionMode::XX => c_small >= s_small,
            InteractionMode::Full => false,
        };
        if mismatch {
            warnings.push(ModelWarning::RegimeMismatch(spec.mode));
        }
    }
    Ok(Derived {
        measured,
        omega2,
        theta2,
        omega_r,
        delta2,
        g,
        chi,
        omega1,
        theta1,
        delta1: omega1 - omega_r,
        j,
        warnings,
    })
}

/// Photon-sector representation of a model Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonBlocks {
    /// Qubit-space matrix of sector `n` at index `n`.
    pub blocks: Vec<ComplexMatrix>,
    pub qubit_dims: Vec<usize>,
    pub derived: Derived,
}

impl PhotonBlocks {
    pub fn qubit_dim(&self) -> usize {
        self.qubit_dims.iter().product()
    }

    /// Full operator on qubit(s) (x) Fock.
    pub fn to_full(&self) -> ComplexMatrix {
        assemble_blocks(&self.blocks)
    }
}

fn axis(c: f64, s: f64) -> ComplexMatrix {
    pauli::zx(c, s)
}

fn unsupported(spec: &ModelSpec) -> ModelError {
    ModelError::UnsupportedBasis { kind: spec.kind, mode: spec.mode, basis: spec.basis }
}

/// Bare-representation sector Hamiltonian at real photon number `n`.
fn bare_sector(spec: &ModelSpec, d: &Derived, basis: BasisTag, n: f64) -> Result<ComplexMatrix, ModelError> {
    let dn = d.shifted_detuning(n);
    let (c2, s2) = (d.theta2.cos(), d.theta2.sin());
    let (c1, s1) = (d.theta1.cos(), d.theta1.sin());
    let id = pauli::identity();
    let (z, x) = (pauli::z(), pauli::x());
    use BasisTag::*;
    use InteractionMode::*;
    let measured_flux = kron(&id, &axis(c2, s2)).scale_real(-dn / 2.0);
    let measured_energy = kron(&id, &z).scale_real(-dn / 2.0);
    // FQ1's own term only exists once it is annealed.
    let fq1_flux = kron(&axis(c1, s1), &id).scale_real(-d.delta1 / 2.0);
    let fq1_energy = kron(&z, &id).scale_real(-d.delta1 / 2.0);
    let annealed = spec.kind == ModelKind::TwoQubitWithAnneal;
    let h = match (spec.kind, spec.mode, basis) {
        (ModelKind::SingleQubit, Full, Flux) => axis(c2, s2).scale_real(-dn / 2.0),
        (ModelKind::SingleQubit, Full, EnergyQ2) => z.scale_real(-dn / 2.0),
        (ModelKind::TwoQubitNoAnneal | ModelKind::TwoQubitWithAnneal, Full, Flux) => {
            let mut h = &measured_flux + &kron(&z, &z).scale_real(d.j);
            if annealed {
                h = &h + &fq1_flux;
            }
            h
        }
        (ModelKind::TwoQubitNoAnneal | ModelKind::TwoQubitWithAnneal, Full, EnergyQ2) => {
            let mut h = &measured_energy + &kron(&z, &axis(c2, -s2)).scale_real(d.j);
            if annealed {
                h = &h + &fq1_flux;
            }
            h
        }
        (ModelKind::TwoQubitNoAnneal | ModelKind::TwoQubitWithAnneal, mode, EnergyQ1Q2) => {
            let coupling = match mode {
                Full => kron(&axis(c1, -s1), &axis(c2, -s2)).scale_real(d.j),
                ZZ => kron(&z, &z).scale_real(d.j_zz()),
                XX => kron(&x, &x).scale_real(d.j_xx()),
            };
            let mut h = &measured_energy + &coupling;
            if annealed {
                h = &h + &fq1_energy;
            }
            h
        }
        (ModelKind::ExchangeReference, Full, EnergyQ1Q2) => {
            exchange_reference_hamiltonian(d.omega1, d.omega2, d.j, d.chi, n)
        }
        _ => return Err(unsupported(spec)),
    };
    Ok(h)
}

fn bare_counterpart(basis: BasisTag) -> BasisTag {
    match basis {
        BasisTag::DressedQ2 => BasisTag::EnergyQ2,
        BasisTag::DressedQ1Q2 => BasisTag::EnergyQ1Q2,
        b => b,
    }
}

/// Builds the photon-sector blocks of `spec` in its basis.
pub fn build_blocks(spec: &ModelSpec) -> Result<PhotonBlocks, ModelError> {
    let d = derive(spec)?;
    let n = spec.params.n_max;
    let bare = bare_counterpart(spec.basis);
    if spec.kind == ModelKind::SingleQubit && bare != spec.basis {
        return Err(unsupported(spec));
    }
    let mut blocks = (0..n).map(|k| bare_sector(spec, &d, bare, k as f64)).collect::<Result<Vec<_>, _>>()?;
    if bare != spec.basis {
        let frame = dressing_frame(spec, &d)?;
        blocks = blocks.iter().map(|b| frame.conjugate(b)).collect();
    }
    Ok(PhotonBlocks { blocks, qubit_dims: vec![2; spec.kind.qubits()], derived: d })
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<ComplexMatrix, ModelError> {
    Ok(build_blocks(spec)?.to_full())
}

/// Dressed counterpart of `spec`: its bare energy representation rotated
/// into the eigenbasis of the qubit Hamiltonian without photon shift.
pub fn dressed_model_hamiltonian(spec: &ModelSpec) -> Result<ComplexMatrix, ModelError> {
    let dressed = match spec.basis {
        BasisTag::EnergyQ2 | BasisTag::DressedQ2 => BasisTag::DressedQ2,
        BasisTag::EnergyQ1Q2 | BasisTag::DressedQ1Q2 => BasisTag::DressedQ1Q2,
        _ => return Err(unsupported(spec)),
    };
    build_hamiltonian(&spec.with_basis(dressed))
}

/// Bare-to-dressed transform `W` (rows are dressed states), so that a
/// dressed-coordinate operator is `W h W^dag`.
///
/// The reference Hamiltonian is the bare sector with the photon shift
/// removed (`delta_n -> delta2`). Where the coupling pairs basis states into
/// 2x2 blocks each block is rotated by its own angle; otherwise eigenvectors
/// are labelled by largest overlap with the bare states.
pub fn dressing_frame(spec: &ModelSpec, d: &Derived) -> Result<ComplexMatrix, ModelError> {
    let bare = bare_counterpart(spec.basis);
    let no_shift = Derived { chi: 0.0, ..d.clone() };
    let h_ref = bare_sector(spec, &no_shift, bare, -0.5)?;
    if spec.kind == ModelKind::ExchangeReference {
        let (_, u) = exchange_dressed_transform((d.omega2 - d.omega1) / 2.0, d.j)?;
        return Ok(u);
    }
    match pair_blocks(&h_ref) {
        Some(pairs) => {
            let mut w = ComplexMatrix::identity(h_ref.rows());
            for (i, j) in pairs {
                let h = (h_ref[(i, i)].re - h_ref[(j, j)].re) / 2.0;
                let b = h_ref[(i, j)].re;
                let r = flux_energy_unitary(block_angle(h, b)?);
                for (a, p) in [i, j].into_iter().enumerate() {
                    for (bb, q) in [i, j].into_iter().enumerate() {
                        w[(p, q)] = r[(a, bb)];
                    }
                }
            }
            Ok(w)
        }
        None => Ok(labelled_eigenframe(&h_ref)?),
    }
}

/// Index pairs coupled by off-diagonal entries when every state couples to
/// at most one other; `None` when larger clusters exist.
fn pair_blocks(h: &ComplexMatrix) -> Option<Vec<(usize, usize)>> {
    let n = h.rows();
    let mut partner = vec![None; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if h[(i, j)].norm() > 0.0 {
                if partner[i].is_some() || partner[j].is_some() {
                    return None;
                }
                partner[i] = Some(j);
                partner[j] = Some(i);
            }
        }
    }
    if h.entries().iter().any(|e| e.im != 0.0) {
        return None;
    }
    Some((0..n).filter_map(|i| partner[i].filter(|&j| j > i).map(|j| (i, j))).collect())
}

fn labelled_eigenframe(h: &ComplexMatrix) -> Result<ComplexMatrix, ModelError> {
    let eig = hermitian_eig(h)?;
    let n = h.rows();
    let mut assigned = vec![false; n];
    let mut w = ComplexMatrix::zeros(n, n);
    // Greedy assignment in order of decreasing overlap.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for k in 0..n {
        for b in 0..n {
            pairs.push((eig.vectors[(b, k)].norm(), b, k));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_vec = vec![false; n];
    for (_, b, k) in pairs {
        if assigned[b] || used_vec[k] {
            continue;
        }
        assigned[b] = true;
        used_vec[k] = true;
        let v = eig.vectors.column(k);
        let phase = v[b].conj() / v[b].norm();
        for (q, c) in v.iter().enumerate() {
            w[(b, q)] = (c * phase).conj();
        }
    }
    Ok(w)
}

/// Initial state of FQ1 in the coordinates of `spec.basis`: the ground state
/// of its (effective) Hamiltonian.
pub fn fq1_initial_state(spec: &ModelSpec, d: &Derived) -> StateVector {
    match spec.basis {
        BasisTag::EnergyQ1Q2 | BasisTag::DressedQ1Q2 => vec![ONE, ZERO],
        _ => {
            let (s, c) = (d.theta1 / 2.0).sin_cos();
            vec![C64::new(c, 0.0), C64::new(s, 0.0)]
        }
    }
}

/// Exchange-coupled pair at fixed photon number in the bare product basis:
/// `-w1/2 sz1 - w2/2 sz2 + J/2 (sx sx + sy sy) + chi n sz1`.
pub fn exchange_reference_hamiltonian(w1: f64, w2: f64, j: f64, chi: f64, photon_n: f64) -> ComplexMatrix {
    let id = pauli::identity();
    let (z, x, y) = (pauli::z(), pauli::x(), pauli::y());
    let mut h = kron(&z, &id).scale_real(-w1 / 2.0 + chi * photon_n);
    h = &h + &kron(&id, &z).scale_real(-w2 / 2.0);
    &h + &(&kron(&x, &x) + &kron(&y, &y)).scale_real(j / 2.0)
}

/// Same Hamiltonian in the dressed basis of the `chi = 0` problem.
pub fn exchange_reference_dressed(w1: f64, w2: f64, j: f64, chi: f64, photon_n: f64) -> Result<ComplexMatrix, ModelError> {
    let (_, u) = exchange_dressed_transform((w2 - w1) / 2.0, j)?;
    Ok(u.conjugate(&exchange_reference_hamiltonian(w1, w2, j, chi, photon_n)))
}

/// Which of the two invariant blocks a ratio refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

/// Bare and dressed off-diagonal/diagonal ratios for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverReport {
    pub branch: Option<Branch>,
    pub bare_ratio: f64,
    pub dressed_ratio: f64,
    /// Mean photon number where both ratios coincide.
    pub crossover_photons: Option<f64>,
    /// Coherent amplitude with that mean photon number.
    pub crossover_value: Option<f64>,
}

/// Shape of the validity ratios as a function of `c = chi (n + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RatioForm {
    /// bare `|J/(A + c)|`, dressed `|J c / (A (A + c) + J^2)|`.
    Difference { a: f64, j: f64 },
    /// bare `|J/(A + c)|`, dressed `|J (2A + c) / (A (A + c) + J^2)|`.
    Sum { a: f64, j: f64 },
    Trivial { bare: f64 },
}

impl RatioForm {
    fn ratios(&self, c: f64) -> (f64, f64) {
        match *self {
            RatioForm::Difference { a, j } => ((j / (a + c)).abs(), (j * c / (a * (a + c) + j * j)).abs()),
            RatioForm::Sum { a, j } => ((j / (a + c)).abs(), (j * (2.0 * a + c) / (a * (a + c) + j * j)).abs()),
            RatioForm::Trivial { bare } => (bare, 0.0),
        }
    }

    /// Candidate values of `c` where the two ratios are equal.
    fn crossings(&self) -> Vec<f64> {
        match *self {
            RatioForm::Difference { a, j } if j != 0.0 => {
                let r = a.hypot(j);
                vec![r, -r]
            }
            RatioForm::Sum { a, j } if j != 0.0 => vec![j.abs() - a, -j.abs() - a],
            _ => Vec::new(),
        }
    }
}

fn ratio_forms(spec: &ModelSpec, d: &Derived) -> Result<Vec<(Option<Branch>, RatioForm)>, ModelError> {
    use InteractionMode::*;
    let half = d.delta2 / 2.0;
    Ok(match (spec.kind, spec.mode) {
        (ModelKind::SingleQubit, _) => {
            let q = d.measured;
            vec![(None, RatioForm::Trivial { bare: (q.delta_eff() / q.epsilon_eff()).abs() })]
        }
        (ModelKind::TwoQubitNoAnneal | ModelKind::TwoQubitWithAnneal, ZZ) => {
            vec![(None, RatioForm::Trivial { bare: 0.0 })]
        }
        (ModelKind::TwoQubitNoAnneal, Full) => {
            let (jzz, jzx) = (d.j * d.theta2.cos(), d.j * d.theta2.sin());
            [Branch::Minus, Branch::Plus]
                .into_iter()
                .map(|b| (Some(b), RatioForm::Difference { a: half + b.sign() * jzz, j: jzx }))
                .collect()
        }
        (ModelKind::TwoQubitNoAnneal, XX) => vec![(None, RatioForm::Difference { a: half, j: d.j_xx() })],
        (ModelKind::TwoQubitWithAnneal, XX) => vec![
            (Some(Branch::Minus), RatioForm::Difference { a: (d.delta2 - d.delta1) / 2.0, j: d.j_xx() }),
            (Some(Branch::Plus), RatioForm::Sum { a: (d.delta2 + d.delta1) / 2.0, j: d.j_xx() }),
        ],
        (kind, mode) => return Err(ModelError::NoRatio(kind, mode)),
    })
}

/// Validity ratios at mean photon number `photon_n`, one report per block.
pub fn rwa_ratio(spec: &ModelSpec, photon_n: f64) -> Result<Vec<CrossoverReport>, ModelError> {
    let d = derive(spec)?;
    let c = d.chi * (photon_n + 0.5);
    Ok(ratio_forms(spec, &d)?
        .into_iter()
        .map(|(branch, form)| {
            let (bare_ratio, dressed_ratio) = form.ratios(c);
            let crossover_photons = form
                .crossings()
                .into_iter()
                .map(|cc| cc / d.chi - 0.5)
                .filter(|n| *n >= 0.0 && n.is_finite())
                .min_by(f64::total_cmp);
            CrossoverReport {
                branch,
                bare_ratio,
                dressed_ratio,
                crossover_photons,
                crossover_value: crossover_photons.map(f64::sqrt),
            }
        })
        .collect())
}

/// Coherent amplitude at which bare and dressed ratios of `branch` coincide.
pub fn solve_crossover(spec: &ModelSpec, branch: Option<Branch>) -> Result<f64, ModelError> {
    rwa_ratio(spec, 0.0)?
        .into_iter()
        .find(|r| r.branch == branch)
        .and_then(|r| r.crossover_value)
        .ok_or(ModelError::NoCrossoverInRange)
}
