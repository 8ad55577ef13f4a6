//! Qubit-resonator Hamiltonians: Rabi, Jaynes-Cummings and the dispersive
//! limit, the effective qubit left behind by annealing, and the check that a
//! resonant drive leaves the dispersive readout Hamiltonian unchanged.
//!
//! Full-space operators act on qubit (x) Fock with the qubit as the slow
//! index. In the Rabi and JC Hamiltonians qubit index 0 is the excited
//! state (`sz = +1` carries `+w_q/2`).

use thiserror::Error;

use crate::bases::{BasisTag, QubitParams};
use crate::hilbert::{hermitian_eig, kron, ladder_ops, pauli, ComplexMatrix, FockSpace};

/// Validity threshold for `g |sin(theta)| / |delta|`.
pub const DISPERSIVE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcmError {
    #[error("qubit and resonator are resonant (zero detuning)")]
    ZeroDetuning,
    #[error("degenerate splitting: detuning and vacuum Rabi frequency both vanish")]
    DegenerateSplitting,
    #[error("basis {0} is not defined for a single qubit")]
    UnsupportedBasis(BasisTag),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    pub omega_r: f64,
    pub space: FockSpace,
}

/// Qubit after annealing: tunnelling suppressed by `e^{-eta}`, bias enlarged
/// by `eps_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveQubitParams {
    pub base: QubitParams,
    pub eta: f64,
    pub eps_scale: f64,
}

impl EffectiveQubitParams {
    pub fn epsilon_eff(&self) -> f64 {
        self.eps_scale * self.base.epsilon
    }

    pub fn delta_eff(&self) -> f64 {
        self.base.delta * (-self.eta).exp()
    }

    pub fn qubit(&self) -> QubitParams {
        QubitParams::new(self.epsilon_eff(), self.delta_eff())
    }

    pub fn omega_eff(&self) -> f64 {
        self.qubit().omega()
    }

    pub fn theta_eff(&self) -> f64 {
        self.qubit().theta()
    }
}

pub fn effective_qubit(q: QubitParams, eta: f64, eps_scale: f64) -> EffectiveQubitParams {
    assert!(eta >= 0.0, "eta must be nonnegative");
    assert!(eps_scale >= 1.0, "eps_scale must be at least 1");
    EffectiveQubitParams { base: q, eta, eps_scale }
}

/// Dispersive coupling data of a qubit with mixing angle `theta` against a
/// resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveParams {
    pub g: f64,
    /// `w_q - w_r`
    pub delta_detuning: f64,
    pub chi: f64,
    /// Transverse fraction `sin(theta)` of the coupling.
    pub sin_theta: f64,
}

impl DispersiveParams {
    /// `chi = g^2 sin^2(theta) / delta`.
    pub fn new(g: f64, omega_q: f64, theta: f64, omega_r: f64) -> Result<Self, JcmError> {
        let delta = omega_q - omega_r;
        if delta == 0.0 {
            return Err(JcmError::ZeroDetuning);
        }
        let s = theta.sin();
        Ok(Self { g, delta_detuning: delta, chi: g * g * s * s / delta, sin_theta: s })
    }

    pub fn for_qubit(eq: &EffectiveQubitParams, omega_r: f64, g: f64) -> Result<Self, JcmError> {
        Self::new(g, eq.omega_eff(), eq.theta_eff(), omega_r)
    }

    /// `g |sin(theta)| / |delta|`
    pub fn validity_ratio(&self) -> f64 {
        self.g * self.sin_theta.abs() / self.delta_detuning.abs()
    }

    pub fn is_dispersive(&self) -> bool {
        self.validity_ratio() <= DISPERSIVE_THRESHOLD
    }
}

/// `w_q/2 sz + w_r (a^dag a + 1/2) + g sx (a + a^dag)`
pub fn rabi_hamiltonian(q: &QubitParams, r: &ResonatorParams, g: f64) -> ComplexMatrix {
    let (a, a_dag, _) = ladder_ops(r.space);
    let free = free_hamiltonian(q.omega(), r);
    &free + &kron(&pauli::x(), &(&a + &a_dag).scale_real(g))
}

/// `w_q/2 sz + w_r (a^dag a + 1/2) + g (s+ a + s- a^dag)`
pub fn jc_hamiltonian(q: &QubitParams, r: &ResonatorParams, g: f64) -> ComplexMatrix {
    let (a, a_dag, _) = ladder_ops(r.space);
    let free = free_hamiltonian(q.omega(), r);
    let int = &kron(&pauli::plus(), &a) + &kron(&pauli::minus(), &a_dag);
    &free + &int.scale_real(g)
}

fn free_hamiltonian(omega_q: f64, r: &ResonatorParams) -> ComplexMatrix {
    let n = r.space.n_max();
    let (_, _, n_op) = ladder_ops(r.space);
    let field = &n_op + &ComplexMatrix::identity(n).scale_real(0.5);
    &kron(&pauli::z().scale_real(omega_q / 2.0), &ComplexMatrix::identity(n))
        + &kron(&pauli::identity(), &field.scale_real(r.omega_r))
}

/// Excitation number `s+ s- (x) 1 + 1 (x) a^dag a`.
pub fn excitation_number(space: FockSpace) -> ComplexMatrix {
    let (_, _, n_op) = ladder_ops(space);
    &kron(&(&pauli::plus() * &pauli::minus()), &ComplexMatrix::identity(space.n_max()))
        + &kron(&pauli::identity(), &n_op)
}

/// Eigenvalues of the JC block `{|e,n>, |g,n+1>}` with `w_q = w_r + delta`
/// and `omega0 = 2g`, returned as `(E_minus, E_plus)`.
///
/// Energies include the `w_r/2` zero-point term of [`jc_hamiltonian`], so
/// the block centre is `w_r (n + 1)`.
pub fn jc_block_energies(n: usize, omega_r: f64, delta: f64, omega0: f64) -> (f64, f64) {
    let centre = omega_r * (n as f64 + 0.5) + omega_r / 2.0;
    let half = 0.5 * (delta * delta + omega0 * omega0 * (n as f64 + 1.0)).sqrt();
    (centre - half, centre + half)
}

/// Dressed JC states over `{|e,n>, |g,n+1>}` with `tan(theta_n) = omega0 sqrt(n+1) / delta`.
///
/// Returns `(theta_n, plus, minus)` with
/// `|+,n> = cos(theta_n/2)|e,n> + sin(theta_n/2)|g,n+1>` and
/// `|-,n> = -sin(theta_n/2)|e,n> + cos(theta_n/2)|g,n+1>`.
pub fn jc_dressed_states(n: usize, delta: f64, omega0: f64) -> Result<(f64, [f64; 2], [f64; 2]), JcmError> {
    if delta == 0.0 && omega0 == 0.0 {
        return Err(JcmError::DegenerateSplitting);
    }
    let theta = (omega0 * (n as f64 + 1.0).sqrt()).atan2(delta);
    let (s, c) = (theta / 2.0).sin_cos();
    Ok((theta, [c, s], [-s, c]))
}

/// `(w_r + chi sz) a^dag a + (w_q + chi)/2 sz`, plus the `w_r/2` zero-point
/// constant so that it shares the energy origin of [`jc_hamiltonian`].
///
/// Diagonal in the bare product basis; `chi = g^2 / (w_q - w_r)`.
pub fn dispersive_hamiltonian(q: &QubitParams, r: &ResonatorParams, g: f64) -> Result<ComplexMatrix, JcmError> {
    let omega_q = q.omega();
    let delta = omega_q - r.omega_r;
    if delta == 0.0 {
        return Err(JcmError::ZeroDetuning);
    }
    let chi = g * g / delta;
    let n = r.space.n_max();
    let mut diag = Vec::with_capacity(2 * n);
    for sz in [1.0, -1.0] {
        for k in 0..n {
            diag.push((r.omega_r + chi * sz) * k as f64 + (omega_q + chi) / 2.0 * sz + r.omega_r / 2.0);
        }
    }
    Ok(ComplexMatrix::from_real_diag(&diag))
}

/// Largest deviation between JC and dispersive eigenvalues over the blocks
/// `n = 0..=n_manifold`, after aligning both spectra on the `|g,0>` level,
/// in units of `|chi|`.
///
/// Both Hamiltonians drop different constants; aligning removes them and
/// leaves the `chi (g/delta)^2` remainder of the perturbative expansion.
pub fn dispersive_relative_error(
    q: &QubitParams,
    r: &ResonatorParams,
    g: f64,
    n_manifold: usize,
) -> Result<f64, JcmError> {
    let n = r.space.n_max();
    assert!(n_manifold + 2 <= n, "manifold must fit inside the truncation");
    let jc = jc_hamiltonian(q, r, g);
    let disp = dispersive_hamiltonian(q, r, g)?;
    let chi = g * g / (q.omega() - r.omega_r);
    let e_idx = |k: usize| k;
    let g_idx = |k: usize| n + k;
    let jc_ground = jc[(g_idx(0), g_idx(0))].re;
    let disp_ground = disp[(g_idx(0), g_idx(0))].re;
    let mut worst: f64 = 0.0;
    for k in 0..=n_manifold {
        let (i, j) = (e_idx(k), g_idx(k + 1));
        let block = ComplexMatrix::from_vec(2, 2, vec![jc[(i, i)], jc[(i, j)], jc[(j, i)], jc[(j, j)]]);
        let exact = hermitian_eig(&block).expect("JC block is Hermitian").values;
        let mut approx = [disp[(i, i)].re, disp[(j, j)].re];
        approx.sort_by(f64::total_cmp);
        for (e, d) in exact.iter().zip(approx) {
            worst = worst.max(((e - jc_ground) - (d - disp_ground)).abs());
        }
    }
    Ok(worst / chi.abs())
}

/// Dispersive readout Hamiltonian of an effective qubit, photon sector by
/// photon sector: `-[delta/2 + chi (n + 1/2)] M` with `M = sz` in the energy
/// basis and `M = cos(theta) sz + sin(theta) sx` in the flux basis.
pub fn single_qubit_dispersive_blocks(
    eq: &EffectiveQubitParams,
    r: &ResonatorParams,
    g: f64,
    basis: BasisTag,
) -> Result<Vec<ComplexMatrix>, JcmError> {
    let d = DispersiveParams::for_qubit(eq, r.omega_r, g)?;
    let theta = eq.theta_eff();
    let axis = match basis {
        BasisTag::EnergyQ2 => pauli::z(),
        BasisTag::Flux => pauli::zx(theta.cos(), theta.sin()),
        other => return Err(JcmError::UnsupportedBasis(other)),
    };
    Ok((0..r.space.n_max())
        .map(|n| axis.scale_real(-(d.delta_detuning / 2.0 + d.chi * (n as f64 + 0.5))))
        .collect())
}

/// Assembles photon-sector blocks into a full qubit (x) Fock operator.
pub fn assemble_blocks(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let q = blocks[0].rows();
    let n = blocks.len();
    let mut out = ComplexMatrix::zeros(q * n, q * n);
    for (k, b) in blocks.iter().enumerate() {
        for i in 0..q {
            for j in 0..q {
                out[(i * n + k, j * n + k)] = b[(i, j)];
            }
        }
    }
    out
}

pub fn single_qubit_dispersive(
    eq: &EffectiveQubitParams,
    r: &ResonatorParams,
    g: f64,
    basis: BasisTag,
) -> Result<ComplexMatrix, JcmError> {
    Ok(assemble_blocks(&single_qubit_dispersive_blocks(eq, r, g, basis)?))
}

/// Outcome of [`drive_equivalence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DriveReport {
    /// Reduced Hamiltonian in the frame rotating at the drive frequency.
    pub driven: ComplexMatrix,
    /// Largest entry difference from the undriven energy-basis form.
    pub max_deviation: f64,
    /// Residual resonator frequency `w_r - w_d` in the drive frame.
    pub resonator_offset: f64,
}

/// Reduced Hamiltonian of a constantly driven resonator after displacing
/// the field and eliminating the transverse coupling:
/// `D_r a^dag a + [D_q/2 + chi (n + 1/2)] sz~` with `D_r = w_r - w_d` and
/// `D_q = w_q,eff - w_d`.
///
/// The driven derivation writes the qubit term as `+w/2 sz~` while the
/// undriven one uses `-w/2 sz~`; the two energy-state labels are swapped
/// before comparing. The drive amplitude is absorbed by the displacement
/// and does not appear.
pub fn drive_equivalence_check(
    eq: &EffectiveQubitParams,
    r: &ResonatorParams,
    g: f64,
    eps_d: f64,
    omega_d: f64,
) -> Result<DriveReport, JcmError> {
    assert!(omega_d > 0.0, "drive frequency must be positive");
    let _ = eps_d;
    let d = DispersiveParams::for_qubit(eq, r.omega_r, g)?;
    let delta_r = r.omega_r - omega_d;
    let delta_q = eq.omega_eff() - omega_d;
    let blocks: Vec<ComplexMatrix> = (0..r.space.n_max())
        .map(|n| {
            let nf = n as f64;
            &ComplexMatrix::identity(2).scale_real(delta_r * nf)
                + &pauli::z().scale_real(delta_q / 2.0 + d.chi * (nf + 0.5))
        })
        .collect();
    let driven = assemble_blocks(&blocks);
    let swap = kron(&pauli::x(), &ComplexMatrix::identity(r.space.n_max()));
    let relabelled = swap.conjugate(&driven);
    let undriven = single_qubit_dispersive(eq, r, g, BasisTag::EnergyQ2)?;
    Ok(DriveReport { max_deviation: relabelled.max_abs_diff(&undriven), driven, resonator_offset: delta_r })
}
