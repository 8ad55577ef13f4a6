//! Annealing schedule of the parametron, its tilted double-well potential,
//! the quantized coupled parametron-qubit Hamiltonian, storage fidelity and
//! the bare/dressed overlap of the displaced-oscillator picture.
//!
//! All quantities are dimensionless in units of the inductive energy unless
//! stated otherwise; the phase coordinate is the parametron's large-loop
//! phase.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::bases::{BasisTag, QubitParams};
use crate::hilbert::{kron, ladder_ops, pauli, ComplexMatrix, FockSpace};
use crate::special::{laguerre, normal_cdf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnealError {
    #[error("no stable minimum for beta={beta}, lambda={lambda}")]
    NoStableMinimum { beta: f64, lambda: f64 },
    #[error("degenerate qubit block: epsilon = 0 and dressed tunnelling = 0")]
    DegenerateQubit,
    #[error("storage fidelity is defined for flux and energy bases, not {0}")]
    UnsupportedBasis(BasisTag),
}

/// Parametron annealing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfpParams {
    /// Dimensionless impedance.
    pub xi: f64,
    pub beta_max: f64,
    /// Tilt induced by the qubit's persistent current.
    pub lambda: f64,
    /// Ramp rate of the schedule.
    pub omega: f64,
    /// Inductive energy, frequency units.
    pub e_l: f64,
}

impl QfpParams {
    /// Duration of the ramp, `pi / (2 omega)`.
    pub fn t_qfp(&self) -> f64 {
        FRAC_PI_2 / self.omega
    }

    /// Effective mass `1 / (2 xi)^2`.
    pub fn mass(&self) -> f64 {
        1.0 / (2.0 * self.xi).powi(2)
    }
}

impl Default for QfpParams {
    fn default() -> Self {
        Self { xi: 0.4, beta_max: 2.5, lambda: 0.1, omega: 1.0, e_l: 1.0 }
    }
}

/// `beta_max sin(omega t)` during the ramp, `beta_max` afterwards.
pub fn beta_schedule(p: &QfpParams, t: f64) -> f64 {
    if t >= p.t_qfp() {
        p.beta_max
    } else {
        p.beta_max * (p.omega * t).sin()
    }
}

/// Right-hand minimum of the tilted well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSolution {
    pub phi_p: f64,
    /// `1 - beta cos(phi_p)`, strictly positive.
    pub curvature: f64,
}

impl WellSolution {
    /// Small-oscillation frequency `2 xi sqrt(curvature)`.
    pub fn omega_eff(&self, xi: f64) -> f64 {
        2.0 * xi * self.curvature.sqrt()
    }

    /// Ground-state wavepacket width `(sqrt(curvature) / xi)^{-1/2}`.
    pub fn sigma_hat(&self, xi: f64) -> f64 {
        (self.curvature.sqrt() / xi).powf(-0.5)
    }
}

/// Smallest nonnegative root of `phi - beta sin(phi) - lambda` with positive
/// curvature, by safeguarded Newton iteration on `[0, pi + lambda]`.
pub fn solve_phi_p(beta: f64, lambda: f64) -> Result<WellSolution, AnnealError> {
    let fail = AnnealError::NoStableMinimum { beta, lambda };
    if !(beta >= 0.0 && lambda >= 0.0) {
        return Err(fail);
    }
    let f = |x: f64| x - beta * x.sin() - lambda;
    let df = |x: f64| 1.0 - beta * x.cos();
    // f decreases up to acos(1/beta) and increases afterwards, so the
    // stable root is the unique one to the right of that point.
    let mut lo = if beta > 1.0 { (1.0 / beta).acos() } else { 0.0 };
    let mut hi = PI + lambda;
    if f(lo) >= 0.0 {
        let curvature = df(lo);
        return if f(lo) == 0.0 && curvature > 0.0 {
            Ok(WellSolution { phi_p: lo, curvature })
        } else {
            Err(fail)
        };
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 4.0 * f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let curvature = df(x);
    if curvature <= 0.0 || f(x).abs() > 1e-12 {
        return Err(fail);
    }
    Ok(WellSolution { phi_p: x, curvature })
}

/// Well solution at time `t` of the schedule.
pub fn well_at(p: &QfpParams, t: f64) -> Result<WellSolution, AnnealError> {
    solve_phi_p(beta_schedule(p, t), p.lambda)
}

/// `phi^2/2 + beta cos(phi) - lambda phi sigma_z`
pub fn potential(beta: f64, lambda: f64, sigma_z: f64, phi: f64) -> f64 {
    phi * phi / 2.0 + beta * phi.cos() - lambda * phi * sigma_z
}

/// Potential value at the well minimum; independent of `sigma_z`.
pub fn potential_minimum(beta: f64, lambda: f64) -> Result<f64, AnnealError> {
    let w = solve_phi_p(beta, lambda)?;
    let s = w.phi_p.sin();
    Ok(0.5 * (beta * beta * s * s - lambda * lambda) + beta * w.phi_p.cos())
}

/// Second-order expansion of the potential around the minimum selected by
/// `sigma_z` (located at `sigma_z * phi_p`).
pub fn potential_taylor(beta: f64, lambda: f64, sigma_z: f64, phi: f64) -> Result<f64, AnnealError> {
    let w = solve_phi_p(beta, lambda)?;
    let u_min = potential_minimum(beta, lambda)?;
    let d = phi - sigma_z * w.phi_p;
    Ok(u_min + 0.5 * w.curvature * d * d)
}

/// Which component of the rotated energy-basis position enters the
/// storage fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMode {
    /// `phi_p cos(theta_q)`.
    #[default]
    RealPart,
    /// `phi_p`; makes both bases coincide.
    Magnitude,
}

/// Probability that the wavepacket sits on the correct side of the well at
/// time `t_m`, in the default projection mode.
pub fn storage_fidelity(
    p: &QfpParams,
    q: &QubitParams,
    t_m: f64,
    basis: BasisTag,
) -> Result<f64, AnnealError> {
    storage_fidelity_with(p, q, t_m, basis, ProjectionMode::default())
}

pub fn storage_fidelity_with(
    p: &QfpParams,
    q: &QubitParams,
    t_m: f64,
    basis: BasisTag,
    mode: ProjectionMode,
) -> Result<f64, AnnealError> {
    let w = well_at(p, t_m)?;
    let position = match basis {
        BasisTag::Flux => w.phi_p,
        BasisTag::EnergyQ2 | BasisTag::EnergyQ1Q2 => match mode {
            ProjectionMode::RealPart => w.phi_p * q.theta().cos(),
            ProjectionMode::Magnitude => w.phi_p,
        },
        other => return Err(AnnealError::UnsupportedBasis(other)),
    };
    Ok(normal_cdf(position / w.sigma_hat(p.xi)))
}

/// Coupled parametron-qubit Hamiltonian at time `t` on qubit (x) Fock:
/// `E_L [W a^dag a + W sqrt(m W / 2) phi_p (a + a^dag) sz]`, plus the bare
/// qubit term when `qubit` is given.
pub fn coupled_qfp_hamiltonian(
    p: &QfpParams,
    t: f64,
    space: FockSpace,
    qubit: Option<&QubitParams>,
) -> Result<ComplexMatrix, AnnealError> {
    let w = well_at(p, t)?;
    let omega = w.omega_eff(p.xi);
    let coupling = omega * (p.mass() * omega / 2.0).sqrt() * w.phi_p;
    let (a, a_dag, n_op) = ladder_ops(space);
    let x = &a + &a_dag;
    let mut h = &kron(&pauli::identity(), &n_op.scale_real(omega))
        + &kron(&pauli::z(), &x.scale_real(coupling));
    h = h.scale_real(p.e_l);
    if let Some(q) = qubit {
        h = &h + &kron(&q.hamiltonian(), &ComplexMatrix::identity(space.n_max()));
    }
    Ok(h)
}

/// Coupling `g(t) = E_L W sqrt(m W / 2) phi_p` and oscillator frequency
/// `E_L W` of [`coupled_qfp_hamiltonian`].
pub fn coupling_and_frequency(p: &QfpParams, t: f64) -> Result<(f64, f64), AnnealError> {
    let w = well_at(p, t)?;
    let omega = w.omega_eff(p.xi);
    Ok((p.e_l * omega * (p.mass() * omega / 2.0).sqrt() * w.phi_p, p.e_l * omega))
}

/// Diagonal Fock element `<N|D(beta)|N> = e^{-beta^2/2} L_N(beta^2)` for real `beta`.
pub fn displacement_diagonal(n: usize, beta: f64) -> f64 {
    let b2 = beta * beta;
    (-b2 / 2.0).exp() * laguerre(n, b2)
}

/// Overlap of bare and dressed states in Fock level `n`:
/// `cos((theta - theta_q)/2) <N|D(g/w_r)|N>`.
pub fn bare_dressed_overlap(n: usize, g_over_wr: f64, theta: f64, theta_q: f64) -> f64 {
    ((theta - theta_q) / 2.0).cos() * displacement_diagonal(n, g_over_wr)
}

/// Eigenvalues and mixing angle of the adiabatic 2x2 block of Fock level
/// `n` in the displaced-oscillator frame:
/// `[[E_N - eps/2, -delta s/2], [-delta s/2, E_N + eps/2]]`
/// with `E_N = w_r (N - g^2/w_r^2)` and `s = <N|D(-2g/w_r)|N>`.
///
/// Returns `(E_minus, E_plus, theta)`.
pub fn displaced_block_eigen(
    n: usize,
    eps: f64,
    delta: f64,
    g: f64,
    wr: f64,
) -> Result<(f64, f64, f64), AnnealError> {
    let e_n = wr * (n as f64 - (g / wr).powi(2));
    let s = displacement_diagonal(n, 2.0 * g / wr);
    let tunnel = delta * s;
    if eps == 0.0 && tunnel == 0.0 {
        return Err(AnnealError::DegenerateQubit);
    }
    let half = 0.5 * eps.hypot(tunnel);
    Ok((e_n - half, e_n + half, tunnel.atan2(eps)))
}

/// Explicit block of [`displaced_block_eigen`], for cross-checks.
pub fn displaced_block(n: usize, eps: f64, delta: f64, g: f64, wr: f64) -> ComplexMatrix {
    let e_n = wr * (n as f64 - (g / wr).powi(2));
    let s = displacement_diagonal(n, 2.0 * g / wr);
    ComplexMatrix::from_real(
        2,
        2,
        &[e_n - eps / 2.0, -delta * s / 2.0, -delta * s / 2.0, e_n + eps / 2.0],
    )
}
