//! Mixing angles and unitary changes of basis: flux to energy for a single
//! qubit, bare to dressed for exchange-coupled pairs and for the 2x2 blocks
//! of the dispersive two-qubit models.
//!
//! Convention: a transform `U` returned here maps coordinates of the source
//! basis to coordinates of the target basis, so an operator becomes
//! `U H U^dagger` and a state becomes `U psi`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hilbert::{ComplexMatrix, StateVector, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("degenerate qubit: epsilon = delta = 0")]
    DegenerateQubit,
    #[error("degenerate splitting: detuning and coupling both vanish")]
    DegenerateSplitting,
    #[error("singular mixing angle: zero denominator ({0})")]
    SingularAngle(&'static str),
}

/// Two-level flux qubit `H = -(eps sz + delta sx) / 2`, angular-frequency units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl QubitParams {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta }
    }

    /// Transition frequency `sqrt(eps^2 + delta^2)`.
    pub fn omega(&self) -> f64 {
        self.epsilon.hypot(self.delta)
    }

    /// `atan2(delta, eps)`; zero for the degenerate qubit.
    pub fn theta(&self) -> f64 {
        self.delta.atan2(self.epsilon)
    }

    /// Qubit Hamiltonian in the flux basis.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        crate::hilbert::pauli::zx(-self.epsilon / 2.0, -self.delta / 2.0)
    }

    /// Ground state in flux coordinates.
    pub fn ground_state_flux(&self) -> StateVector {
        let half = self.theta() / 2.0;
        vec![C64::new(half.cos(), 0.0), C64::new(half.sin(), 0.0)]
    }
}

/// Basis in which a model Hamiltonian is written and the qubit is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisTag {
    /// Persistent-current states of every qubit.
    Flux,
    /// Energy basis of the measured qubit; any partner stays in its flux basis.
    EnergyQ2,
    /// Product of both qubits' energy bases.
    EnergyQ1Q2,
    /// Eigenbasis of the coupled measured-qubit blocks, partner in flux basis.
    DressedQ2,
    /// Eigenbasis of the coupled two-qubit blocks built on `EnergyQ1Q2`.
    DressedQ1Q2,
}

impl BasisTag {
    pub const ALL: [BasisTag; 5] =
        [Self::Flux, Self::EnergyQ2, Self::EnergyQ1Q2, Self::DressedQ2, Self::DressedQ1Q2];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Flux => "flux",
            Self::EnergyQ2 => "energy_q2",
            Self::EnergyQ1Q2 => "energy_q1q2",
            Self::DressedQ2 => "dressed_q2",
            Self::DressedQ1Q2 => "dressed_q1q2",
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BasisTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flux" => Ok(Self::Flux),
            "energy" | "energy_q2" => Ok(Self::EnergyQ2),
            "energy_q1q2" => Ok(Self::EnergyQ1Q2),
            "dressed" | "dressed_q2" => Ok(Self::DressedQ2),
            "dressed_q1q2" => Ok(Self::DressedQ1Q2),
            other => Err(format!("unknown basis '{other}'")),
        }
    }
}

pub fn mixing_angle(q: QubitParams) -> Result<f64, BasisError> {
    if q.epsilon == 0.0 && q.delta == 0.0 {
        return Err(BasisError::DegenerateQubit);
    }
    Ok(q.theta())
}

/// `[[cos(t/2), sin(t/2)], [-sin(t/2), cos(t/2)]]`: flux to energy coordinates.
///
/// For `t = mixing_angle(q)` it maps `q.hamiltonian()` to `diag(-w/2, w/2)`,
/// so energy index 0 is the ground state.
pub fn flux_energy_unitary(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_real(2, 2, &[c, s, -s, c])
}

/// Angle `atan(b / h)` that diagonalizes `h sz + b sx` while keeping the
/// sign of the diagonal; continuous at `b = 0`.
pub fn block_angle(h: f64, b: f64) -> Result<f64, BasisError> {
    if h == 0.0 && b == 0.0 {
        return Ok(0.0);
    }
    if h == 0.0 {
        return Err(BasisError::SingularAngle("block diagonal splitting"));
    }
    Ok((b * h.signum()).atan2(h.abs()))
}

/// Dressed transform for exchange-coupled qubits with half-detuning `delta0`
/// and exchange `j`. Returns `gamma0` with `sin(gamma0) = sgn(delta0) J / r`
/// and the 4x4 bare-to-dressed transform; `|00>` and `|11>` are untouched.
pub fn exchange_dressed_transform(delta0: f64, j: f64) -> Result<(f64, ComplexMatrix), BasisError> {
    let r = delta0.hypot(j);
    if r == 0.0 {
        return Err(BasisError::DegenerateSplitting);
    }
    let sgn = if delta0 < 0.0 { -1.0 } else { 1.0 };
    let gamma0 = (sgn * j).atan2(delta0.abs());
    let (s, c) = (gamma0 / 2.0).sin_cos();
    // Rows are the dressed states (real): |0~1~> = c|01> + s|10>,
    // |1~0~> = -s|01> + c|10>.
    let u = ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, c, s, 0.0, //
            0.0, -s, c, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    Ok((gamma0, u))
}

/// Angles of the two measured-qubit blocks of the flux-dominated two-qubit
/// model: `tan(theta_{n-+}) = +-j_zx / (delta_n/2 -+ j_zz)`.
///
/// Returns `(theta_minus, theta_plus)`.
pub fn fq2_dressed_angles(delta_n: f64, j_zz: f64, j_zx: f64) -> Result<(f64, f64), BasisError> {
    let den_minus = delta_n / 2.0 - j_zz;
    let den_plus = delta_n / 2.0 + j_zz;
    if den_minus == 0.0 || den_plus == 0.0 {
        return Err(BasisError::SingularAngle("delta_n/2 +- j_zz"));
    }
    let atan_ratio = |num: f64, den: f64| (num * den.signum()).atan2(den.abs());
    Ok((atan_ratio(j_zx, den_minus), atan_ratio(-j_zx, den_plus)))
}
