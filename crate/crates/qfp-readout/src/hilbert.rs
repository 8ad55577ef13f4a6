//! Dense complex linear algebra and operator factories for qubit and
//! truncated Fock spaces.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Column state vector.
pub type StateVector = Vec<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("Fock truncation too small: pre-normalization norm {norm:.3e} for n_max={n_max}")]
    TruncationTooSmall { n_max: usize, norm: f64 },
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_diag(&diag.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// `|psi><psi|`
    pub fn outer(psi: &[C64]) -> Self {
        let n = psi.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest off-diagonal entry magnitude.
    pub fn max_offdiag(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && (self * &self.adjoint()).max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.max_offdiag() <= tol
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &[C64]) -> StateVector {
        assert_eq!(self.cols, v.len(), "vector length must equal column count");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `<u| self |v>`
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let w = self.apply(v);
        u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn column(&self, j: usize) -> StateVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        m
    }

    /// `self * m * self^dagger`
    pub fn conjugate(&self, m: &Self) -> Self {
        &(self * m) * &self.adjoint()
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Sum of a list of equally sized matrices.
pub fn sum(terms: &[ComplexMatrix]) -> ComplexMatrix {
    let mut it = terms.iter();
    let first = it.next().expect("at least one term").clone();
    it.fold(first, |acc, t| &acc + t)
}

/// Tensor product; the first factor is the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> StateVector {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

pub mod pauli {
    //! Single-qubit operators in the ordering (|0>, |1>); in the flux basis
    //! |0> is the clockwise current state.
    use super::{ComplexMatrix, C64};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    /// Raising operator `|0><1|`.
    pub fn plus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }

    /// Lowering operator `|1><0|`.
    pub fn minus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0])
    }

    /// `c_z * sz + c_x * sx`
    pub fn zx(c_z: f64, c_x: f64) -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[c_z, c_x, c_x, -c_z])
    }
}

/// Truncated bosonic space spanned by |0> ... |n_max - 1>.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Self {
        assert!(n_max >= 2, "Fock truncation must be at least 2");
        Self { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Truncation rule under which a coherent state of amplitude `alpha`
    /// is normalized to within 1e-8.
    pub fn supports_coherent(&self, alpha: f64) -> bool {
        self.n_max as f64 >= alpha * alpha + 8.0 * alpha + 10.0
    }

    /// Rule for accurate displacement matrices: `|nu|^2 + 6|nu| + 8 <= n_max`.
    pub fn supports_displacement(&self, nu: f64) -> bool {
        nu * nu + 6.0 * nu + 8.0 <= self.n_max as f64
    }

    pub fn basis(&self, n: usize) -> StateVector {
        let mut v = vec![ZERO; self.n_max];
        v[n] = ONE;
        v
    }
}

/// Annihilation, creation and number operators.
pub fn ladder_ops(space: FockSpace) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let n = space.n_max();
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    let n_op = &a_dag * &a;
    (a, a_dag, n_op)
}

/// Coherent-state amplitudes `e^{-a^2/2} a^n / sqrt(n!)`, unnormalized.
pub fn coherent_amplitudes(n_max: usize, alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max);
    let mut c = (-alpha * alpha / 2.0).exp();
    for n in 0..n_max {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Normalized coherent state on the truncated space.
pub fn coherent_state(space: FockSpace, alpha: f64) -> Result<StateVector, LinalgError> {
    let amps = coherent_amplitudes(space.n_max(), alpha);
    let norm = amps.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm < 1.0 - 1e-6 {
        return Err(LinalgError::TruncationTooSmall { n_max: space.n_max(), norm });
    }
    Ok(amps.iter().map(|c| C64::new(c / norm, 0.0)).collect())
}

/// Displacement operator `exp(nu a^dag - nu^* a)` on the truncated space.
///
/// Accurate in the interior block when `space.supports_displacement(|nu|)`.
pub fn displacement(space: FockSpace, nu: C64) -> ComplexMatrix {
    let (a, a_dag, _) = ladder_ops(space);
    // exp(G) with anti-Hermitian G equals exp(-i K) for Hermitian K = iG.
    let g = &a_dag.scale(nu) - &a.scale(nu.conj());
    let k = g.scale(I);
    evolve(&k, 1.0).expect("generator is Hermitian by construction")
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors as columns; the largest-magnitude component of each
    /// column is real and positive.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<Eigen, LinalgError> {
    let herr = h.hermiticity_error();
    let scale = h.max_abs().max(1.0);
    if herr > 1e-10 * scale {
        return Err(LinalgError::NotHermitian(herr));
    }
    let n = h.rows();
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = &h.scale_real(0.5) + &h.adjoint().scale_real(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vecs = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let v = vecs.column(src);
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
        let phase = if max > 0.0 { v[pivot].conj() / v[pivot].norm() } else { ONE };
        for (row, z) in v.iter().enumerate() {
            vectors[(row, col)] = z * phase;
        }
    }
    Ok(Eigen { values, vectors })
}

/// `exp(-i h t)` via eigendecomposition.
pub fn evolve(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(h)?;
    let phases: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
    let v = &eig.vectors;
    let n = v.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for (k, p) in phases.iter().enumerate() {
                acc += v[(i, k)] * p * v[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix on the factors listed in `keep`.
pub fn partial_trace(
    rho: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(LinalgError::DimMismatch(format!(
            "rho is {}x{}, factor dims {:?} multiply to {}",
            rho.rows(),
            rho.cols(),
            dims,
            total
        )));
    }
    if let Some(&k) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(LinalgError::DimMismatch(format!("keep index {k} out of range")));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
    let kept_dim: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let traced_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // Flat offset of a mixed-radix index over the listed factors.
    let offset = |sub: &[usize], digits: usize| -> usize {
        let mut rem = digits;
        let mut off = 0;
        for &f in sub.iter().rev() {
            off += (rem % dims[f]) * strides[f];
            rem /= dims[f];
        }
        off
    };

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        let ro = offset(&keep_sorted, r);
        for c in 0..kept_dim {
            let co = offset(&keep_sorted, c);
            let mut acc = ZERO;
            for t in 0..traced_dim {
                let to = offset(&traced, t);
                acc += rho[(ro + to, co + to)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()] * (1.0 + 0.37 * k as f64).sin()
        };
        for i in 0..n {
            m[(i, i)] = c(next(), 0.0);
            for j in i + 1..n {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn kron_sz_identity_is_block_sign() {
        let k = kron(&pauli::z(), &pauli::identity());
        assert_eq!(k, ComplexMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0]));
        assert_eq!(kron(&pauli::identity(), &pauli::identity()), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_sx_sx_is_antidiagonal() {
        let k = kron(&pauli::x(), &pauli::x());
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expect, 0.0));
            }
        }
    }

    #[test]
    fn ladder_operator_actions() {
        let space = FockSpace::new(6);
        let (a, a_dag, n_op) = ladder_ops(space);
        assert_eq!(a.apply(&space.basis(1)), space.basis(0));
        assert_eq!(a_dag, a.adjoint());
        assert!(n_op.is_diagonal(0.0));
        for k in 0..6 {
            assert_abs_diff_eq!(n_op[(k, k)].re, k as f64, epsilon = 1e-14);
        }
        // Truncation leaves -(n_max - 1) in the last diagonal slot.
        let comm = a.commutator(&a_dag);
        for k in 0..5 {
            assert_abs_diff_eq!(comm[(k, k)].re, 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(comm[(5, 5)].re, -5.0, epsilon = 1e-13);
        assert!(comm.is_diagonal(1e-14));
    }

    #[test]
    fn coherent_state_components() {
        let s = FockSpace::new(27);
        let v = coherent_state(s, 0.0).unwrap();
        assert_eq!(v, s.basis(0));
        let v = coherent_state(s, 1.0).unwrap();
        assert_abs_diff_eq!(v[0].re, 0.606_530_659_712_633_4, epsilon = 1e-12);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(matches!(
            coherent_state(FockSpace::new(4), 2.0),
            Err(LinalgError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn displacement_properties() {
        let s = FockSpace::new(30);
        let d0 = displacement(s, ZERO);
        assert!(d0.max_abs_diff(&ComplexMatrix::identity(30)) < 1e-12);

        let d1 = displacement(s, c(1.0, 0.0));
        assert_abs_diff_eq!(d1[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(d1[(0, 0)].im, 0.0, epsilon = 1e-10);
        let col = d1.column(0);
        let coh = coherent_state(s, 1.0).unwrap();
        for k in 0..30 {
            assert!((col[k] - coh[k]).norm() < 1e-10);
        }

        // D^dag a D = a + alpha on the interior block.
        let alpha = c(0.7, 0.0);
        let d = displacement(s, alpha);
        let (a, _, _) = ladder_ops(s);
        let lhs = &(&d.adjoint() * &a) * &d;
        let rhs = &a + &ComplexMatrix::identity(30).scale(alpha);
        assert!(lhs.block(0, 0, 15, 15).max_abs_diff(&rhs.block(0, 0, 15, 15)) < 1e-9);
    }

    #[test]
    fn eig_of_paulis() {
        let e = hermitian_eig(&pauli::z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let e = hermitian_eig(&pauli::x()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // Ties in magnitude pick the first component as the real positive one.
        assert!((e.vectors.column(0)[0] - c(r, 0.0)).norm() < 1e-12);
        assert!((e.vectors.column(0)[1] - c(-r, 0.0)).norm() < 1e-12);
        assert!((e.vectors.column(1)[1] - c(r, 0.0)).norm() < 1e-12);
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])),
            Err(LinalgError::NotHermitian(_))
        ));
    }

    #[test]
    fn evolve_sz_quarter_period() {
        let u = evolve(&pauli::z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u[(0, 0)] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(evolve(&pauli::x(), 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn partial_trace_cases() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![c(r, 0.0), ZERO, ZERO, c(r, 0.0)];
        let rho = ComplexMatrix::outer(&bell);
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-14);

        // 2x3 product state, explicit contraction of the first factor.
        let a = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let b = vec![c(0.5, 0.1), c(-0.3, 0.4), c(0.2, -0.1)];
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let b: Vec<C64> = b.iter().map(|z| z / nb).collect();
        let rho = ComplexMatrix::outer(&kron_vec(&a, &b));
        let red = partial_trace(&rho, &[2, 3], &[1]).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::outer(&b)) < 1e-12);
        let red = partial_trace(&rho, &[2, 3], &[0]).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::outer(&a)) < 1e-12);

        assert!(matches!(partial_trace(&rho, &[2, 2], &[0]), Err(LinalgError::DimMismatch(_))));
    }

    #[test]
    fn partial_trace_three_factors_matches_manual_sum() {
        let h = random_hermitian(12, &[0.3, -1.2, 0.7, 2.1, -0.4]);
        let rho = evolve(&h, 0.3).unwrap();
        // Keep the middle factor of 2x3x2.
        let red = partial_trace(&rho, &[2, 3, 2], &[1]).unwrap();
        for r in 0..3 {
            for cc in 0..3 {
                let mut acc = ZERO;
                for i in 0..2 {
                    for k in 0..2 {
                        acc += rho[(i * 6 + r * 2 + k, i * 6 + cc * 2 + k)];
                    }
                }
                assert!((acc - red[(r, cc)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn bch_second_order_spot_check() {
        let h = random_hermitian(4, &[0.5, -0.9, 1.3, 0.2]);
        let k = random_hermitian(4, &[0.8, 0.1, -0.6, 1.1]);
        for &eps in &[0.1, 0.05] {
            // S = -i eps K is anti-Hermitian; e^S = evolve(K, eps).
            let s = k.scale(C64::new(0.0, -eps));
            let es = evolve(&k, eps).unwrap();
            let lhs = es.conjugate(&h);
            let c1 = s.commutator(&h);
            let c2 = s.commutator(&c1);
            let rhs = sum(&[h.clone(), c1, c2.scale_real(0.5)]);
            let err = lhs.max_abs_diff(&rhs);
            assert!(err < 5.0 * eps.powi(3) * k.max_abs().powi(3) * h.max_abs() * 8.0);
        }
    }

    fn hermitian_strategy(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec(-2.0f64..2.0, n * n * 2).prop_map(move |v| {
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = c(v[2 * (i * n + i)], 0.0);
                for j in i + 1..n {
                    let z = c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        })
    }

    proptest! {
        #[test]
        fn evolve_is_unitary(h in hermitian_strategy(5), t in -10.0f64..10.0) {
            let u = evolve(&h, t).unwrap();
            prop_assert!(u.is_unitary(1e-9));
        }

        #[test]
        fn evolve_group_property(h in hermitian_strategy(4), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let lhs = &evolve(&h, t1).unwrap() * &evolve(&h, t2).unwrap();
            let rhs = evolve(&h, t1 + t2).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }

        #[test]
        fn eig_reconstructs(h in hermitian_strategy(6)) {
            let e = hermitian_eig(&h).unwrap();
            prop_assert!(e.vectors.is_unitary(1e-9));
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let hv = &h * &e.vectors;
            let vd = &e.vectors * &ComplexMatrix::from_real_diag(&e.values);
            prop_assert!(hv.max_abs_diff(&vd) < 1e-9);
        }

        #[test]
        fn kron_is_associative(a in hermitian_strategy(2), b in hermitian_strategy(2), cm in hermitian_strategy(2)) {
            let l = kron(&kron(&a, &b), &cm);
            let r = kron(&a, &kron(&b, &cm));
            prop_assert!(l.max_abs_diff(&r) < 1e-13);
        }

        #[test]
        fn partial_trace_keeps_trace_and_positivity(h in hermitian_strategy(6), t in 0.0f64..2.0) {
            // A random pure state from a unitary column, mixed with identity.
            let u = evolve(&h, t).unwrap();
            let psi = u.column(0);
            let rho = &ComplexMatrix::outer(&psi).scale_real(0.7)
                + &ComplexMatrix::identity(6).scale_real(0.3 / 6.0);
            for keep in [[0usize], [1usize]] {
                let red = partial_trace(&rho, &[2, 3], &keep).unwrap();
                prop_assert!((red.trace().re - 1.0).abs() < 1e-12);
                prop_assert!(red.is_hermitian(1e-13));
                let e = hermitian_eig(&red).unwrap();
                prop_assert!(e.values[0] >= -1e-10);
            }
        }
    }
}
