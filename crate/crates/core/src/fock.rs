//! Truncated Fock-space arithmetic.
//!
//! Every operator and state carries the [`FockSpace`] it lives in; binary
//! operations reject operands from different spaces. Storage is dense: the
//! single-mode spaces used here stay at a few hundred levels at most.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{laguerre_sequence, log_factorials};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Number of retained Fock levels, `|0⟩ … |dim−1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub const DEFAULT_DIM: usize = 100;

    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ensure_same(&self, other: &FockSpace) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::SpaceMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    /// Indices of the even (`parity == 0`) or odd (`parity == 1`) levels.
    pub fn parity_levels(&self, parity: usize) -> Vec<usize> {
        (0..self.dim).filter(|n| n % 2 == parity % 2).collect()
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self { dim: Self::DEFAULT_DIM }
    }
}

pub fn make_space(dim: usize) -> Result<FockSpace> {
    FockSpace::new(dim)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖A − A†‖_max`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Dense operator on a Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    space: FockSpace,
    matrix: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(space: FockSpace, matrix: CMatrix, hermitian: bool) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch { left: d, right: matrix.nrows().max(matrix.ncols()) });
        }
        if hermitian {
            let err = hermiticity_error(&matrix);
            if err > HERMITIAN_TOL {
                return Err(Error::Domain(format!("operator flagged Hermitian deviates by {err:e}")));
            }
        }
        Ok(Self { space, matrix, hermitian })
    }

    fn from_parts(space: FockSpace, matrix: CMatrix, hermitian: bool) -> Self {
        Self { space, matrix, hermitian }
    }

    pub fn identity(space: FockSpace) -> Self {
        Self::from_parts(space, CMatrix::identity(space.dim(), space.dim()), true)
    }

    pub fn zeros(space: FockSpace) -> Self {
        Self::from_parts(space, CMatrix::zeros(space.dim(), space.dim()), true)
    }

    /// `⟨n−1|a|n⟩ = √n`.
    pub fn annihilation(space: FockSpace) -> Self {
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        for n in 1..d {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self::from_parts(space, m, false)
    }

    pub fn creation(space: FockSpace) -> Self {
        Self::annihilation(space).adjoint()
    }

    pub fn number_operator(space: FockSpace) -> Self {
        Self::diagonal(space, |n| n as f64)
    }

    /// Real diagonal operator `Σₙ f(n)|n⟩⟨n|`.
    pub fn diagonal(space: FockSpace, f: impl Fn(usize) -> f64) -> Self {
        let d = space.dim();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(f(i), 0.0) } else { C64::new(0.0, 0.0) });
        Self::from_parts(space, m, true)
    }

    /// Photon-number parity `(−1)^n̂`.
    pub fn parity(space: FockSpace) -> Self {
        Self::diagonal(space, |n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// `D(β)` restricted to the space, from the analytic Laguerre matrix elements.
    pub fn displacement(space: FockSpace, beta: C64) -> Self {
        let d = space.dim();
        Self::from_parts(space, displacement_block(d, d, beta), false)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.space, self.matrix.adjoint(), self.hermitian)
    }

    pub fn multiply(&self, other: &OperatorMatrix) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_parts(self.space, &self.matrix * &other.matrix, false))
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_parts(self.space, &self.matrix + &other.matrix, self.hermitian && other.hermitian))
    }

    /// Multiply by a real scalar (keeps the Hermitian hint).
    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(self.space, &self.matrix * C64::new(s, 0.0), self.hermitian)
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Self::from_parts(self.space, m, false))
    }

    /// `A|ψ⟩` as a raw (unnormalized) amplitude vector.
    pub fn apply(&self, state: &StateVector) -> Result<CVector> {
        self.space.ensure_same(&state.space)?;
        Ok(&self.matrix * &state.amplitudes)
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let v = self.apply(state)?;
        Ok(state.amplitudes.dotc(&v))
    }

    /// `Tr(Aρ)`.
    pub fn expectation_mixed(&self, rho: &DensityOperator) -> Result<C64> {
        self.space.ensure_same(&rho.space)?;
        Ok((&self.matrix * &rho.matrix).trace())
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }
}

/// `⟨n|D(β)|m⟩` for `n < rows`, `m < cols`.
///
/// Uses `b_n` with `n₋ = min(n, m)`, `n₊ = max(n, m)`:
/// `e^{−|β|²/2} √(n₋!/n₊!) (−1)^{n₊−n} |β|^{n₊−n₋} L_{n₋}^{(n₊−n₋)}(|β|²)`
/// times the phase `e^{i(n−m) arg β}`.
pub fn displacement_block(rows: usize, cols: usize, beta: C64) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    let r = beta.norm();
    if r == 0.0 {
        for k in 0..rows.min(cols) {
            out[(k, k)] = C64::new(1.0, 0.0);
        }
        return out;
    }
    let x = r * r;
    let theta = beta.arg();
    let lr = r.ln();
    let top = rows.max(cols);
    let lf = log_factorials(top);
    let max_low = rows.min(cols);
    for diff in 0..top {
        // pairs (low, low + diff) with low < min(rows, cols) and the larger index in range
        let low_limit = max_low.min(top - diff);
        if low_limit == 0 {
            break;
        }
        let lag = laguerre_sequence(low_limit - 1, diff as f64, x);
        for (low, lval) in lag.iter().enumerate() {
            let high = low + diff;
            let log_pref = -0.5 * x + 0.5 * (lf[low] - lf[high]) + diff as f64 * lr;
            let mag = log_pref.exp() * lval;
            // below diagonal: n = high, m = low
            if high < rows && low < cols {
                let phase = C64::from_polar(1.0, diff as f64 * theta);
                out[(high, low)] = phase * mag;
            }
            // above diagonal: n = low, m = high, extra sign (−1)^diff
            if diff > 0 && low < rows && high < cols {
                let sign = if diff % 2 == 0 { 1.0 } else { -1.0 };
                let phase = C64::from_polar(1.0, -(diff as f64) * theta);
                out[(low, high)] = phase * (sign * mag);
            }
        }
    }
    out
}

pub fn displacement_matrix(space: FockSpace, beta: C64) -> OperatorMatrix {
    OperatorMatrix::displacement(space, beta)
}

pub fn annihilation(space: FockSpace) -> OperatorMatrix {
    OperatorMatrix::annihilation(space)
}

pub fn number_operator(space: FockSpace) -> OperatorMatrix {
    OperatorMatrix::number_operator(space)
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: FockSpace,
    amplitudes: CVector,
}

impl StateVector {
    /// Renormalizes `amplitudes`; fails on a (numerically) zero vector.
    pub fn from_amplitudes(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch { left: space.dim(), right: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm < 1e-150 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { space, amplitudes: amplitudes.unscale(norm) })
    }

    pub fn basis(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::OutOfRange { n, dim: space.dim() });
        }
        let mut v = CVector::zeros(space.dim());
        v[n] = C64::new(1.0, 0.0);
        Ok(Self { space, amplitudes: v })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator { space: self.space, matrix: m }
    }
}

/// Mixed state: Hermitian, unit trace. Positivity is not enforced on
/// construction; see [`DensityOperator::min_eigenvalue`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    space: FockSpace,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn from_matrix(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch { left: d, right: matrix.nrows().max(matrix.ncols()) });
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(Self { space, matrix })
    }

    /// Hermitize `(M + M†)/2` and divide by the trace.
    pub fn normalized(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch { left: d, right: matrix.nrows().max(matrix.ncols()) });
        }
        let h = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        if !tr.is_finite() || tr.abs() < 1e-300 {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Ok(Self { space, matrix: h.unscale(tr) })
    }

    /// `Σₙ pₙ|n⟩⟨n|`, renormalized.
    pub fn diagonal(space: FockSpace, probs: &[f64]) -> Result<Self> {
        if probs.len() != space.dim() {
            return Err(Error::SpaceMismatch { left: space.dim(), right: probs.len() });
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::Domain("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        for (n, p) in probs.iter().enumerate() {
            m[(n, n)] = C64::new(p / total, 0.0);
        }
        Ok(Self { space, matrix: m })
    }

    /// Hermitized copy of `matrix` with no trace check. Used for integrator
    /// output, where the trace is a diagnostic rather than an input contract.
    pub fn hermitized(space: FockSpace, matrix: &CMatrix) -> Self {
        let h = (matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Self { space, matrix: h }
    }

    pub fn pure(state: &StateVector) -> Self {
        state.to_density()
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.min_eigenvalue() >= -POSITIVITY_TOL
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `½ Tr|ρ − σ|`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        let diff = &self.matrix - &other.matrix;
        let h = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5 * SymmetricEigen::new(h).eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// `Σ wᵢ ρᵢ`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let space = first.1.space;
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        for (w, rho) in parts {
            space.ensure_same(&rho.space)?;
            m += &rho.matrix * C64::new(*w, 0.0);
        }
        Self::from_matrix(space, m)
    }

    /// Same state embedded in (or cut down to) another space, renormalized.
    pub fn resized(&self, space: FockSpace) -> Result<Self> {
        let d = space.dim();
        let k = d.min(self.space.dim());
        let mut m = CMatrix::zeros(d, d);
        m.view_mut((0, 0), (k, k)).copy_from(&self.matrix.view((0, 0), (k, k)));
        Self::normalized(space, m)
    }
}
