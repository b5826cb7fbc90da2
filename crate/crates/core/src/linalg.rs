//! Dense complex matrix kernels: Kronecker products, the matrix exponential
//! and the operator (spectral) norm.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix. All Hilbert-space operators live here.
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute tolerance for Hermiticity / unitarity validation.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Largest dimension for which the operator norm uses a full SVD.
const SVD_DIM_LIMIT: usize = 4096;
const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 10_000;

/// Build a matrix from row-major entries, rejecting non-finite values.
pub fn cmatrix(rows: usize, cols: usize, entries: &[C64]) -> Result<CMatrix> {
    if rows == 0 || cols == 0 || entries.len() != rows * cols {
        return Err(Error::Dimension(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
    }
    let m = CMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

/// Kronecker product `a ⊗ b` with `a` as the slow (outer) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Element-wise complex conjugate (not the adjoint).
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest absolute entry of `m − m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest absolute entry of `m†m − I`.
pub fn unitary_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(d, d)))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential (scaling and squaring Padé, via nalgebra).
pub fn expm(a: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    a.clone().exp()
}

/// Operator norm (largest singular value); NaN for non-finite input.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if ensure_finite(a).is_err() {
        return f64::NAN;
    }
    if a.nrows().max(a.ncols()) <= SVD_DIM_LIMIT {
        a.clone().singular_values().max()
    } else {
        power_iteration_norm(a)
    }
}

/// Operator norm from power iteration on `a†a`.
pub fn power_iteration_norm(a: &CMatrix) -> f64 {
    let n = a.ncols();
    let ah = a.adjoint();
    let mut v = DVector::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut estimate = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = &ah * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.unscale(norm);
        if (norm - estimate).abs() <= POWER_ITER_TOL * norm {
            estimate = norm;
            break;
        }
        estimate = norm;
    }
    estimate.sqrt()
}
