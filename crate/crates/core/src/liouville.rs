//! Liouville-space representation.
//!
//! A `d×d` density matrix is flattened row by row into a `d²` column vector:
//! entry `i·d + j` of `|ρ⟩` is `ρ_ij`. With this convention the product rule
//! `|B C D⟩ = (B ⊗ Dᵀ)|C⟩` holds, so a Kraus operator `K` becomes `K ⊗ K*`,
//! a unitary `U` becomes `U ⊗ U*` and a Hamiltonian `H` becomes the
//! generator `H ⊗ I − I ⊗ Hᵀ`. Column-major vectorization is never used.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    self, conj, ensure_finite, ensure_square, hermitian_deviation, kron, unitary_deviation, CMatrix, C64,
    VALIDATION_TOL,
};

/// Vectorized density matrix (or observable) `|ρ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    hilbert_dim: usize,
    data: DVector<C64>,
}

impl StateVec {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.data
    }

    /// `⟨self|other⟩ = Σ self*_k other_k`.
    pub fn inner(&self, other: &StateVec) -> Result<C64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "inner product of vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.data.dotc(&other.data))
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }
}

/// Flatten a square matrix row by row.
pub fn vectorize(b: &CMatrix) -> Result<StateVec> {
    let d = ensure_square(b, "vectorize input")?;
    let data = DVector::from_iterator(d * d, (0..d).flat_map(|i| (0..d).map(move |j| b[(i, j)])));
    Ok(StateVec { hilbert_dim: d, data })
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &StateVec) -> CMatrix {
    let d = v.hilbert_dim;
    CMatrix::from_fn(d, d, |i, j| v.data[i * d + j])
}

/// Superoperator: a `d²×d²` matrix acting on vectorized `d×d` operators.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    hilbert_dim: usize,
    mat: CMatrix,
}

impl SuperOp {
    /// Wrap a `d²×d²` matrix; fails unless the size is a perfect square.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let n = ensure_square(&mat, "superoperator")?;
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::Dimension(format!("superoperator size {n} is not a perfect square")));
        }
        ensure_finite(&mat)?;
        Ok(Self { hilbert_dim: d, mat })
    }

    pub(crate) fn from_matrix_unchecked(hilbert_dim: usize, mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), hilbert_dim * hilbert_dim);
        Self { hilbert_dim, mat }
    }

    pub fn identity(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self { hilbert_dim, mat: CMatrix::identity(n, n) }
    }

    pub fn zeros(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self { hilbert_dim, mat: CMatrix::zeros(n, n) }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Liouville dimension `d²`.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { hilbert_dim: self.hilbert_dim, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { hilbert_dim: self.hilbert_dim, mat: self.mat.scale(s) }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { hilbert_dim: self.hilbert_dim, mat: &self.mat * s }
    }

    pub fn expm(&self) -> Self {
        Self { hilbert_dim: self.hilbert_dim, mat: linalg::expm(&self.mat) }
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(&self.mat)
    }

    /// Operator norm of `self − other`.
    pub fn distance(&self, other: &SuperOp) -> f64 {
        (self - other).op_norm()
    }

    pub fn apply(&self, rho: &StateVec) -> Result<StateVec> {
        self.check_same_dim_vec(rho)?;
        Ok(StateVec { hilbert_dim: self.hilbert_dim, data: &self.mat * &rho.data })
    }

    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }

    pub fn check_same_dim(&self, other: &SuperOp) -> Result<()> {
        if self.hilbert_dim != other.hilbert_dim {
            return Err(Error::Dimension(format!(
                "superoperators on Hilbert dimensions {} and {}",
                self.hilbert_dim, other.hilbert_dim
            )));
        }
        Ok(())
    }

    fn check_same_dim_vec(&self, v: &StateVec) -> Result<()> {
        if self.hilbert_dim != v.hilbert_dim {
            return Err(Error::Dimension(format!(
                "superoperator on dimension {} applied to state of dimension {}",
                self.hilbert_dim, v.hilbert_dim
            )));
        }
        Ok(())
    }

    /// Row `⟨I|𝒮`, which vanishes for trace-annihilating generators.
    pub fn trace_row_deviation(&self) -> f64 {
        let d = self.hilbert_dim;
        let n = self.dim();
        (0..n).map(|col| (0..d).map(|k| self.mat[(k * d + k, col)]).sum::<C64>().norm()).fold(0.0, f64::max)
    }
}

macro_rules! superop_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&SuperOp> for &SuperOp {
            type Output = SuperOp;
            fn $method(self, rhs: &SuperOp) -> SuperOp {
                assert_eq!(self.hilbert_dim, rhs.hilbert_dim, "superoperator dimension mismatch");
                SuperOp { hilbert_dim: self.hilbert_dim, mat: &self.mat $op &rhs.mat }
            }
        }
        impl $trait<SuperOp> for SuperOp {
            type Output = SuperOp;
            fn $method(self, rhs: SuperOp) -> SuperOp {
                &self $op &rhs
            }
        }
        impl $trait<&SuperOp> for SuperOp {
            type Output = SuperOp;
            fn $method(self, rhs: &SuperOp) -> SuperOp {
                &self $op rhs
            }
        }
        impl $trait<SuperOp> for &SuperOp {
            type Output = SuperOp;
            fn $method(self, rhs: SuperOp) -> SuperOp {
                self $op &rhs
            }
        }
    };
}

superop_binop!(Add, add, +);
superop_binop!(Sub, sub, -);
superop_binop!(Mul, mul, *);

impl Neg for SuperOp {
    type Output = SuperOp;
    fn neg(self) -> SuperOp {
        SuperOp { hilbert_dim: self.hilbert_dim, mat: -self.mat }
    }
}

/// `B ⊗ Dᵀ`, the superoperator of `C ↦ B C D`.
pub fn triple_product_superop(b: &CMatrix, d: &CMatrix) -> Result<SuperOp> {
    let db = ensure_square(b, "left factor")?;
    let dd = ensure_square(d, "right factor")?;
    if db != dd {
        return Err(Error::Dimension(format!("factors of size {db} and {dd}")));
    }
    Ok(SuperOp::from_matrix_unchecked(db, kron(b, &d.transpose())))
}

/// Liouville generator `H ⊗ I − I ⊗ Hᵀ` of a Hermitian Hamiltonian.
pub fn hamiltonian_superop(h: &CMatrix) -> Result<SuperOp> {
    let d = ensure_square(h, "Hamiltonian")?;
    let deviation = hermitian_deviation(h);
    if deviation > VALIDATION_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(hamiltonian_superop_unchecked(h, d))
}

pub(crate) fn hamiltonian_superop_unchecked(h: &CMatrix, d: usize) -> SuperOp {
    let id = CMatrix::identity(d, d);
    SuperOp::from_matrix_unchecked(d, kron(h, &id) - kron(&id, &h.transpose()))
}

/// `U ⊗ U*`.
pub fn unitary_superop(u: &CMatrix) -> Result<SuperOp> {
    let d = ensure_square(u, "unitary")?;
    let deviation = unitary_deviation(u);
    if deviation > VALIDATION_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(SuperOp::from_matrix_unchecked(d, kron(u, &conj(u))))
}

/// `Σ_k K_k ⊗ K_k*` for an arbitrary list of Kraus operators.
pub fn kraus_superop(kraus: &[CMatrix]) -> Result<SuperOp> {
    let first = kraus.first().ok_or_else(|| Error::Invalid("empty Kraus list".into()))?;
    let d = ensure_square(first, "Kraus operator")?;
    let mut acc = CMatrix::zeros(d * d, d * d);
    for k in kraus {
        if ensure_square(k, "Kraus operator")? != d {
            return Err(Error::Dimension("Kraus operators of different sizes".into()));
        }
        acc += kron(k, &conj(k));
    }
    Ok(SuperOp::from_matrix_unchecked(d, acc))
}

/// `⟨A|ρ⟩ = Σ A*_ij ρ_ij`, equal to `Tr(Aρ)` for Hermitian `A`.
pub fn expectation(a: &CMatrix, rho: &StateVec) -> Result<C64> {
    vectorize(a)?.inner(rho)
}

/// `|0…0⟩⟨0…0|` vectorized.
pub fn ground_state(hilbert_dim: usize) -> StateVec {
    let mut m = CMatrix::zeros(hilbert_dim, hilbert_dim);
    m[(0, 0)] = C64::new(1.0, 0.0);
    vectorize(&m).expect("square by construction")
}
