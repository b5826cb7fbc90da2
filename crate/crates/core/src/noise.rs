//! Markovian noise: Lindblad dissipators, channel extraction, Pauli-basis
//! decomposition, the non-Hermiticity measure `G` and the operator-norm bound
//! on observable errors.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{conj, ensure_square, kron, op_norm, CMatrix, C64, ONE, ZERO};
use crate::liouville::{vectorize, StateVec, SuperOp};
use crate::pauli::{all_paulis, PauliString};

/// Tolerance used to decide whether a map is trace preserving.
pub const TRACE_PRESERVING_TOL: f64 = 1e-9;

/// Jump operator with a nonnegative rate. The rate is folded into the jump
/// operator (`A ← √rate·A`) when the Lindbladian is assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator {
    pub jump: CMatrix,
    pub rate: f64,
}

impl Dissipator {
    pub fn new(jump: CMatrix, rate: f64) -> Result<Self> {
        ensure_square(&jump, "jump operator")?;
        crate::linalg::ensure_finite(&jump)?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Invalid(format!("dissipator rate {rate} must be finite and >= 0")));
        }
        Ok(Self { jump, rate })
    }

    pub fn superop(&self) -> SuperOp {
        lindblad_superop(&self.jump.scale(self.rate.sqrt()))
    }
}

/// A list of dissipators plus an optional depolarizing error attached to
/// every non-identity twirl Pauli.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseModel {
    pub dissipators: Vec<Dissipator>,
    pub twirl_depolarizing: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(dissipators: Vec<Dissipator>) -> Self {
        Self { dissipators, twirl_depolarizing: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.dissipators.iter().all(|d| d.rate == 0.0)
    }

    /// Same jump operators with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dissipators: self
                .dissipators
                .iter()
                .map(|d| Dissipator { jump: d.jump.clone(), rate: d.rate * factor })
                .collect(),
            twirl_depolarizing: self.twirl_depolarizing,
        }
    }

    /// `𝓛 = Σ_k 𝓛(√γ_k A_k)` on a Hilbert space of dimension `hilbert_dim`.
    pub fn lindbladian(&self, hilbert_dim: usize) -> Result<SuperOp> {
        let mut acc = SuperOp::zeros(hilbert_dim);
        for d in &self.dissipators {
            if d.jump.nrows() != hilbert_dim {
                return Err(Error::Dimension(format!(
                    "jump operator of size {} on a {hilbert_dim}-dimensional system",
                    d.jump.nrows()
                )));
            }
            acc = acc + d.superop();
        }
        Ok(acc)
    }
}

/// `𝓛(A) = A⊗A* − ½(A†A)⊗I − ½I⊗(A†A)ᵀ`.
pub fn lindblad_superop(a: &CMatrix) -> SuperOp {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "jump operator must be square");
    let id = CMatrix::identity(d, d);
    let ada = a.adjoint() * a;
    let half = C64::new(0.5, 0.0);
    let mat = kron(a, &conj(a)) - kron(&ada, &id) * half - kron(&id, &ada.transpose()) * half;
    SuperOp::from_matrix(mat).expect("d²×d² by construction")
}

/// Embed a single-qubit operator on `qubit` of an `n`-qubit register.
pub fn embed_single_qubit(op: &CMatrix, qubit: usize, n: usize) -> Result<CMatrix> {
    if qubit >= n {
        return Err(Error::Invalid(format!("qubit index {qubit} out of range for {n} qubits")));
    }
    let id = CMatrix::identity(2, 2);
    let mut m = CMatrix::from_element(1, 1, ONE);
    for q in 0..n {
        m = kron(&m, if q == qubit { op } else { &id });
    }
    Ok(m)
}

/// Amplitude damping (T₁) on one qubit: jump operator `σ⁻ = |0⟩⟨1|`.
pub fn amplitude_damping(qubit: usize, gamma: f64, n: usize) -> Result<Dissipator> {
    let lowering = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    Dissipator::new(embed_single_qubit(&lowering, qubit, n)?, gamma)
}

/// Pure dephasing on one qubit: jump operator `σ_z`. Hermitian jump.
pub fn dephasing(qubit: usize, gamma: f64, n: usize) -> Result<Dissipator> {
    let z = PauliString::single(1, 0, 'Z')?.matrix();
    Dissipator::new(embed_single_qubit(&z, qubit, n)?, gamma)
}

/// Random Lindbladian for property tests: `count` jump operators with
/// i.i.d. complex Gaussian entries, each normalized to unit operator norm and
/// given rate `strength`.
///
/// This is an in-house ensemble, not any particular published one.
pub fn random_noise_model<R: Rng + ?Sized>(hilbert_dim: usize, count: usize, strength: f64, rng: &mut R) -> NoiseModel {
    let dissipators = (0..count)
        .map(|_| {
            let a = CMatrix::from_fn(hilbert_dim, hilbert_dim, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let norm = op_norm(&a);
            Dissipator { jump: a.unscale(norm), rate: strength }
        })
        .collect();
    NoiseModel::new(dissipators)
}

/// Noise channel `𝒩 = 𝒰†𝒦` of a gate `𝒦` with ideal unitary `𝒰`.
pub fn extract_noise(k: &SuperOp, u_ideal: &SuperOp) -> Result<SuperOp> {
    k.check_same_dim(u_ideal)?;
    Ok(u_ideal.adjoint() * k)
}

/// `G = ‖𝒩 − 𝒩†‖ / ‖2𝒩‖`: 0 for Hermitian maps, 1 for anti-Hermitian.
pub fn hermiticity_g(n: &SuperOp) -> Result<f64> {
    let denom = 2.0 * n.op_norm();
    if denom == 0.0 {
        return Err(Error::Invalid("non-Hermiticity of the zero map is undefined".into()));
    }
    Ok((n - &n.adjoint()).op_norm() / denom)
}

/// Coefficients `N_αβ` of `𝒩 = Σ N_αβ P_α ⊗ P_β*`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTransfer {
    pub n: usize,
    pub coeffs: CMatrix,
}

impl PauliTransfer {
    pub fn reconstruct(&self) -> SuperOp {
        let paulis: Vec<CMatrix> = all_paulis(self.n).iter().map(PauliString::matrix).collect();
        let d = 1usize << self.n;
        let mut acc = CMatrix::zeros(d * d, d * d);
        for (a, pa) in paulis.iter().enumerate() {
            for (b, pb) in paulis.iter().enumerate() {
                let c = self.coeffs[(a, b)];
                if c != ZERO {
                    acc += kron(pa, &conj(pb)) * c;
                }
            }
        }
        SuperOp::from_matrix(acc).expect("square by construction")
    }

    /// Largest `|N_αβ|` with `α ≠ β`.
    pub fn max_off_diagonal(&self) -> f64 {
        let k = self.coeffs.nrows();
        (0..k)
            .flat_map(|a| (0..k).filter(move |b| *b != a).map(move |b| (a, b)))
            .map(|(a, b)| self.coeffs[(a, b)].norm())
            .fold(0.0, f64::max)
    }
}

/// `N_αβ = tr[(P_α⊗P_β*)† 𝒩] / 4ⁿ`.
pub fn pauli_transfer_decompose(channel: &SuperOp, n: usize) -> Result<PauliTransfer> {
    let d = 1usize << n;
    if channel.hilbert_dim() != d {
        return Err(Error::Dimension(format!("channel on dimension {} is not a {n}-qubit map", channel.hilbert_dim())));
    }
    let paulis: Vec<CMatrix> = all_paulis(n).iter().map(PauliString::matrix).collect();
    let k = paulis.len();
    let norm = (d * d) as f64;
    let m = channel.matrix();
    let mut coeffs = CMatrix::zeros(k, k);
    // (P_α ⊗ P_β*)_{(i,j),(r,s)} = P_α[i,r] P_β*[j,s]; both are monomial.
    for (a, pa) in paulis.iter().enumerate() {
        for (b, pb) in paulis.iter().enumerate() {
            let mut acc = ZERO;
            for i in 0..d {
                let (r, par) = nonzero_in_row(pa, i);
                for j in 0..d {
                    let (s, pbs) = nonzero_in_row(pb, j);
                    let basis = par * pbs.conj();
                    acc += basis.conj() * m[(i * d + j, r * d + s)];
                }
            }
            coeffs[(a, b)] = acc / norm;
        }
    }
    Ok(PauliTransfer { n, coeffs })
}

fn nonzero_in_row(p: &CMatrix, row: usize) -> (usize, C64) {
    (0..p.ncols())
        .find(|&c| p[(row, c)] != ZERO)
        .map(|c| (c, p[(row, c)]))
        .expect("Pauli matrices have one nonzero per row")
}

/// Both sides of the observable error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Whether the traceless-shifted observable was used.
    pub trace_preserving: bool,
}

impl ErrorBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-14
    }
}

/// `|⟨A|(𝒦−𝒰)|ρ₀⟩| ≤ √⟨A'|A'⟩ √⟨ρ₀|ρ₀⟩ ‖𝒦−𝒰‖`, with `A' = A − tr(A)I/d`
/// when both maps preserve trace and `A' = A` otherwise.
pub fn observable_error_bound(a: &CMatrix, rho0: &StateVec, k: &SuperOp, u: &SuperOp) -> Result<ErrorBound> {
    k.check_same_dim(u)?;
    let d = ensure_square(a, "observable")?;
    if d != k.hilbert_dim() || d != rho0.hilbert_dim() {
        return Err(Error::Dimension("observable, state and maps disagree in dimension".into()));
    }
    let diff = k - u;
    let a_vec = vectorize(a)?;
    let lhs = a_vec.inner(&diff.apply(rho0)?)?.norm();

    let trace_preserving = is_trace_preserving(k) && is_trace_preserving(u);
    let shifted = if trace_preserving {
        let shift = a.trace() / C64::new(d as f64, 0.0);
        a - CMatrix::identity(d, d) * shift
    } else {
        a.clone()
    };
    let rhs = vectorize(&shifted)?.norm() * rho0.norm() * diff.op_norm();
    Ok(ErrorBound { lhs, rhs, trace_preserving })
}

/// `⟨I|𝒦 = ⟨I|` to [`TRACE_PRESERVING_TOL`].
pub fn is_trace_preserving(k: &SuperOp) -> bool {
    let d = k.hilbert_dim();
    let shifted = k - &SuperOp::identity(d);
    shifted.trace_row_deviation() <= TRACE_PRESERVING_TOL
}
