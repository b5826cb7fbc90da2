//! n-qubit Pauli strings in symplectic form.
//!
//! Each qubit carries an `(x, z)` bit pair: `I = (0,0)`, `Z = (0,1)`,
//! `X = (1,0)`, `Y = (1,1)`. Global phases are dropped; they cancel in the
//! Liouville form `P ⊗ P*` used for twirling. Strings are enumerated by the
//! base-4 index whose digit for qubit `q` is `2·x_q + z_q`, qubit 0 being the
//! most significant digit, so the identity string has index 0.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conj, kron, CMatrix, C64, I, ONE, ZERO};
use crate::liouville::{hamiltonian_superop_unchecked, SuperOp};

/// Upper bound on the qubit count of a [`PauliString`].
pub const MAX_QUBITS: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n), "qubit count {n} out of range");
        Self { n, x: 0, z: 0 }
    }

    pub fn from_bits(n: usize, x: u64, z: u64) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(Error::Invalid(format!("qubit count {n} out of range")));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::Invalid("bits set beyond the qubit count".into()));
        }
        Ok(Self { n, x, z })
    }

    /// String with index `idx` in the canonical enumeration.
    pub fn from_index(n: usize, idx: usize) -> Self {
        assert!(idx < 1usize << (2 * n), "Pauli index {idx} out of range for {n} qubits");
        let mut p = Self::identity(n);
        for q in 0..n {
            let digit = (idx >> (2 * (n - 1 - q))) & 3;
            p.x |= ((digit >> 1) as u64) << q;
            p.z |= ((digit & 1) as u64) << q;
        }
        p
    }

    /// Single-qubit Pauli `label` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, label: char) -> Result<Self> {
        if qubit >= n {
            return Err(Error::Invalid(format!("qubit {qubit} out of range for {n} qubits")));
        }
        let mut s: Vec<char> = vec!['I'; n];
        s[qubit] = label;
        s.into_iter().collect::<String>().parse()
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn index(&self) -> usize {
        (0..self.n).fold(0usize, |acc, q| {
            let digit = (((self.x >> q) & 1) << 1 | ((self.z >> q) & 1)) as usize;
            acc << 2 | digit
        })
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn qubit_label(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (0, 1) => 'Z',
            (1, 0) => 'X',
            _ => 'Y',
        }
    }

    /// Phase-free product `P_a P_b`.
    pub fn product(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n, "Pauli strings of different length");
        PauliString { n: self.n, x: self.x ^ other.x, z: self.z ^ other.z }
    }

    /// Drop the Z component on every qubit flagged in `mask`.
    pub fn without_z_on(&self, mask: u64) -> PauliString {
        PauliString { n: self.n, x: self.x, z: self.z & !mask }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        symplectic_product(self, other) == 0
    }

    /// Dense `2ⁿ×2ⁿ` matrix, qubit 0 as the outermost tensor factor and
    /// `Y = [[0, −i], [i, 0]]`.
    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::from_element(1, 1, ONE);
        for q in 0..self.n {
            m = kron(&m, &single_qubit_matrix(self.qubit_label(q)));
        }
        m
    }

    /// `𝒫 = P ⊗ P*`.
    pub fn superop(&self) -> SuperOp {
        let p = self.matrix();
        SuperOp::from_matrix_unchecked(1 << self.n, kron(&p, &conj(&p)))
    }

    /// Liouville Hamiltonian `𝓗 = P ⊗ I − I ⊗ Pᵀ`.
    pub fn hamiltonian(&self) -> SuperOp {
        hamiltonian_superop_unchecked(&self.matrix(), 1 << self.n)
    }
}

fn single_qubit_matrix(label: char) -> CMatrix {
    let entries = match label {
        'I' => [ONE, ZERO, ZERO, ONE],
        'X' => [ZERO, ONE, ONE, ZERO],
        'Y' => [ZERO, -I, I, ZERO],
        'Z' => [ONE, ZERO, ZERO, -ONE],
        _ => unreachable!("labels are validated on construction"),
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

fn symplectic_product(a: &PauliString, b: &PauliString) -> u32 {
    ((a.x & b.z).count_ones() + (a.z & b.x).count_ones()) & 1
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels: Vec<char> = s.trim().chars().filter(|c| *c != '⊗').collect();
        let n = labels.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Invalid(format!("bad Pauli label {s:?}")));
        }
        let mut p = PauliString { n, x: 0, z: 0 };
        for (q, c) in labels.into_iter().enumerate() {
            let (xb, zb) = match c.to_ascii_uppercase() {
                'I' => (0, 0),
                'X' => (1, 0),
                'Y' => (1, 1),
                'Z' => (0, 1),
                other => return Err(Error::Invalid(format!("bad Pauli letter {other:?} in {s:?}"))),
            };
            p.x |= xb << q;
            p.z |= zb << q;
        }
        Ok(p)
    }
}

impl TryFrom<String> for PauliString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        (0..self.n).try_for_each(|q| write!(f, "{}", self.qubit_label(q)))
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// All `4ⁿ` strings in index order.
pub fn all_paulis(n: usize) -> Vec<PauliString> {
    (0..1usize << (2 * n)).map(|i| PauliString::from_index(n, i)).collect()
}

/// `+1` if the strings commute, `−1` if they anticommute.
pub fn sgn(alpha: &PauliString, beta: &PauliString) -> Result<i8> {
    if alpha.n != beta.n {
        return Err(Error::Dimension(format!("Pauli strings on {} and {} qubits", alpha.n, beta.n)));
    }
    Ok(sign_of(alpha, beta))
}

pub(crate) fn sign_of(alpha: &PauliString, beta: &PauliString) -> i8 {
    1 - 2 * symplectic_product(alpha, beta) as i8
}

/// Precomputed `sgn(α, β)` for every pair of `n`-qubit strings.
#[derive(Clone, Debug)]
pub struct SignTable {
    n: usize,
    signs: Vec<i8>,
}

impl SignTable {
    pub fn new(n: usize) -> Self {
        let paulis = all_paulis(n);
        let signs = paulis.iter().flat_map(|a| paulis.iter().map(move |b| sign_of(a, b))).collect();
        Self { n, signs }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, alpha: usize, beta: usize) -> i8 {
        self.signs[alpha * (1 << (2 * self.n)) + beta]
    }
}

const CACHED_QUBITS: usize = 4;

/// `𝒫_α` for every `n`-qubit string, in index order (cached for small n).
pub fn pauli_superops(n: usize) -> &'static [SuperOp] {
    static CACHE: [OnceLock<Vec<SuperOp>>; CACHED_QUBITS] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!(
        (1..=CACHED_QUBITS).contains(&n),
        "Pauli superoperators are only materialized for up to {CACHED_QUBITS} qubits"
    );
    CACHE[n - 1].get_or_init(|| all_paulis(n).iter().map(PauliString::superop).collect())
}

/// Superoperator of the Pauli string `p`, from the cache.
pub fn cached_superop(p: &PauliString) -> &'static SuperOp {
    &pauli_superops(p.n)[p.index()]
}

/// `Σ_α sgn(α,β) 𝒫_α 𝓗_γ 𝒫_α`; zero for `γ ≠ β`, `4ⁿ 𝓗_β` for `γ = β`.
pub fn signed_twirl_sum(gamma: &PauliString, beta: &PauliString) -> Result<SuperOp> {
    if gamma.n != beta.n {
        return Err(Error::Dimension("γ and β on different qubit counts".into()));
    }
    let h = gamma.hamiltonian();
    let mut acc = SuperOp::zeros(1 << gamma.n);
    for alpha in all_paulis(gamma.n) {
        let p = cached_superop(&alpha);
        let term = p * &h * p;
        acc = acc + term.scale(f64::from(sign_of(&alpha, beta)));
    }
    Ok(acc)
}

/// Uniform Pauli twirl `4⁻ⁿ Σ_α 𝒫_α S 𝒫_α` of a superoperator.
pub fn pauli_twirl(s: &SuperOp) -> SuperOp {
    let d = s.hilbert_dim();
    let n = d.trailing_zeros() as usize;
    assert_eq!(1 << n, d, "Pauli twirl needs a qubit system");
    let ops = pauli_superops(n);
    let terms: Vec<SuperOp> = ops.iter().map(|p| p * s * p).collect();
    crate::twirl::plan::mean_fixed_order(&terms)
}

/// Hilbert-space twirl `4⁻ⁿ Σ_α P_α M P_α`.
pub fn hilbert_twirl(m: &CMatrix, n: usize) -> CMatrix {
    let count = 1usize << (2 * n);
    let mut acc = CMatrix::zeros(m.nrows(), m.ncols());
    for p in all_paulis(n) {
        let pm = p.matrix();
        acc += &pm * m * &pm;
    }
    acc / C64::new(count as f64, 0.0)
}
