//! Randomized compiling (Pauli twirling) of Clifford gates.

use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::liouville::SuperOp;
use crate::pauli::{all_paulis, pauli_superops, PauliString};

use super::plan::{parallel_mean, TwirlPlan};

const CLIFFORD_TOL: f64 = 1e-9;

/// For every Pauli `α`, the index of the Pauli `α'` with
/// `𝒰 𝒫_α 𝒰† = 𝒫_α'`. Fails on the first Pauli whose conjugate is not a Pauli.
pub fn clifford_pauli_map(u_cliff: &SuperOp) -> Result<Vec<usize>> {
    let d = u_cliff.hilbert_dim();
    let n = d.trailing_zeros() as usize;
    if 1 << n != d {
        return Err(Error::Dimension(format!("dimension {d} is not a qubit register")));
    }
    let ops = pauli_superops(n);
    let u_dag = u_cliff.adjoint();
    all_paulis(n)
        .iter()
        .map(|alpha| {
            let conj = u_cliff * &ops[alpha.index()] * &u_dag;
            ops.iter()
                .position(|p| max_abs((&conj - p).matrix()) < CLIFFORD_TOL)
                .ok_or_else(|| Error::NotClifford { pauli: alpha.to_string() })
        })
        .collect()
}

/// `(1/|plan|) Σ_α 𝒫'_α 𝒦 𝒫_α` with `𝒫'_α = 𝒰 𝒫_α 𝒰†`.
pub fn rc_twirl(k: &SuperOp, u_cliff: &SuperOp, plan: &TwirlPlan) -> Result<SuperOp> {
    k.check_same_dim(u_cliff)?;
    let map = clifford_pauli_map(u_cliff)?;
    let n = k.hilbert_dim().trailing_zeros() as usize;
    let ops = pauli_superops(n);
    let twirls: Vec<PauliString> = plan.draw(n);
    parallel_mean(&twirls, |alpha| {
        let right = &ops[alpha.index()];
        let left = &ops[map[alpha.index()]];
        Ok(left * k * right)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, CMatrix, C64};
    use crate::liouville::unitary_superop;
    use crate::noise::{pauli_transfer_decompose, random_noise_model};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cnot() -> SuperOp {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let m = CMatrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z]);
        unitary_superop(&m).unwrap()
    }

    #[test]
    fn error_free_clifford_is_unchanged() {
        let u = cnot();
        let out = rc_twirl(&u, &u, &TwirlPlan::full()).unwrap();
        assert!(max_abs((out - &u).matrix()) < 1e-12);
    }

    #[test]
    fn identity_gate_maps_paulis_to_themselves() {
        let map = clifford_pauli_map(&SuperOp::identity(4)).unwrap();
        assert_eq!(map, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn noisy_clifford_becomes_pauli_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = cnot();
        let noise = random_noise_model(4, 2, 0.2, &mut rng).lindbladian(4).unwrap().expm();
        let k = &u * &noise;
        let out = rc_twirl(&k, &u, &TwirlPlan::full()).unwrap();
        let residual = u.adjoint() * out;
        let t = pauli_transfer_decompose(&residual, 2).unwrap();
        assert!(t.max_off_diagonal() < 1e-10);
        // Diagonal entries are exactly the original N_αα.
        let before = pauli_transfer_decompose(&noise, 2).unwrap();
        for a in 0..16 {
            assert!((t.coeffs[(a, a)] - before.coeffs[(a, a)]).norm() < 1e-10);
        }
    }

    #[test]
    fn non_clifford_is_rejected_with_offending_pauli() {
        let h = "ZZ".parse::<PauliString>().unwrap().matrix() * C64::new(0.0, -0.3);
        let u = unitary_superop(&expm(&h)).unwrap();
        match rc_twirl(&u, &u, &TwirlPlan::full()) {
            Err(Error::NotClifford { pauli }) => assert_eq!(pauli, "IX"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
