//! Self-test of the algebraic identities the simulator relies on.
//!
//! Checks over Pauli labels are exhaustive for `n ≤ 2` and sampled for
//! larger registers.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{expm, max_abs, CMatrix, C64, I};
use crate::liouville::{triple_product_superop, unitary_superop, vectorize, StateVec, SuperOp};
use crate::noise::{amplitude_damping, observable_error_bound, random_noise_model, NoiseModel};
use crate::pauli::{all_paulis, cached_superop, sgn, signed_twirl_sum, PauliString};
use crate::pulse::{ideal_schedule, large_m_limit, sliced_pst, PulseSchedule, ScheduleStep};
use crate::twirl::plan::{substream, TwirlPlan};
use crate::twirl::pst::{pst_gate, GateModel, HamiltonianTerm, ParityClass};
use crate::twirl::virtual_z::{pst_gate_virtual_z, virtual_z_twirl_set};

/// Residual bound of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Slice count of the large-m check.
pub const LARGE_M_SLICES: usize = 64;

/// Bound on `‖𝒦^(m) − 𝒰_T e^{M/m}‖ / ‖𝒦^(m) − 𝒰_T‖` at [`LARGE_M_SLICES`];
/// the limit is only asymptotic, the relative gap shrinks like `1/m`.
pub const LARGE_M_TOL: f64 = 0.05;

/// Largest register the exhaustive checks cover.
const EXHAUSTIVE_MAX_QUBITS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub n: usize,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_residual < self.tolerance
    }
}

fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = random_matrix(d, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    expm(&(h * (-I)))
}

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> StateVec {
    let g = random_matrix(d, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    vectorize(&(rho / tr)).expect("square")
}

/// Labels to test: all of them for small registers, `samples` random ones
/// otherwise.
fn pauli_labels(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<PauliString> {
    if n <= EXHAUSTIVE_MAX_QUBITS {
        all_paulis(n)
    } else {
        let total = 1usize << (2 * n);
        (0..samples).map(|_| PauliString::from_index(n, rng.random_range(0..total))).collect()
    }
}

fn pauli_pairs(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<(PauliString, PauliString)> {
    if n <= EXHAUSTIVE_MAX_QUBITS {
        let all = all_paulis(n);
        all.iter().flat_map(|a| all.iter().map(move |b| (*a, *b))).collect()
    } else {
        let total = 1usize << (2 * n);
        (0..samples)
            .map(|_| {
                let a = rng.random_range(0..total);
                let b = rng.random_range(0..total);
                (PauliString::from_index(n, a), PauliString::from_index(n, b))
            })
            .collect()
    }
}

fn check(name: &str, n: usize, residuals: &[f64], tolerance: f64) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        n,
        trials: residuals.len(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        tolerance,
    }
}

/// `(B ⊗ Dᵀ)|C⟩ = |BCD⟩`, with `C` running over the Pauli basis for small
/// registers and random otherwise.
fn triple_product(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<IdentityCheck> {
    let d = 1 << n;
    let mut residuals = Vec::new();
    for _ in 0..samples {
        let b = random_matrix(d, rng);
        let dd = random_matrix(d, rng);
        let t = triple_product_superop(&b, &dd)?;
        let cs: Vec<CMatrix> = if n <= EXHAUSTIVE_MAX_QUBITS {
            all_paulis(n).iter().map(PauliString::matrix).collect()
        } else {
            vec![random_matrix(d, rng)]
        };
        for c in cs {
            let lhs = t.apply(&vectorize(&c)?)?;
            let rhs = vectorize(&(&b * &c * &dd))?;
            let diff = lhs.as_vector() - rhs.as_vector();
            residuals.push(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Ok(check("triple_product", n, &residuals, IDENTITY_TOL))
}

/// `𝒫_α = exp(−iπ/2 𝓗_α)` and `𝒫_α e^{−iθ𝓗_β} 𝒫_α = e^{−iθ sgn(α,β) 𝓗_β}`.
fn pauli_exponential(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<IdentityCheck> {
    let mut residuals = Vec::new();
    for alpha in pauli_labels(n, samples, rng) {
        let h = alpha.hamiltonian();
        let e = h.scale_complex(C64::new(0.0, -FRAC_PI_2)).expm();
        residuals.push(max_abs(&(e - cached_superop(&alpha)).into_matrix()));
    }
    for (alpha, beta) in pauli_pairs(n, samples, rng) {
        let theta: f64 = rng.random_range(-1.0..1.0);
        let h = beta.hamiltonian();
        let p = cached_superop(&alpha);
        let lhs = p * &h.scale_complex(C64::new(0.0, -theta)).expm() * p;
        let s = f64::from(sgn(&alpha, &beta)?);
        let rhs = h.scale_complex(C64::new(0.0, -theta * s)).expm();
        residuals.push(max_abs(&(lhs - rhs).into_matrix()));
    }
    Ok(check("pauli_exponential", n, &residuals, IDENTITY_TOL))
}

/// `Σ_α sgn(α,β) 𝒫_α 𝓗_γ 𝒫_α` is zero for `γ ≠ β` and `4ⁿ 𝓗_β` for `γ = β`.
fn signed_sum(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<IdentityCheck> {
    let mut pairs = pauli_pairs(n, samples, rng);
    if n > EXHAUSTIVE_MAX_QUBITS {
        // Sampled pairs almost never coincide; cover the diagonal explicitly.
        let diagonal: Vec<_> = pairs.iter().take(samples.div_ceil(4)).map(|(g, _)| (*g, *g)).collect();
        pairs.extend(diagonal);
    }
    let scale = (1u64 << (2 * n)) as f64;
    let mut residuals = Vec::new();
    for (gamma, beta) in pairs {
        let sum = signed_twirl_sum(&gamma, &beta)?;
        let expected = if gamma == beta { beta.hamiltonian().scale(scale) } else { SuperOp::zeros(1 << n) };
        residuals.push(sum.distance(&expected));
    }
    Ok(check("signed_twirl_sum", n, &residuals, IDENTITY_TOL))
}

/// `|⟨A|(𝒦−𝒰)|ρ₀⟩| ≤ √⟨A'|A'⟩ √⟨ρ₀|ρ₀⟩ ‖𝒦−𝒰‖`; the residual is the amount
/// by which the bound is violated, and `|⟨I|(𝒦−𝒰)|ρ₀⟩|` for trace-preserving
/// maps.
fn operator_norm_bound(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<IdentityCheck> {
    let d = 1 << n;
    let mut residuals = Vec::new();
    for trial in 0..samples {
        let u = unitary_superop(&random_unitary(d, rng))?;
        let noise = random_noise_model(d, 2, 0.05, rng).lindbladian(d)?.expm();
        let mut k = &u * &noise;
        if trial % 2 == 1 {
            k = k.scale(0.97);
        }
        let rho0 = random_state(d, rng);
        for a in pauli_labels(n, samples, rng) {
            let obs = a.matrix() + {
                let g = random_matrix(d, rng);
                (&g + g.adjoint()).scale(0.5)
            };
            let bound = observable_error_bound(&obs, &rho0, &k, &u)?;
            residuals.push((bound.lhs - bound.rhs).max(0.0));
        }
        if trial % 2 == 0 {
            let bound = observable_error_bound(&CMatrix::identity(d, d), &rho0, &k, &u)?;
            residuals.push(bound.lhs);
        }
    }
    Ok(check("operator_norm_bound", n, &residuals, IDENTITY_TOL))
}

/// Drive on `Z…ZX` with a `Z…ZY` controllable error and `Z…Z` crosstalk.
fn test_gate(n: usize) -> Result<GateModel> {
    let string = |last: char| -> Result<PauliString> {
        let label: String = std::iter::repeat_n('Z', n - 1).chain(std::iter::once(last)).collect();
        label.parse()
    };
    let target = string('X')?;
    GateModel::new(
        target,
        vec![
            HamiltonianTerm::target(target, std::f64::consts::FRAC_PI_4),
            HamiltonianTerm::new(string('Y')?, 0.03, ParityClass::GOdd),
            HamiltonianTerm::crosstalk(string('Z')?, 0.02),
        ],
        1.0,
    )
}

fn damping_on_all(n: usize, gamma: f64) -> Result<NoiseModel> {
    Ok(NoiseModel::new((0..n).map(|q| amplitude_damping(q, gamma, n)).collect::<Result<Vec<_>>>()?))
}

/// A twirl whose Z part is virtual realizes the same channel as its
/// physical part.
fn virtual_z_collapse(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<IdentityCheck> {
    let gate = test_gate(n)?;
    let noise = damping_on_all(n, 0.01)?;
    let virtual_qubits: Vec<usize> = (0..n).collect();
    let classes = virtual_z_twirl_set(n, &virtual_qubits)?;
    let mut residuals = Vec::new();
    let members: Vec<(PauliString, PauliString)> = if n <= EXHAUSTIVE_MAX_QUBITS {
        classes.iter().flat_map(|c| c.members.iter().map(|m| (c.effective, *m))).collect()
    } else {
        (0..samples)
            .map(|_| {
                let c = &classes[rng.random_range(0..classes.len())];
                (c.effective, c.members[rng.random_range(0..c.members.len())])
            })
            .collect()
    };
    for (effective, member) in members {
        let collapsed = pst_gate_virtual_z(&gate, &member, &virtual_qubits, &[], &noise)?;
        let physical = pst_gate(&gate, &effective, &[], &noise)?;
        residuals.push(max_abs(&(collapsed - physical).into_matrix()));
    }
    Ok(check("virtual_z_collapse", n, &residuals, IDENTITY_TOL))
}

/// Relative gap between the sliced channel and its large-m limit.
fn large_m(n: usize) -> Result<IdentityCheck> {
    let target = test_gate(n)?.target;
    let gate = GateModel::new(
        target,
        vec![
            HamiltonianTerm::target(target, std::f64::consts::FRAC_PI_4),
            HamiltonianTerm::crosstalk(test_gate(n)?.terms[2].pauli, 0.05),
        ],
        1.0,
    )?;
    let schedule = PulseSchedule::new(n, vec![ScheduleStep::Segment(gate)])?;
    let sliced = sliced_pst(&schedule, LARGE_M_SLICES, &TwirlPlan::full(), &NoiseModel::none(), &[])?;
    let limit = large_m_limit(&schedule, LARGE_M_SLICES, &[], 512)?;
    let err = sliced.distance(&ideal_schedule(&schedule));
    Ok(check("large_m_limit", n, &[sliced.distance(&limit) / err], LARGE_M_TOL))
}

/// Every check on an `n`-qubit register. `samples` sets the number of
/// random draws; check `k` uses RNG substream `16·n + k`.
pub fn identity_checks(n: usize, samples: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    if !(1..=3).contains(&n) {
        return Err(crate::Error::Invalid(format!("identity checks cover 1 to 3 qubits, got {n}")));
    }
    if samples == 0 {
        return Err(crate::Error::Invalid("identity checks need samples >= 1".into()));
    }
    let stream = |k: u64| substream(seed, 16 * n as u64 + k);
    Ok(vec![
        triple_product(n, samples, &mut stream(0))?,
        pauli_exponential(n, samples, &mut stream(1))?,
        signed_sum(n, samples, &mut stream(2))?,
        operator_norm_bound(n, samples, &mut stream(3))?,
        virtual_z_collapse(n, samples, &mut stream(4))?,
        large_m(n)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::hamiltonian_superop;

    #[test]
    fn all_checks_pass_on_one_and_two_qubits() {
        for n in 1..=2 {
            for c in identity_checks(n, 4, 11).unwrap() {
                assert!(c.passed(), "{c:?}");
                assert!(c.trials > 0);
            }
        }
    }

    #[test]
    fn pauli_hamiltonian_matches_generic_lift() {
        for p in all_paulis(2) {
            let h = hamiltonian_superop(&p.matrix()).unwrap();
            assert!(h.distance(&p.hamiltonian()) < 1e-14);
        }
    }

    #[test]
    fn out_of_range_register_is_rejected() {
        assert!(identity_checks(0, 4, 1).is_err());
        assert!(identity_checks(4, 4, 1).is_err());
    }
}
