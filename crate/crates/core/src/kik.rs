//! First-order KIK error mitigation and its combination with pseudo
//! twirling on a transverse-field Ising step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::SuperOp;
use crate::noise::{amplitude_damping, NoiseModel};
use crate::pauli::{all_paulis, PauliString};
use crate::twirl::plan::{mean_fixed_order, TwirlPlan};
use crate::twirl::pst::{GateModel, HamiltonianTerm, ParityClass, PstEngine};

/// `K = exp(−iJ Σ 𝓗_{z_i z_{i+1}} − ig Σ 𝓗_{x_i} − iε Σ 𝓗_{z_i} + 𝓛)` for
/// unit time.
#[derive(Clone, Debug)]
pub struct IsingConfig {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub epsilon: f64,
    pub noise: NoiseModel,
    pub plan: TwirlPlan,
}

/// Per-qubit amplitude-damping weights of the reference noise model.
pub const DEFAULT_DAMPING_WEIGHTS: [f64; 3] = [0.5, 1.7, 0.3];

/// Global damping scale of the reference setup.
pub const DEFAULT_NOISE_SCALE: f64 = 0.00465;

/// `Σ_q scale·w_q·𝓛(σ⁻_q)`.
pub fn weighted_damping(n: usize, weights: &[f64], scale: f64) -> Result<NoiseModel> {
    if weights.len() != n {
        return Err(Error::Invalid(format!("{} damping weights for {n} qubits", weights.len())));
    }
    let dissipators =
        weights.iter().enumerate().map(|(q, w)| amplitude_damping(q, scale * w, n)).collect::<Result<Vec<_>>>()?;
    Ok(NoiseModel::new(dissipators))
}

impl IsingConfig {
    /// Three-qubit reference setup with the default noise scale.
    pub fn reference(epsilon: f64, plan: TwirlPlan) -> Result<Self> {
        Ok(Self {
            n: 3,
            j: 0.1,
            g: 0.2,
            epsilon,
            noise: weighted_damping(3, &DEFAULT_DAMPING_WEIGHTS, DEFAULT_NOISE_SCALE)?,
            plan,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Invalid(format!("Ising chain needs n >= 2, got {}", self.n)));
        }
        if self.n > 4 {
            return Err(Error::Invalid(format!("Ising chain limited to 4 qubits, got {}", self.n)));
        }
        for (name, v) in [("j", self.j), ("g", self.g), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Drive terms are controllable; the `ε Z_i` error keeps its sign under
/// drive inversion.
pub fn ising_gate(c: &IsingConfig) -> Result<GateModel> {
    c.validate()?;
    let n = c.n;
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        let zz = PauliString::single(n, i, 'Z')?.product(&PauliString::single(n, i + 1, 'Z')?);
        terms.push(HamiltonianTerm::target(zz, c.j));
    }
    for i in 0..n {
        terms.push(HamiltonianTerm::target(PauliString::single(n, i, 'X')?, c.g));
    }
    for i in 0..n {
        terms.push(HamiltonianTerm::new(PauliString::single(n, i, 'Z')?, c.epsilon, ParityClass::GEven));
    }
    let target = terms[0].pauli;
    GateModel::new(target, terms, 1.0)
}

pub fn ising_forward(c: &IsingConfig) -> Result<SuperOp> {
    let gate = ising_gate(c)?;
    Ok(PstEngine::new(&gate, &[], &c.noise)?.bare(&PauliString::identity(c.n)))
}

/// `J → −J`, `g → −g`; `ε` and `𝓛` unchanged.
pub fn ising_pulse_inverse(c: &IsingConfig) -> Result<SuperOp> {
    let gate = ising_gate(c)?.pulse_inverse();
    Ok(PstEngine::new(&gate, &[], &c.noise)?.bare(&PauliString::identity(c.n)))
}

/// `𝒦⁽¹⁾ = (3/2)𝒦 − (1/2)𝒦𝒦_I𝒦`.
pub fn kik_first_order(k: &SuperOp, k_i: &SuperOp) -> Result<SuperOp> {
    k.check_same_dim(k_i)?;
    Ok(k.scale(1.5) - (k * k_i * k).scale(0.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationResult {
    pub epsilon: f64,
    pub err_raw: f64,
    pub err_pst_only: f64,
    pub err_kik_only: f64,
    pub err_kik_pst: f64,
    pub suppression_factor: f64,
}

/// `K_α` and `K_I,α` for every twirl `α`. A draw averages both factors over
/// the same twirls, and the mitigated map composes the averaged factors.
pub struct TwirlCache {
    ideal: SuperOp,
    forward: Vec<SuperOp>,
    inverse: Vec<SuperOp>,
}

impl TwirlCache {
    pub fn new(c: &IsingConfig) -> Result<Self> {
        let gate = ising_gate(c)?;
        let inverse_gate = gate.pulse_inverse();
        let fwd = PstEngine::new(&gate, &[], &c.noise)?;
        let inv = PstEngine::new(&inverse_gate, &[], &c.noise)?;
        let (forward, inverse) = all_paulis(c.n)
            .par_iter()
            .map(|a| (fwd.realize(a), inv.realize(a)))
            .collect::<Vec<_>>()
            .into_iter()
            .unzip();
        Ok(Self { ideal: gate.ideal_superop(), forward, inverse })
    }

    pub fn ideal(&self) -> &SuperOp {
        &self.ideal
    }

    fn select(ops: &[SuperOp], twirls: &[PauliString]) -> SuperOp {
        let picked: Vec<SuperOp> = twirls.iter().map(|a| ops[a.index()].clone()).collect();
        mean_fixed_order(&picked)
    }

    /// PST-only and KIK+PST errors for the given draw.
    pub fn errors(&self, twirls: &[PauliString]) -> Result<(f64, f64)> {
        if twirls.is_empty() {
            return Err(Error::Invalid("empty twirl ensemble".into()));
        }
        let k = Self::select(&self.forward, twirls);
        let k_i = Self::select(&self.inverse, twirls);
        let mitigated = kik_first_order(&k, &k_i)?;
        Ok((k.distance(&self.ideal), mitigated.distance(&self.ideal)))
    }

    /// The untwirled forward map.
    pub fn raw(&self) -> &SuperOp {
        &self.forward[0]
    }
}

fn ensure_finite_errors(values: [f64; 4]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite mitigation error".into()));
    }
    Ok(())
}

/// Raw, PST-only, KIK-only and KIK+PST errors against the ideal unitary.
/// Grid point `i` draws its twirls from substream `i`.
pub fn run_ising_study(c: &IsingConfig, epsilon_grid: &[f64]) -> Result<Vec<MitigationResult>> {
    if epsilon_grid.is_empty() {
        return Err(Error::Invalid("epsilon grid is empty".into()));
    }
    c.validate()?;
    epsilon_grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let cfg = c.with_epsilon(eps);
            let cache = TwirlCache::new(&cfg)?;
            let k = ising_forward(&cfg)?;
            let k_i = ising_pulse_inverse(&cfg)?;
            let err_raw = k.distance(cache.ideal());
            let err_kik_only = kik_first_order(&k, &k_i)?.distance(cache.ideal());
            let (err_pst_only, err_kik_pst) = cache.errors(&c.plan.draw_stream(c.n, i as u64))?;
            ensure_finite_errors([err_raw, err_kik_only, err_pst_only, err_kik_pst])?;
            Ok(MitigationResult {
                epsilon: eps,
                err_raw,
                err_pst_only,
                err_kik_only,
                err_kik_pst,
                suppression_factor: err_raw / err_kik_pst,
            })
        })
        .collect()
}

/// KIK+PST suppression factors for `repeats` independently drawn ensembles
/// of `c.plan`; repeat `r` draws from substream `r`.
pub fn suppression_histogram(c: &IsingConfig, repeats: usize) -> Result<Vec<f64>> {
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be >= 1".into()));
    }
    let cache = TwirlCache::new(c)?;
    let err_raw = cache.raw().distance(cache.ideal());
    (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let (_, err) = cache.errors(&c.plan.draw_stream(c.n, r))?;
            Ok(err_raw / err)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins spanning the data; a constant sample gives one bin.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if values.is_empty() || bins == 0 {
        return Err(Error::Invalid("histogram needs data and at least one bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("histogram of non-finite values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(vec![HistogramBin { lo, hi, count: values.len() }]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: lo + width * k as f64,
            hi: if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 },
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn clean(eps: f64) -> IsingConfig {
        IsingConfig { n: 3, j: 0.1, g: 0.2, epsilon: eps, noise: NoiseModel::none(), plan: TwirlPlan::full() }
    }

    #[test]
    fn noiseless_inverse_is_exact() {
        let c = clean(0.0);
        let k = ising_forward(&c).unwrap();
        let k_i = ising_pulse_inverse(&c).unwrap();
        assert!(max_abs((&k_i * &k - SuperOp::identity(8)).matrix()) < 1e-12);
        assert!(max_abs((kik_first_order(&k, &k_i).unwrap() - &k).matrix()) < 1e-12);
    }

    #[test]
    fn coherent_error_survives_inversion() {
        let c = clean(0.01);
        let dev = (ising_pulse_inverse(&c).unwrap() * ising_forward(&c).unwrap()).distance(&SuperOp::identity(8));
        assert!(dev > 1e-3 && dev < 0.2, "{dev}");
    }

    #[test]
    fn kik_error_is_second_order_in_dissipation() {
        let u = ising_forward(&clean(0.0)).unwrap();
        let err = |scale: f64| {
            let c = IsingConfig { noise: weighted_damping(3, &DEFAULT_DAMPING_WEIGHTS, scale).unwrap(), ..clean(0.0) };
            let k = ising_forward(&c).unwrap();
            let k_i = ising_pulse_inverse(&c).unwrap();
            kik_first_order(&k, &k_i).unwrap().distance(&u)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn triple_product_triples_leading_dissipation() {
        // To first order K = U(1 + A) and K_I = U†(1 + U A U†), so
        // K K_I K − U = 3(K − U) + O(γ²).
        let c = IsingConfig { noise: weighted_damping(3, &[1.0, 0.4, 0.0], 1e-4).unwrap(), ..clean(0.0) };
        let k = ising_forward(&c).unwrap();
        let k_i = ising_pulse_inverse(&c).unwrap();
        let u = ising_forward(&clean(0.0)).unwrap();
        let first = &k - &u;
        let residual = (&k * &k_i * &k - &u) - first.scale(3.0);
        assert!(residual.op_norm() < 1e-3 * first.op_norm(), "{}", residual.op_norm());
    }

    #[test]
    fn clean_study_has_no_error() {
        let r = run_ising_study(&clean(0.0), &[0.0]).unwrap();
        let m = r[0];
        for e in [m.err_raw, m.err_pst_only, m.err_kik_only, m.err_kik_pst] {
            assert!(e < 1e-12);
        }
        assert!(run_ising_study(&clean(0.0), &[]).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[1.0, 1.0], 5).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].count, 2);
        let h = histogram(&[0.0, 0.5, 1.0, 0.25], 2).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2]);
        assert!(histogram(&[], 2).is_err());
    }

    #[test]
    fn full_plan_histogram_is_degenerate() {
        let c = IsingConfig::reference(0.02, TwirlPlan::full()).unwrap();
        let s = suppression_histogram(&c, 3).unwrap();
        assert!(s.windows(2).all(|w| w[0] == w[1]));
    }
}
