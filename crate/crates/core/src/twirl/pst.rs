//! Pseudo twirling of gates generated by Pauli Hamiltonians.
//!
//! A twirl Pauli `α` is applied before and after the gate, and every
//! controllable (odd) drive term is executed with its sign multiplied by
//! `sgn(α, key)`. The sandwich restores the ideal drive while conjugating
//! every drive-independent term (crosstalk, even calibration errors, external
//! noise) by `𝒫_α`, which averages them away to first order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, CMatrix, C64, I};
use crate::liouville::{hamiltonian_superop_unchecked, SuperOp};
use crate::noise::{lindblad_superop, NoiseModel};
use crate::pauli::{all_paulis, cached_superop, pauli_superops, sign_of, PauliString};

use super::plan::{parallel_mean, TwirlPlan};

/// Parity of a Hamiltonian coefficient under inversion of the drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityClass {
    /// Odd part of a target coefficient: the controllable drive itself.
    FOdd,
    /// Even part of a target coefficient: uncontrollable rotation error.
    FEven,
    /// Odd non-target term, generated by the drive (e.g. a phase error).
    GOdd,
    /// Even non-target term, independent of the drive (e.g. crosstalk).
    GEven,
}

impl ParityClass {
    pub fn is_odd(self) -> bool {
        matches!(self, ParityClass::FOdd | ParityClass::GOdd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub pauli: PauliString,
    pub coeff: f64,
    pub parity: ParityClass,
}

impl HamiltonianTerm {
    pub fn new(pauli: PauliString, coeff: f64, parity: ParityClass) -> Self {
        Self { pauli, coeff, parity }
    }

    pub fn target(pauli: PauliString, coeff: f64) -> Self {
        Self::new(pauli, coeff, ParityClass::FOdd)
    }

    pub fn crosstalk(pauli: PauliString, coeff: f64) -> Self {
        Self::new(pauli, coeff, ParityClass::GEven)
    }

    pub fn controllable(&self) -> bool {
        self.parity.is_odd()
    }

    /// The same term under drive inversion `a → −a`.
    pub fn drive_inverted(&self) -> Self {
        let coeff = if self.controllable() { -self.coeff } else { self.coeff };
        Self { coeff, ..*self }
    }

    pub fn hilbert(&self) -> CMatrix {
        self.pauli.matrix() * C64::new(self.coeff, 0.0)
    }
}

/// Gate generated by a constant Pauli Hamiltonian over `duration`.
///
/// `target` is the primary drive Pauli β. Drive-generated error terms
/// (`GOdd`) flip sign with `sgn(α, target)`. Every `FOdd` term is a drive in
/// its own right and flips with `sgn(α, term.pauli)`; this covers gates with
/// several independently driven terms, such as an Ising step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    pub n: usize,
    pub target: PauliString,
    pub terms: Vec<HamiltonianTerm>,
    pub duration: f64,
}

impl GateModel {
    pub fn new(target: PauliString, terms: Vec<HamiltonianTerm>, duration: f64) -> Result<Self> {
        let n = target.num_qubits();
        if let Some(t) = terms.iter().find(|t| t.pauli.num_qubits() != n) {
            return Err(Error::Dimension(format!("term {} is not a {n}-qubit Pauli", t.pauli)));
        }
        if let Some(t) = terms.iter().find(|t| !t.coeff.is_finite()) {
            return Err(Error::Invalid(format!("coefficient of {} is not finite", t.pauli)));
        }
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::Invalid(format!("gate duration {duration} must be finite and >= 0")));
        }
        Ok(Self { n, target, terms, duration })
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n
    }

    /// Sign applied to `term` when the gate is pseudo-twirled by `alpha`.
    pub fn drive_sign(&self, term: &HamiltonianTerm, alpha: &PauliString) -> f64 {
        match term.parity {
            ParityClass::FOdd => f64::from(sign_of(alpha, &term.pauli)),
            ParityClass::GOdd => f64::from(sign_of(alpha, &self.target)),
            ParityClass::FEven | ParityClass::GEven => 1.0,
        }
    }

    /// Hilbert-space Hamiltonian of the ideal drive (the `FOdd` terms).
    pub fn ideal_hamiltonian(&self) -> CMatrix {
        let d = self.hilbert_dim();
        self.terms
            .iter()
            .filter(|t| t.parity == ParityClass::FOdd)
            .fold(CMatrix::zeros(d, d), |acc, t| acc + t.hilbert())
    }

    /// Full Hilbert-space Hamiltonian including every error term.
    pub fn hamiltonian(&self) -> CMatrix {
        let d = self.hilbert_dim();
        self.terms.iter().fold(CMatrix::zeros(d, d), |acc, t| acc + t.hilbert())
    }

    /// `𝒰_T = exp(−i T 𝓗_ideal)`.
    pub fn ideal_superop(&self) -> SuperOp {
        let h = hamiltonian_superop_unchecked(&self.ideal_hamiltonian(), self.hilbert_dim());
        h.scale_complex(-I * self.duration).expm()
    }

    /// Gate executed with the drive inverted (`a → −a`).
    pub fn pulse_inverse(&self) -> Self {
        Self { terms: self.terms.iter().map(HamiltonianTerm::drive_inverted).collect(), ..self.clone() }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Self { duration, ..self.clone() }
    }
}

/// Precomputed Liouville pieces of a noisy gate for repeated twirl
/// realizations.
pub struct PstEngine<'a> {
    gate: &'a GateModel,
    term_generators: Vec<SuperOp>,
    fixed_generator: SuperOp,
    twirl_error: Option<SuperOp>,
}

impl<'a> PstEngine<'a> {
    pub fn new(gate: &'a GateModel, extra_coherent: &[HamiltonianTerm], noise: &NoiseModel) -> Result<Self> {
        let d = gate.hilbert_dim();
        if let Some(t) = extra_coherent.iter().find(|t| t.pauli.num_qubits() != gate.n) {
            return Err(Error::Dimension(format!("extra term {} has the wrong size", t.pauli)));
        }
        let term_generators = gate.terms.iter().map(|t| t.pauli.hamiltonian()).collect();
        let mut fixed = noise.lindbladian(d)?;
        for t in extra_coherent {
            fixed = fixed + t.pauli.hamiltonian().scale_complex(-I * t.coeff);
        }
        let twirl_error =
            (noise.twirl_depolarizing > 0.0).then(|| depolarizing_channel(gate.n, noise.twirl_depolarizing));
        Ok(Self { gate, term_generators, fixed_generator: fixed, twirl_error })
    }

    /// `−i Σ s_j c_j 𝓗_j + (fixed part)`, with signs chosen by `alpha`.
    pub fn generator(&self, alpha: &PauliString) -> SuperOp {
        self.generator_with_signs(|term| self.gate.drive_sign(term, alpha))
    }

    pub(crate) fn generator_with_signs<F>(&self, sign: F) -> SuperOp
    where
        F: Fn(&HamiltonianTerm) -> f64,
    {
        let mut acc = self.fixed_generator.clone();
        for (term, h) in self.gate.terms.iter().zip(&self.term_generators) {
            acc = acc + h.scale_complex(-I * (sign(term) * term.coeff));
        }
        acc
    }

    /// Noisy, sign-modified gate without the Pauli sandwich.
    pub fn bare(&self, alpha: &PauliString) -> SuperOp {
        self.generator(alpha).scale(self.gate.duration).expm()
    }

    /// One twirl realization `𝒫_α · exp(T·generator_α) · 𝒫_α`.
    pub fn realize(&self, alpha: &PauliString) -> SuperOp {
        self.sandwich(alpha, &self.bare(alpha))
    }

    pub(crate) fn sandwich(&self, alpha: &PauliString, inner: &SuperOp) -> SuperOp {
        if alpha.is_identity() {
            return inner.clone();
        }
        let p = cached_superop(alpha);
        match &self.twirl_error {
            None => p * inner * p,
            Some(dep) => dep * p * inner * dep * p,
        }
    }

    pub fn average(&self, twirls: &[PauliString]) -> Result<SuperOp> {
        parallel_mean(twirls, |alpha| Ok(self.realize(alpha)))
    }
}

/// `(1−p)·I + p·4⁻ⁿ Σ_α 𝒫_α`.
pub fn depolarizing_channel(n: usize, p: f64) -> SuperOp {
    let ops = pauli_superops(n);
    let uniform = super::plan::mean_fixed_order(ops);
    SuperOp::identity(1 << n).scale(1.0 - p) + uniform.scale(p)
}

/// A single pseudo-twirled realization of a noisy gate.
pub fn pst_gate(
    gate: &GateModel,
    alpha: &PauliString,
    extra_coherent: &[HamiltonianTerm],
    noise: &NoiseModel,
) -> Result<SuperOp> {
    if alpha.num_qubits() != gate.n {
        return Err(Error::Dimension(format!("twirl {alpha} on a {}-qubit gate", gate.n)));
    }
    Ok(PstEngine::new(gate, extra_coherent, noise)?.realize(alpha))
}

/// Mean of [`pst_gate`] over the plan's twirls.
pub fn pst_average(
    gate: &GateModel,
    plan: &TwirlPlan,
    extra_coherent: &[HamiltonianTerm],
    noise: &NoiseModel,
) -> Result<SuperOp> {
    PstEngine::new(gate, extra_coherent, noise)?.average(&plan.draw(gate.n))
}

/// Default number of midpoint-rule steps for the `H_eff,α` integrals.
pub const DEFAULT_QUADRATURE_STEPS: usize = 256;

/// `𝓛_eff = 4⁻ⁿ Σ_α 𝓛(H_eff,α)`, `H_eff,α = ∫₀ᵀ U(t)† P_α H_coh P_α U(t) dt`,
/// with `U(t)` generated by the ideal drive.
pub fn second_order_lindbladian(gate: &GateModel, h_coh: &CMatrix, quadrature_steps: usize) -> Result<SuperOp> {
    if quadrature_steps < 16 {
        return Err(Error::Invalid(format!("quadrature needs at least 16 steps, got {quadrature_steps}")));
    }
    let d = gate.hilbert_dim();
    if h_coh.nrows() != d || h_coh.ncols() != d {
        return Err(Error::Dimension(format!("coherent error must be {d}x{d}")));
    }
    let frames = interaction_frames(gate, quadrature_steps);
    let dt = gate.duration / quadrature_steps as f64;
    let twirled: Vec<SuperOp> = all_paulis(gate.n)
        .iter()
        .map(|alpha| {
            let p = alpha.matrix();
            let h_alpha = &p * h_coh * &p;
            let h_eff =
                frames.iter().fold(CMatrix::zeros(d, d), |acc, u| acc + u.adjoint() * &h_alpha * u) * C64::new(dt, 0.0);
            lindblad_superop(&h_eff)
        })
        .collect();
    Ok(super::plan::mean_fixed_order(&twirled))
}

/// `U(t_k)` at the midpoints `t_k = (k + ½)·T/steps`.
pub(crate) fn interaction_frames(gate: &GateModel, steps: usize) -> Vec<CMatrix> {
    let h = gate.ideal_hamiltonian();
    let dt = gate.duration / steps as f64;
    let half = expm(&(&h * (-I * (dt / 2.0))));
    let step = expm(&(&h * (-I * dt)));
    let mut frames = Vec::with_capacity(steps);
    let mut u = half;
    for _ in 0..steps {
        frames.push(u.clone());
        u = &step * u;
    }
    frames
}

/// Second-order prediction `𝒰_T · exp(𝓛_eff)` of the fully twirled gate
/// carrying the coherent error `h_coh`.
pub fn pst_second_order_predictor(gate: &GateModel, h_coh: &CMatrix, quadrature_steps: usize) -> Result<SuperOp> {
    let l_eff = second_order_lindbladian(gate, h_coh, quadrature_steps)?;
    Ok(gate.ideal_superop() * l_eff.expm())
}

/// First-order effective drive after a full PST average: each term's
/// coefficient is multiplied by `4⁻ⁿ Σ_α s_α(term)·sgn(α, term)`, which is 1
/// for `FOdd` terms and 0 for every other class (non-identity Paulis).
pub fn classify_calibration(gate: &GateModel) -> Vec<HamiltonianTerm> {
    let twirls = all_paulis(gate.n);
    let count = twirls.len() as f64;
    gate.terms
        .iter()
        .filter_map(|term| {
            let weight: f64 =
                twirls.iter().map(|a| gate.drive_sign(term, a) * f64::from(sign_of(a, &term.pauli))).sum::<f64>()
                    / count;
            let coeff = weight * term.coeff;
            (coeff != 0.0).then_some(HamiltonianTerm { coeff, ..*term })
        })
        .collect()
}

/// Dense Liouville evaluation of the same average,
/// `4⁻ⁿ Σ_α 𝒫_α (Σ_j s_j(α) c_j 𝓗_j) 𝒫_α`.
pub fn effective_drive_superop(gate: &GateModel) -> SuperOp {
    let ops = pauli_superops(gate.n);
    let terms: Vec<SuperOp> = all_paulis(gate.n)
        .iter()
        .map(|alpha| {
            let p = &ops[alpha.index()];
            let h = gate.terms.iter().fold(SuperOp::zeros(gate.hilbert_dim()), |acc, t| {
                acc + t.pauli.hamiltonian().scale(gate.drive_sign(t, alpha) * t.coeff)
            });
            p * h * p
        })
        .collect();
    super::plan::mean_fixed_order(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_deviation, max_abs};

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn zz_gate(theta: f64) -> GateModel {
        GateModel::new(p("ZZ"), vec![HamiltonianTerm::target(p("ZZ"), theta)], 1.0).unwrap()
    }

    #[test]
    fn anticommuting_twirl_restores_gate() {
        let theta = 0.3;
        let gate = zz_gate(theta);
        let u = gate.ideal_superop();
        // Explicit: 𝒫_XZ U_zz(−θ) 𝒫_XZ.
        let flipped = p("ZZ").hamiltonian().scale_complex(I * theta).expm();
        let pxz = p("XZ").superop();
        assert!(max_abs((&pxz * &flipped * &pxz - &u).matrix()) < 1e-12);
        let realized = pst_gate(&gate, &p("XZ"), &[], &NoiseModel::none()).unwrap();
        assert!(max_abs((realized - &u).matrix()) < 1e-12);
    }

    #[test]
    fn commuting_twirl_leaves_gate_unchanged() {
        let gate = zz_gate(0.3);
        let oracle = p("ZZ").hamiltonian().scale_complex(-I * 0.3).expm();
        let realized = pst_gate(&gate, &p("XX"), &[], &NoiseModel::none()).unwrap();
        assert!(max_abs((realized - oracle).matrix()) < 1e-12);
    }

    #[test]
    fn identity_twirl_is_plain_noisy_gate() {
        let gate = zz_gate(0.7);
        let noise = NoiseModel::new(vec![crate::noise::amplitude_damping(1, 0.05, 2).unwrap()]);
        let extra = [HamiltonianTerm::crosstalk(p("XI"), 0.02)];
        let realized = pst_gate(&gate, &p("II"), &extra, &noise).unwrap();
        let gen = p("ZZ").hamiltonian().scale_complex(-I * 0.7)
            + p("XI").hamiltonian().scale_complex(-I * 0.02)
            + noise.lindbladian(4).unwrap();
        assert!(max_abs((realized - gen.expm()).matrix()) < 1e-12);
    }

    #[test]
    fn error_free_full_average_is_ideal() {
        let gate = GateModel::new(
            p("ZX"),
            vec![HamiltonianTerm::target(p("ZX"), 0.4), HamiltonianTerm::target(p("XI"), -0.9)],
            1.3,
        )
        .unwrap();
        let avg = pst_average(&gate, &TwirlPlan::full(), &[], &NoiseModel::none()).unwrap();
        assert!(max_abs((avg - gate.ideal_superop()).matrix()) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let gate = zz_gate(0.1);
        assert!(pst_gate(&gate, &p("X"), &[], &NoiseModel::none()).is_err());
        assert!(pst_gate(&gate, &p("II"), &[HamiltonianTerm::crosstalk(p("Z"), 0.1)], &NoiseModel::none()).is_err());
    }

    #[test]
    fn predictor_with_zero_error_is_ideal_gate() {
        let gate = zz_gate(0.3);
        let pred = pst_second_order_predictor(&gate, &CMatrix::zeros(4, 4), 64).unwrap();
        assert!(max_abs((pred - gate.ideal_superop()).matrix()) < 1e-14);
        assert!(pst_second_order_predictor(&gate, &CMatrix::zeros(4, 4), 8).is_err());
    }

    #[test]
    fn effective_lindbladian_is_hermitian() {
        let gate =
            GateModel::new(p("ZX"), vec![HamiltonianTerm::target(p("ZX"), std::f64::consts::FRAC_PI_4)], 1.0).unwrap();
        let h_coh = p("ZZ").matrix() * C64::new(0.01, 0.0) + p("IY").matrix() * C64::new(0.02, 0.0);
        let l = second_order_lindbladian(&gate, &h_coh, DEFAULT_QUADRATURE_STEPS).unwrap();
        assert!(hermitian_deviation(l.matrix()) < 1e-10);
    }

    #[test]
    fn twirl_depolarizing_only_touches_non_identity_twirls() {
        let gate = zz_gate(0.3);
        let mut noise = NoiseModel::none();
        noise.twirl_depolarizing = 0.01;
        let plain = pst_gate(&gate, &p("II"), &[], &noise).unwrap();
        assert!(max_abs((plain - gate.ideal_superop()).matrix()) < 1e-12);
        let twirled = pst_gate(&gate, &p("XZ"), &[], &noise).unwrap();
        assert!((twirled - gate.ideal_superop()).op_norm() > 1e-3);
    }
}
