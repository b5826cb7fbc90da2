//! Piecewise-constant pulse schedules, the cross-resonance model and
//! intra-gate slicing.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::liouville::SuperOp;
use crate::noise::{lindblad_superop, NoiseModel};
use crate::pauli::{all_paulis, cached_superop, PauliString};
use crate::twirl::plan::{mean_fixed_order, TwirlPlan};
use crate::twirl::pst::{depolarizing_channel, GateModel, HamiltonianTerm, ParityClass, PstEngine};

/// `H = χa cosφ ZX + χa sinφ ZY + ζ ZZ` on (control, target).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossResonanceParams {
    pub a: f64,
    pub phi: f64,
    pub zeta: f64,
    pub chi: f64,
    /// Total drive time of one pulse.
    pub duration: f64,
}

impl CrossResonanceParams {
    /// Parameters of a π/2 pulse, `a·cosφ·T = π/4` at `χ = 1`.
    pub fn half_pi(phi: f64, zeta: f64) -> Self {
        Self { a: FRAC_PI_4 / phi.cos(), phi, zeta, chi: 1.0, duration: 1.0 }
    }

    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("phi", self.phi), ("zeta", self.zeta)] {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be finite")));
            }
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Invalid(format!("duration {} must be > 0", self.duration)));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(Error::Invalid(format!("chi {} must be > 0", self.chi)));
        }
        Ok(())
    }
}

fn zx() -> PauliString {
    PauliString::from_bits(2, 0b10, 0b01).expect("two-qubit ZX")
}

pub fn cr_hamiltonian(p: &CrossResonanceParams) -> Result<Vec<HamiltonianTerm>> {
    p.validate()?;
    let drive = p.chi * p.a;
    let term = |s: &str, c, parity| HamiltonianTerm::new(s.parse().expect("label"), c, parity);
    Ok(vec![
        term("ZX", drive * p.phi.cos(), ParityClass::FOdd),
        term("ZY", drive * p.phi.sin(), ParityClass::GOdd),
        term("ZZ", p.zeta, ParityClass::GEven),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScheduleStep {
    Segment(GateModel),
    /// Instantaneous Pauli frame gate.
    Frame(PauliString),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub n: usize,
    pub steps: Vec<ScheduleStep>,
}

impl PulseSchedule {
    pub fn new(n: usize, steps: Vec<ScheduleStep>) -> Result<Self> {
        for step in &steps {
            let k = match step {
                ScheduleStep::Segment(g) => g.n,
                ScheduleStep::Frame(p) => p.num_qubits(),
            };
            if k != n {
                return Err(Error::Dimension(format!("schedule step on {k} qubits, expected {n}")));
            }
        }
        Ok(Self { n, steps })
    }

    /// One constant segment carrying the whole pulse.
    pub fn single_segment(p: &CrossResonanceParams) -> Result<Self> {
        let gate = GateModel::new(zx(), cr_hamiltonian(p)?, p.duration)?;
        Self::new(2, vec![ScheduleStep::Segment(gate)])
    }

    /// Echoed pulse: half-length segment, X on the control, drive-inverted
    /// half-length segment, X on the control.
    pub fn echo_cr(p: &CrossResonanceParams) -> Result<Self> {
        let first = GateModel::new(zx(), cr_hamiltonian(p)?, p.duration / 2.0)?;
        let second = first.pulse_inverse();
        let x: PauliString = "XI".parse().expect("label");
        Self::new(
            2,
            vec![
                ScheduleStep::Segment(first),
                ScheduleStep::Frame(x),
                ScheduleStep::Segment(second),
                ScheduleStep::Frame(x),
            ],
        )
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n
    }

    pub fn total_duration(&self) -> f64 {
        self.segments().map(|g| g.duration).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = &GateModel> {
        self.steps.iter().filter_map(|s| match s {
            ScheduleStep::Segment(g) => Some(g),
            ScheduleStep::Frame(_) => None,
        })
    }

    /// The schedule repeated `reps` times.
    pub fn repeated(&self, reps: usize) -> Self {
        let steps = (0..reps).flat_map(|_| self.steps.iter().cloned()).collect();
        Self { n: self.n, steps }
    }
}

fn frame_superop(p: &PauliString, noise: &NoiseModel) -> SuperOp {
    let f = cached_superop(p).clone();
    if noise.twirl_depolarizing > 0.0 && !p.is_identity() {
        depolarizing_channel(p.num_qubits(), noise.twirl_depolarizing) * f
    } else {
        f
    }
}

/// Ordered product of noisy segment propagators and frame gates.
pub fn evolve_schedule(s: &PulseSchedule, noise: &NoiseModel, extra_coherent: &[HamiltonianTerm]) -> Result<SuperOp> {
    let identity = PauliString::identity(s.n);
    let mut k = SuperOp::identity(s.hilbert_dim());
    for step in &s.steps {
        let factor = match step {
            ScheduleStep::Segment(g) => PstEngine::new(g, extra_coherent, noise)?.bare(&identity),
            ScheduleStep::Frame(p) => frame_superop(p, noise),
        };
        k = factor * k;
    }
    Ok(k)
}

/// Error-free propagator of the drive terms and frames.
pub fn ideal_schedule(s: &PulseSchedule) -> SuperOp {
    s.steps.iter().fold(SuperOp::identity(s.hilbert_dim()), |k, step| match step {
        ScheduleStep::Segment(g) => g.ideal_superop() * k,
        ScheduleStep::Frame(p) => cached_superop(p) * k,
    })
}

/// Every segment cut into `m` equal slices, each slice pseudo-twirled and
/// averaged over `plan`. Sampled plans draw slice `k` (counted over the
/// whole schedule) from substream `k`.
pub fn sliced_pst(
    s: &PulseSchedule,
    m: usize,
    plan: &TwirlPlan,
    noise: &NoiseModel,
    extra_coherent: &[HamiltonianTerm],
) -> Result<SuperOp> {
    if m == 0 {
        return Err(Error::Invalid("number of slices must be >= 1".into()));
    }
    let mut k = SuperOp::identity(s.hilbert_dim());
    let mut slice_index = 0u64;
    for step in &s.steps {
        match step {
            ScheduleStep::Segment(g) => {
                let slice = g.with_duration(g.duration / m as f64);
                let engine = PstEngine::new(&slice, extra_coherent, noise)?;
                if plan.is_full() {
                    let avg = engine.average(&plan.draw(s.n))?;
                    for _ in 0..m {
                        k = &avg * k;
                    }
                    slice_index += m as u64;
                } else {
                    for _ in 0..m {
                        k = engine.average(&plan.draw_stream(s.n, slice_index))? * k;
                        slice_index += 1;
                    }
                }
            }
            ScheduleStep::Frame(p) => k = frame_superop(p, noise) * k,
        }
    }
    Ok(k)
}

/// `‖𝒦_PST^(m) − 𝒰_T‖_op`.
pub fn slicing_error_norm(
    s: &PulseSchedule,
    m: usize,
    plan: &TwirlPlan,
    noise: &NoiseModel,
    extra_coherent: &[HamiltonianTerm],
) -> Result<f64> {
    Ok(sliced_pst(s, m, plan, noise, extra_coherent)?.distance(&ideal_schedule(s)))
}

/// Coherent error of a segment: every term that is not part of the drive,
/// plus the extra terms.
pub fn coherent_error(g: &GateModel, extra_coherent: &[HamiltonianTerm]) -> CMatrix {
    let d = g.hilbert_dim();
    g.terms
        .iter()
        .filter(|t| t.parity != ParityClass::FOdd)
        .chain(extra_coherent)
        .fold(CMatrix::zeros(d, d), |acc, t| acc + t.hilbert())
}

/// `4⁻ⁿ Σ_α 𝓛(P_α H P_α)`.
pub fn twirled_dissipator(h: &CMatrix, n: usize) -> SuperOp {
    let terms: Vec<SuperOp> = all_paulis(n)
        .iter()
        .map(|a| {
            let p = a.matrix();
            lindblad_superop(&(&p * h * &p))
        })
        .collect();
    mean_fixed_order(&terms)
}

/// Exponent `M` of the large-slice-count limit `𝒦^(m) ≈ 𝒰_T e^{M/m}`:
/// `M = Σ_seg T_seg ∫_seg 𝒰(t)† L̄_seg 𝒰(t) dt`, evaluated with a midpoint
/// rule of `steps` points per segment. `𝒰(t)` is the ideal propagator from
/// the start of the schedule, frames included.
pub fn first_magnus_term(s: &PulseSchedule, extra_coherent: &[HamiltonianTerm], steps: usize) -> Result<SuperOp> {
    if steps == 0 {
        return Err(Error::Invalid("quadrature needs at least one step".into()));
    }
    let d = s.hilbert_dim();
    let mut acc = SuperOp::zeros(d);
    let mut u = SuperOp::identity(d);
    for step in &s.steps {
        match step {
            ScheduleStep::Segment(g) => {
                let l_bar = twirled_dissipator(&coherent_error(g, extra_coherent), s.n);
                let dt = g.duration / steps as f64;
                let half = g.with_duration(dt / 2.0).ideal_superop();
                let full = g.with_duration(dt).ideal_superop();
                let mut frame = &half * &u;
                let mut integral = SuperOp::zeros(d);
                for _ in 0..steps {
                    integral = integral + frame.adjoint() * &l_bar * &frame;
                    frame = &full * frame;
                }
                acc = acc + integral.scale(g.duration * dt);
                u = g.ideal_superop() * u;
            }
            ScheduleStep::Frame(p) => u = cached_superop(p) * u,
        }
    }
    Ok(acc)
}

/// `𝒰_T · exp(M/m)`.
pub fn large_m_limit(s: &PulseSchedule, m: usize, extra_coherent: &[HamiltonianTerm], steps: usize) -> Result<SuperOp> {
    if m == 0 {
        return Err(Error::Invalid("number of slices must be >= 1".into()));
    }
    let exponent = first_magnus_term(s, extra_coherent, steps)?.scale(1.0 / m as f64);
    Ok(ideal_schedule(s) * exponent.expm())
}

/// Norm `b` of the first Magnus term, the predicted coefficient of the
/// `b/m` slicing law.
pub fn first_magnus_norm(s: &PulseSchedule, extra_coherent: &[HamiltonianTerm]) -> Result<f64> {
    Ok(first_magnus_term(s, extra_coherent, 512)?.op_norm())
}

/// `R_y(π/2)` on `qubit` as a Hilbert-space matrix.
pub fn ry_half_pi(qubit: usize, n: usize) -> Result<CMatrix> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let ry = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-c, 0.0), C64::new(c, 0.0), C64::new(c, 0.0)]);
    crate::noise::embed_single_qubit(&ry, qubit, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, max_abs, I};
    use crate::liouville::unitary_superop;
    use crate::noise::amplitude_damping;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn cr_terms_have_expected_parities() {
        let params = CrossResonanceParams { a: 0.8, phi: 0.1, zeta: 0.02, chi: 1.01, duration: 1.0 };
        let terms = cr_hamiltonian(&params).unwrap();
        assert_eq!(terms.len(), 3);
        assert!((terms[0].coeff - 1.01 * 0.8 * 0.1f64.cos()).abs() < 1e-15);
        assert!((terms[1].coeff - 1.01 * 0.8 * 0.1f64.sin()).abs() < 1e-15);
        let inv: Vec<_> = terms.iter().map(HamiltonianTerm::drive_inverted).collect();
        assert_eq!(inv[0].coeff, -terms[0].coeff);
        assert_eq!(inv[1].coeff, -terms[1].coeff);
        assert_eq!(inv[2].coeff, terms[2].coeff);
        assert!(cr_hamiltonian(&CrossResonanceParams { chi: 0.0, ..params }).is_err());
        assert!(cr_hamiltonian(&CrossResonanceParams { duration: 0.0, ..params }).is_err());
    }

    #[test]
    fn single_segment_is_half_pi_zx() {
        let s = PulseSchedule::single_segment(&CrossResonanceParams::half_pi(0.0, 0.0)).unwrap();
        let k = evolve_schedule(&s, &NoiseModel::none(), &[]).unwrap();
        let oracle = unitary_superop(&expm(&(p("ZX").matrix() * (-I * FRAC_PI_4)))).unwrap();
        assert!(max_abs((&k - &oracle).matrix()) < 1e-12);
        assert!((k.op_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn echo_matches_four_factor_product() {
        let params = CrossResonanceParams::half_pi(0.05, 0.03);
        let s = PulseSchedule::echo_cr(&params).unwrap();
        let k = evolve_schedule(&s, &NoiseModel::none(), &[]).unwrap();
        let c = params.a * params.phi.cos();
        let ys = params.a * params.phi.sin();
        let h1 = p("ZX").matrix() * C64::new(c, 0.0)
            + p("ZY").matrix() * C64::new(ys, 0.0)
            + p("ZZ").matrix() * C64::new(params.zeta, 0.0);
        let h2 = p("ZX").matrix() * C64::new(-c, 0.0) - p("ZY").matrix() * C64::new(ys, 0.0)
            + p("ZZ").matrix() * C64::new(params.zeta, 0.0);
        let x = p("XI").matrix();
        let u = &x * expm(&(h2 * (-I * 0.5))) * &x * expm(&(h1 * (-I * 0.5)));
        assert!(max_abs((&k - unitary_superop(&u).unwrap()).matrix()) < 1e-12);
        // Net drive is the π/2 ZX rotation; ζ only enters at second order.
        let ideal = ideal_schedule(&s);
        let target = unitary_superop(&expm(&(p("ZX").matrix() * (-I * FRAC_PI_4)))).unwrap();
        assert!(max_abs((&ideal - &target).matrix()) < 1e-12);
        let plain = PulseSchedule::single_segment(&CrossResonanceParams { phi: 0.0, ..params }).unwrap();
        let echo = PulseSchedule::echo_cr(&CrossResonanceParams { phi: 0.0, ..params }).unwrap();
        let none = NoiseModel::none();
        let err_plain = evolve_schedule(&plain, &none, &[]).unwrap().distance(&target);
        let err_echo = evolve_schedule(&echo, &none, &[]).unwrap().distance(&target);
        assert!(err_echo < err_plain);
    }

    #[test]
    fn zero_duration_schedule_is_identity() {
        let s = PulseSchedule::new(2, vec![]).unwrap();
        assert_eq!(evolve_schedule(&s, &NoiseModel::none(), &[]).unwrap(), SuperOp::identity(4));
        let g = GateModel::new(p("ZX"), vec![HamiltonianTerm::target(p("ZX"), 1.0)], 0.0).unwrap();
        let s = PulseSchedule::new(2, vec![ScheduleStep::Segment(g)]).unwrap();
        assert!(
            max_abs((evolve_schedule(&s, &NoiseModel::none(), &[]).unwrap() - SuperOp::identity(4)).matrix()) < 1e-15
        );
    }

    #[test]
    fn one_slice_is_gate_level_pst() {
        let params = CrossResonanceParams::half_pi(0.0, 0.04);
        let s = PulseSchedule::single_segment(&params).unwrap();
        let noise = NoiseModel::new(vec![amplitude_damping(0, 0.01, 2).unwrap()]);
        let sliced = sliced_pst(&s, 1, &TwirlPlan::full(), &noise, &[]).unwrap();
        let g = s.segments().next().unwrap();
        let gate = crate::twirl::pst::pst_average(g, &TwirlPlan::full(), &[], &noise).unwrap();
        assert!(max_abs((sliced - gate).matrix()) < 1e-13);
    }

    #[test]
    fn no_coherent_error_gives_zero_slicing_error() {
        let s = PulseSchedule::single_segment(&CrossResonanceParams::half_pi(0.0, 0.0)).unwrap();
        for m in [1, 3] {
            let e = slicing_error_norm(&s, m, &TwirlPlan::full(), &NoiseModel::none(), &[]).unwrap();
            assert!(e < 1e-12, "m={m}: {e}");
        }
        assert!(sliced_pst(&s, 0, &TwirlPlan::full(), &NoiseModel::none(), &[]).is_err());
    }

    #[test]
    fn sampled_slices_are_reproducible() {
        let s = PulseSchedule::echo_cr(&CrossResonanceParams::half_pi(0.02, 0.05)).unwrap();
        let plan = TwirlPlan::sampled(3, 11).unwrap();
        let a = sliced_pst(&s, 4, &plan, &NoiseModel::none(), &[]).unwrap();
        let b = sliced_pst(&s, 4, &plan, &NoiseModel::none(), &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ry_maps_z_readout_to_minus_x() {
        let r = ry_half_pi(0, 1).unwrap();
        let z = p("Z").matrix();
        let x = p("X").matrix();
        assert!(max_abs(&(r.adjoint() * z * &r + x)) < 1e-15);
    }
}
