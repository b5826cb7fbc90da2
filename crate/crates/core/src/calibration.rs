//! Deep calibration scans of a repeated echoed cross-resonance pulse.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{ground_state, unitary_superop, StateVec, SuperOp};
use crate::noise::NoiseModel;
use crate::pauli::{all_paulis, cached_superop, PauliString};
use crate::pulse::{ry_half_pi, CrossResonanceParams, PulseSchedule, ScheduleStep};
use crate::twirl::plan::{substream, TwirlPlan};
use crate::twirl::pst::PstEngine;

pub const DEFAULT_REPS: usize = 21;

/// 41 points evenly spaced over `[0.99, 1.01]`.
pub fn default_chi_grid() -> Vec<f64> {
    (0..41).map(|k| 0.99 + 0.0005 * k as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureBasis {
    /// Population of |00⟩: sensitive to the ZX rotation angle.
    Zx,
    /// `R_y(π/2)` on the target before readout: sensitive to ZY.
    Zy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationScan {
    pub reps: usize,
    pub chi_grid: Vec<f64>,
    pub params: CrossResonanceParams,
    pub noise: NoiseModel,
    /// `None` runs the bare pulses; with a sampled plan, `count` is the
    /// number of twirl realizations per grid point.
    pub pst: Option<TwirlPlan>,
    pub basis: MeasureBasis,
    /// Shots per realization; `None` uses exact expectation values.
    pub shots: Option<u64>,
    /// Realizations per point when PST is off (only differ by shot noise).
    pub realizations: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub chi: f64,
    pub sp_mean: f64,
    pub sigma: f64,
    pub n_twirls: usize,
}

/// Per-segment twirl realizations of one echoed pulse at a fixed `χ`.
struct PulseTables {
    /// `tables[s][α]`: segment `s` realized with twirl `α`.
    tables: Vec<Vec<SuperOp>>,
    frames: Vec<Option<SuperOp>>,
    readout: Option<SuperOp>,
}

impl CalibrationScan {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Invalid("reps must be >= 1".into()));
        }
        if self.chi_grid.is_empty() {
            return Err(Error::Invalid("chi grid is empty".into()));
        }
        if let Some(chi) = self.chi_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Invalid(format!("chi {chi} must be > 0")));
        }
        if self.shots == Some(0) {
            return Err(Error::Invalid("shots must be >= 1".into()));
        }
        if self.pst.is_none() && self.realizations == 0 {
            return Err(Error::Invalid("realizations must be >= 1".into()));
        }
        self.params.validate()
    }

    /// Number of realizations averaged per grid point.
    pub fn realizations_per_point(&self) -> usize {
        match &self.pst {
            Some(plan) if plan.is_full() => 1,
            Some(plan) => plan.count,
            None => self.realizations,
        }
    }

    fn tables(&self, chi: f64) -> Result<PulseTables> {
        let schedule = PulseSchedule::echo_cr(&self.params.with_chi(chi))?;
        let n = schedule.n;
        let twirls: Vec<PauliString> = match &self.pst {
            Some(_) => all_paulis(n),
            None => vec![PauliString::identity(n)],
        };
        let mut tables = Vec::new();
        let mut frames = Vec::new();
        for step in &schedule.steps {
            match step {
                ScheduleStep::Segment(g) => {
                    let engine = PstEngine::new(g, &[], &self.noise)?;
                    tables.push(twirls.iter().map(|a| engine.realize(a)).collect());
                    frames.push(None);
                }
                ScheduleStep::Frame(p) => frames.push(Some(cached_superop(p).clone())),
            }
        }
        let readout = match self.basis {
            MeasureBasis::Zx => None,
            MeasureBasis::Zy => Some(unitary_superop(&ry_half_pi(1, n)?)?),
        };
        Ok(PulseTables { tables, frames, readout })
    }

    fn survival(&self, t: &PulseTables, mut pick: impl FnMut(usize) -> usize) -> Result<f64> {
        let mut rho: StateVec = ground_state(4);
        for _ in 0..self.reps {
            let mut seg = 0;
            for frame in &t.frames {
                rho = match frame {
                    Some(f) => f.apply(&rho)?,
                    None => {
                        let table = &t.tables[seg];
                        seg += 1;
                        table[pick(table.len())].apply(&rho)?
                    }
                };
            }
        }
        if let Some(r) = &t.readout {
            rho = r.apply(&rho)?;
        }
        let p = rho.as_vector()[0].re;
        if !p.is_finite() {
            return Err(Error::Numeric(format!("survival probability {p} is not finite")));
        }
        Ok(p)
    }

    fn sample_shots<R: Rng>(&self, p: f64, rng: &mut R) -> Result<f64> {
        match self.shots {
            None => Ok(p),
            Some(shots) => {
                let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
                    .map_err(|e| Error::Numeric(format!("binomial sampling: {e}")))?;
                Ok(dist.sample(rng) as f64 / shots as f64)
            }
        }
    }

    /// `count` independent realizations `R_j` at `chi`, drawn from RNG
    /// substream `stream`. With a full twirl plan the single value is the
    /// exact twirl average.
    pub fn realizations(&self, chi: f64, stream: u64, count: usize) -> Result<Vec<f64>> {
        let tables = self.tables(chi)?;
        self.realizations_from(&tables, stream, count)
    }

    fn realizations_from(&self, t: &PulseTables, stream: u64, count: usize) -> Result<Vec<f64>> {
        let mut rng = substream(self.seed, stream);
        match &self.pst {
            Some(plan) if plan.is_full() => {
                let averaged = PulseTables {
                    tables: t.tables.iter().map(|row| vec![crate::twirl::plan::mean_fixed_order(row)]).collect(),
                    frames: t.frames.clone(),
                    readout: t.readout.clone(),
                };
                let p = self.survival(&averaged, |_| 0)?;
                Ok(vec![self.sample_shots(p, &mut rng)?])
            }
            Some(_) => (0..count)
                .map(|_| {
                    let p = self.survival(t, |len| rng.random_range(0..len))?;
                    self.sample_shots(p, &mut rng)
                })
                .collect(),
            None => {
                let p = self.survival(t, |_| 0)?;
                (0..count).map(|_| self.sample_shots(p, &mut rng)).collect()
            }
        }
    }

    /// Run the scan; grid point `i` uses RNG substream `i`.
    pub fn run(&self) -> Result<Vec<CalibrationPoint>> {
        self.validate()?;
        let count = self.realizations_per_point();
        let n_twirls = match &self.pst {
            Some(plan) => plan.len(2),
            None => 0,
        };
        self.chi_grid
            .par_iter()
            .enumerate()
            .map(|(i, &chi)| {
                let r = self.realizations(chi, i as u64, count)?;
                let sp_mean = r.iter().sum::<f64>() / r.len() as f64;
                let sigma = if r.len() >= 2 { variance_of_noisy_means(&r)? } else { 0.0 };
                Ok(CalibrationPoint { chi, sp_mean, sigma, n_twirls })
            })
            .collect()
    }
}

/// Functional form of [`CalibrationScan::run`].
#[allow(clippy::too_many_arguments)]
pub fn deep_calibration_scan(
    reps: usize,
    chi_grid: &[f64],
    params: &CrossResonanceParams,
    noise: &NoiseModel,
    pst: Option<TwirlPlan>,
    basis: MeasureBasis,
    seed: u64,
) -> Result<Vec<CalibrationPoint>> {
    CalibrationScan {
        reps,
        chi_grid: chi_grid.to_vec(),
        params: *params,
        noise: noise.clone(),
        pst,
        basis,
        shots: None,
        realizations: 1,
        seed,
    }
    .run()
}

/// `σ² = (1/(n−1)) Σ_j (R_j − R̄)²`.
pub fn variance_of_noisy_means(r: &[f64]) -> Result<f64> {
    if r.len() < 2 {
        return Err(Error::Invalid(format!("need at least 2 realizations, got {}", r.len())));
    }
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let ss: f64 = r.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Invalid("line fit needs at least 3 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("line fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let slope_se = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(LineFit { slope, intercept, slope_se, ssr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::amplitude_damping;
    use std::f64::consts::PI;

    fn scan(basis: MeasureBasis, pst: Option<TwirlPlan>, reps: usize, phi: f64) -> CalibrationScan {
        CalibrationScan {
            reps,
            chi_grid: vec![0.995, 1.0, 1.005],
            params: CrossResonanceParams::half_pi(phi, 0.0),
            noise: NoiseModel::none(),
            pst,
            basis,
            shots: None,
            realizations: 1,
            seed: 3,
        }
    }

    #[test]
    fn noiseless_zx_follows_cosine_profile() {
        let s = scan(MeasureBasis::Zx, None, 21, 0.0);
        for pt in s.run().unwrap() {
            let theta = 21.0 * PI / 4.0 * pt.chi;
            assert!((pt.sp_mean - theta.cos().powi(2)).abs() < 1e-12);
        }
        let at_one = s.run().unwrap()[1].sp_mean;
        assert!((at_one - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_zy_sees_phase_error() {
        let phi = 0.02;
        let s = scan(MeasureBasis::Zy, None, 20, phi);
        for pt in s.run().unwrap() {
            let theta = 20.0 * PI / 2.0 * pt.chi / phi.cos();
            let oracle = (1.0 - theta.sin() * phi.sin()) / 2.0;
            assert!((pt.sp_mean - oracle).abs() < 1e-12, "{} vs {oracle}", pt.sp_mean);
        }
    }

    #[test]
    fn full_plan_removes_phase_error_to_first_order() {
        let s = scan(MeasureBasis::Zy, Some(TwirlPlan::full()), 20, 0.02);
        for pt in s.run().unwrap() {
            assert!((pt.sp_mean - 0.5).abs() < 1e-3, "{}", pt.sp_mean);
        }
    }

    #[test]
    fn scan_is_deterministic_and_physical() {
        let mut s = scan(MeasureBasis::Zx, Some(TwirlPlan::sampled(5, 1).unwrap()), 3, 0.02);
        s.noise = NoiseModel::new(vec![amplitude_damping(0, 0.01, 2).unwrap()]);
        s.shots = Some(100);
        let a = s.run().unwrap();
        assert_eq!(a, s.run().unwrap());
        assert!(a.iter().all(|p| (0.0..=1.0).contains(&p.sp_mean) && p.sigma >= 0.0));
        assert!(CalibrationScan { reps: 0, ..s }.run().is_err());
    }

    #[test]
    fn noisy_means_variance() {
        assert_eq!(variance_of_noisy_means(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert!((variance_of_noisy_means(&[0.0, 1.0]).unwrap().powi(2) - 0.5).abs() < 1e-15);
        assert!(variance_of_noisy_means(&[1.0]).is_err());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-14);
        assert!(fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
