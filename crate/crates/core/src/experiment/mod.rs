//! Declarative experiment runner: TOML config in, CSV tables with JSON
//! sidecars out.
//!
//! Exit-code contract: parse errors 2, validation errors 3 (with the dotted
//! field path), numeric failures 4, I/O failures 1.

pub mod config;
pub mod fit;
pub mod identities;
pub mod table;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use thiserror::Error;

use crate::calibration::{fit_line, CalibrationScan};
use crate::error::Error;
use crate::kik::{histogram, run_ising_study, suppression_histogram, weighted_damping, IsingConfig};
use crate::noise::{amplitude_damping, extract_noise, hermiticity_g, NoiseModel};
use crate::pulse::{
    evolve_schedule, first_magnus_norm, ideal_schedule, sliced_pst, slicing_error_norm, CrossResonanceParams,
    PulseSchedule,
};
use crate::twirl::TwirlPlan;

pub use config::{ExperimentConfig, ExperimentKind};
pub use fit::{fit_inverse_m, InverseFit};
pub use identities::{identity_checks, IdentityCheck};
pub use table::{config_hash, Metadata, ResultTable};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PSTLAB_OUT_DIR";

/// Output directory when neither flag, config nor environment sets one.
pub const DEFAULT_OUT_DIR: &str = "results";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Validation { .. } => 3,
            Self::Numeric(_) => 4,
            Self::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

/// Attach a config path to kernel errors: input errors become validation
/// errors at `path`, everything else is a numeric failure.
fn at(path: &'static str) -> impl Fn(Error) -> ExperimentError {
    move |e| match e {
        Error::Invalid(m) | Error::Dimension(m) => ExperimentError::Validation { path: path.into(), message: m },
        Error::Numeric(m) => ExperimentError::Numeric(m),
        other => ExperimentError::Numeric(other.to_string()),
    }
}

/// Command-line overrides of a config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Tables produced by one run, each with its file stem.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tables: Vec<(String, ResultTable)>,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn table(&self, stem: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }

    /// Numeric failure naming the first failed identity check, if any.
    pub fn check_identities(&self) -> Result<(), ExperimentError> {
        for (_, t) in &self.tables {
            let Some(passed) = t.column("passed").filter(|_| t.label_column().is_some()) else {
                continue;
            };
            if let Some(i) = passed.iter().position(|&p| p != 1.0) {
                let n = t.column("n").map_or(0.0, |c| c[i]);
                return Err(ExperimentError::Numeric(format!("identity check {} failed for n = {n}", t.labels()[i])));
            }
        }
        Ok(())
    }
}

/// Flag, then `[output].dir`, then `$PSTLAB_OUT_DIR`, then `results`.
pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig, env: Option<OsString>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Validate and compute every table of `config`, with metadata filled in.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<(String, ResultTable)>, ExperimentError> {
    config.validate()?;
    let config = &config.resolved();
    let stem = config.stem();
    let mut tables = match config.experiment {
        ExperimentKind::Slicing => vec![(stem, slicing(config)?)],
        ExperimentKind::Hermitianizer => vec![(stem, hermitianizer(config)?)],
        ExperimentKind::IsingKik => ising(config, &stem)?,
        ExperimentKind::Calibration => vec![(stem, calibration(config)?)],
        ExperimentKind::Identities => vec![(stem, identities(config)?)],
    };
    let echo = serde_json::to_value(config).expect("config serializes");
    let hash = config_hash(&echo);
    let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    for (_, t) in &mut tables {
        t.metadata.experiment = config.experiment.name().to_string();
        t.metadata.version = VERSION.to_string();
        t.metadata.seed = config.seed;
        t.metadata.config_hash = hash.clone();
        t.metadata.timestamp_unix = timestamp_unix;
    }
    Ok(tables)
}

/// Apply overrides, compute, and write `<stem>.csv` + `<stem>.json` per
/// table.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, ExperimentError> {
    let mut config = config.resolved();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let dir = resolve_out_dir(opts.out_dir.as_deref(), &config, std::env::var_os(OUT_DIR_ENV));
    let tables = execute(&config)?;
    let echo = serde_json::to_value(&config).expect("config serializes");
    let mut files = Vec::new();
    for (stem, t) in &tables {
        let (csv, json) = t.write(&dir, stem, &echo)?;
        files.extend([csv, json]);
    }
    Ok(RunOutput { tables, files })
}

/// [`run`] on a config file.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunOutput, ExperimentError> {
    run(&ExperimentConfig::load(path)?, opts)
}

fn slicing(config: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let s = config.slicing();
    let params = CrossResonanceParams::half_pi(s.phi, s.zeta);
    let schedule = match s.schedule {
        config::ScheduleKind::Single => PulseSchedule::single_segment(&params),
        config::ScheduleKind::Echo => PulseSchedule::echo_cr(&params),
    }
    .map_err(at("slicing"))?;
    let plan = config.twirl_plan()?;
    let noise = config.base_noise(2)?;
    let errors =
        s.m.par_iter()
            .map(|&m| slicing_error_norm(&schedule, m, &plan, &noise, &[]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(at("slicing.m"))?;
    let points: Vec<(f64, f64)> = s.m.iter().map(|&m| m as f64).zip(errors.iter().copied()).collect();
    let fit = fit_inverse_m(&points).map_err(at("slicing.m"))?;

    let mut t = ResultTable::new(["m", "err", "fit"]);
    for (m, err) in points {
        t.push_row(vec![m, err, fit.b / m])?;
    }
    t.set_extra("fit_b", fit.b)?;
    t.set_extra("fit_residual", fit.residual)?;
    t.set_extra("fit_misfit", f64::from(u8::from(fit.misfit)))?;
    t.set_extra("magnus_b", first_magnus_norm(&schedule, &[]).map_err(at("slicing"))?)?;
    Ok(t)
}

fn hermitianizer(config: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let s = config.hermitianizer();
    let schedule =
        PulseSchedule::echo_cr(&CrossResonanceParams::half_pi(s.phi, s.zeta)).map_err(at("hermitianizer"))?;
    let plan = config.twirl_plan()?;
    let base = config.base_noise(2)?;
    let u = ideal_schedule(&schedule);
    let rows = s
        .damping
        .par_iter()
        .map(|&gamma| {
            let mut noise = base.clone();
            for q in 0..2 {
                noise.dissipators.push(amplitude_damping(q, gamma, 2)?);
            }
            let bare = evolve_schedule(&schedule, &noise, &[])?;
            let twirled = sliced_pst(&schedule, 1, &plan, &noise, &[])?;
            let g_bare = hermiticity_g(&extract_noise(&bare, &u)?)?;
            let g_pst = hermiticity_g(&extract_noise(&twirled, &u)?)?;
            Ok(vec![gamma, g_bare, g_pst, g_bare / g_pst])
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(at("hermitianizer.damping"))?;
    let mut t = ResultTable::new(["damping", "g_no_pst", "g_pst", "ratio"]);
    for row in rows {
        t.push_row(row)?;
    }
    Ok(t)
}

fn ising_config(config: &ExperimentConfig, plan: TwirlPlan) -> Result<IsingConfig, ExperimentError> {
    let s = config.ising();
    let mut noise: NoiseModel = weighted_damping(s.n, &s.weights, s.scale).map_err(at("ising.weights"))?;
    let base = config.base_noise(s.n)?;
    noise.dissipators.extend(base.dissipators);
    noise.twirl_depolarizing = base.twirl_depolarizing;
    Ok(IsingConfig { n: s.n, j: s.j, g: s.g, epsilon: s.epsilon[0], noise, plan })
}

fn ising(config: &ExperimentConfig, stem: &str) -> Result<Vec<(String, ResultTable)>, ExperimentError> {
    let s = config.ising();
    let c = ising_config(config, config.twirl_plan()?)?;
    let results = run_ising_study(&c, &s.epsilon).map_err(at("ising"))?;
    let mut t = ResultTable::new(["epsilon", "err_raw", "err_pst", "err_kik", "err_kik_pst", "suppression"]);
    for r in &results {
        t.push_row(vec![r.epsilon, r.err_raw, r.err_pst_only, r.err_kik_only, r.err_kik_pst, r.suppression_factor])?;
    }
    let mut tables = vec![(stem.to_string(), t)];

    if let Some(h) = &s.histogram {
        let epsilon = h.epsilon.unwrap_or_else(|| s.epsilon.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let mut ht = ResultTable::new(["n_pst", "bin_lo", "bin_hi", "count"]);
        ht.set_extra("epsilon", epsilon)?;
        for &count in &h.counts {
            let plan = TwirlPlan::sampled(count, config.seed).map_err(at("ising.histogram.counts"))?;
            let hc = ising_config(config, plan)?.with_epsilon(epsilon);
            let values = suppression_histogram(&hc, h.repeats).map_err(at("ising.histogram"))?;
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            ht.set_extra(&format!("mean_suppression_n{count}"), mean)?;
            for bin in histogram(&values, h.bins).map_err(at("ising.histogram"))? {
                ht.push_row(vec![count as f64, bin.lo, bin.hi, bin.count as f64])?;
            }
        }
        tables.push((format!("{stem}_histogram"), ht));
    }
    Ok(tables)
}

fn calibration(config: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let s = config.calibration();
    let scan = CalibrationScan {
        reps: s.reps,
        chi_grid: s.chi.clone(),
        params: CrossResonanceParams::half_pi(s.phi, s.zeta),
        noise: config.base_noise(2)?,
        pst: if s.pst { Some(config.twirl_plan()?) } else { None },
        basis: s.basis,
        shots: s.shots,
        realizations: s.realizations,
        seed: config.seed,
    };
    let points = scan.run().map_err(at("calibration"))?;
    let mut t = ResultTable::new(["chi", "sp_mean", "sigma", "n_twirls"]);
    for p in &points {
        t.push_row(vec![p.chi, p.sp_mean, p.sigma, p.n_twirls as f64])?;
    }
    if points.len() >= 3 {
        let x: Vec<f64> = points.iter().map(|p| p.chi).collect();
        let y: Vec<f64> = points.iter().map(|p| p.sp_mean).collect();
        let line = fit_line(&x, &y).map_err(at("calibration.chi"))?;
        t.set_extra("slope", line.slope)?;
        t.set_extra("slope_se", line.slope_se)?;
        t.set_extra("intercept", line.intercept)?;
    }
    Ok(t)
}

fn identities(config: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let s = config.identities();
    let qubits: Vec<usize> = match s.n {
        Some(n) => vec![n],
        None => vec![1, 2, 3],
    };
    let mut t = ResultTable::new(["n", "trials", "max_residual", "tolerance", "passed"]).with_label_column("check");
    let mut all = true;
    for n in qubits {
        for c in identity_checks(n, s.samples, config.seed).map_err(at("identities"))? {
            all &= c.passed();
            let row = vec![n as f64, c.trials as f64, c.max_residual, c.tolerance, f64::from(u8::from(c.passed()))];
            t.push_labeled_row(&c.name, row)?;
        }
    }
    t.set_extra("all_passed", f64::from(u8::from(all)))?;
    Ok(t)
}
