//! TOML experiment configuration.
//!
//! Only `experiment` and `seed` are required; every section falls back to
//! the reference setup of its study. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::calibration::{default_chi_grid, MeasureBasis, DEFAULT_REPS};
use crate::kik::{DEFAULT_DAMPING_WEIGHTS, DEFAULT_NOISE_SCALE};
use crate::noise::{amplitude_damping, dephasing, NoiseModel};
use crate::twirl::{TwirlMode, TwirlPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Slicing,
    Hermitianizer,
    IsingKik,
    Calibration,
    Identities,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Slicing => "slicing",
            Self::Hermitianizer => "hermitianizer",
            Self::IsingKik => "ising-kik",
            Self::Calibration => "calibration",
            Self::Identities => "identities",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the experiment name.
    pub stem: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwirlSection {
    pub mode: TwirlMode,
    #[serde(default)]
    pub count: usize,
}

impl Default for TwirlSection {
    fn default() -> Self {
        Self { mode: TwirlMode::Full, count: 0 }
    }
}

/// Per-qubit Lindblad rates shared by all studies; each study adds its own
/// dissipators on top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub amplitude_damping: Vec<f64>,
    #[serde(default)]
    pub dephasing: Vec<f64>,
    /// Multiplies every rate above.
    #[serde(default = "one")]
    pub scale: f64,
    /// Depolarizing probability attached to each non-identity twirl layer.
    #[serde(default)]
    pub twirl_depolarizing: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { amplitude_damping: Vec::new(), dephasing: Vec::new(), scale: 1.0, twirl_depolarizing: 0.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Single,
    Echo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlicingSection {
    pub m: Vec<usize>,
    pub phi: f64,
    pub zeta: f64,
    pub schedule: ScheduleKind,
}

impl Default for SlicingSection {
    fn default() -> Self {
        Self { m: vec![1, 2, 4, 8, 16, 32], phi: 0.0, zeta: 0.05, schedule: ScheduleKind::Single }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HermitianizerSection {
    /// Amplitude-damping rate applied to every qubit, one table row each.
    pub damping: Vec<f64>,
    pub phi: f64,
    pub zeta: f64,
}

impl Default for HermitianizerSection {
    fn default() -> Self {
        Self { damping: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1], phi: 0.0, zeta: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramSection {
    pub repeats: usize,
    /// Sampled ensemble sizes to compare.
    pub counts: Vec<usize>,
    pub bins: usize,
    /// Defaults to the largest value of the epsilon grid.
    pub epsilon: Option<f64>,
}

impl Default for HistogramSection {
    fn default() -> Self {
        Self { repeats: 200, counts: vec![20, 100], bins: 20, epsilon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsingSection {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub epsilon: Vec<f64>,
    /// Per-qubit amplitude-damping weights, multiplied by `scale`.
    pub weights: Vec<f64>,
    pub scale: f64,
    pub histogram: Option<HistogramSection>,
}

impl Default for IsingSection {
    fn default() -> Self {
        Self {
            n: 3,
            j: 0.1,
            g: 0.2,
            epsilon: (1..=10).map(|k| 0.005 * k as f64).collect(),
            weights: DEFAULT_DAMPING_WEIGHTS.to_vec(),
            scale: DEFAULT_NOISE_SCALE,
            histogram: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub reps: usize,
    pub chi: Vec<f64>,
    pub basis: MeasureBasis,
    pub phi: f64,
    pub zeta: f64,
    /// Twirl with the `[twirl]` plan; off runs the bare pulses.
    pub pst: bool,
    pub shots: Option<u64>,
    /// Realizations per point without PST.
    pub realizations: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            reps: DEFAULT_REPS,
            chi: default_chi_grid(),
            basis: MeasureBasis::Zx,
            phi: 0.02,
            zeta: 0.0,
            pst: true,
            shots: None,
            realizations: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesSection {
    /// Qubit count to check; all of 1, 2, 3 when absent.
    pub n: Option<usize>,
    /// Random trials per sampled check.
    pub samples: usize,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        Self { n: None, samples: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub twirl: TwirlSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub slicing: Option<SlicingSection>,
    pub hermitianizer: Option<HermitianizerSection>,
    pub ising: Option<IsingSection>,
    pub calibration: Option<CalibrationSection>,
    pub identities: Option<IdentitiesSection>,
}

fn invalid(path: &str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Validation { path: path.to_string(), message: message.into() }
}

fn check_rates(path: &str, rates: &[f64]) -> Result<(), ExperimentError> {
    for (i, r) in rates.iter().enumerate() {
        if !(r.is_finite() && *r >= 0.0) {
            return Err(invalid(&format!("{path}[{i}]"), format!("rate {r} must be finite and >= 0")));
        }
    }
    Ok(())
}

fn check_finite(path: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("{v} is not finite")))
    }
}

fn check_nonempty<T>(path: &str, v: &[T]) -> Result<(), ExperimentError> {
    if v.is_empty() {
        Err(invalid(path, "must not be empty"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ExperimentError::Parse(m) => ExperimentError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Minimal config for `experiment` with default sections.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            output: OutputSection::default(),
            twirl: TwirlSection::default(),
            noise: NoiseSection::default(),
            slicing: None,
            hermitianizer: None,
            ising: None,
            calibration: None,
            identities: None,
        }
    }

    /// Copy with the active experiment's section filled in from defaults,
    /// so the config echo records every parameter used.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        match c.experiment {
            ExperimentKind::Slicing => c.slicing = Some(self.slicing()),
            ExperimentKind::Hermitianizer => c.hermitianizer = Some(self.hermitianizer()),
            ExperimentKind::IsingKik => c.ising = Some(self.ising()),
            ExperimentKind::Calibration => c.calibration = Some(self.calibration()),
            ExperimentKind::Identities => c.identities = Some(self.identities()),
        }
        c
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn slicing(&self) -> SlicingSection {
        self.slicing.clone().unwrap_or_default()
    }

    pub fn hermitianizer(&self) -> HermitianizerSection {
        self.hermitianizer.clone().unwrap_or_default()
    }

    pub fn ising(&self) -> IsingSection {
        self.ising.clone().unwrap_or_default()
    }

    pub fn calibration(&self) -> CalibrationSection {
        self.calibration.clone().unwrap_or_default()
    }

    pub fn identities(&self) -> IdentitiesSection {
        self.identities.clone().unwrap_or_default()
    }

    /// Qubit count of the studied register.
    pub fn qubits(&self) -> usize {
        match self.experiment {
            ExperimentKind::IsingKik => self.ising().n,
            ExperimentKind::Identities => self.identities().n.unwrap_or(3),
            _ => 2,
        }
    }

    pub fn twirl_plan(&self) -> Result<TwirlPlan, ExperimentError> {
        match self.twirl.mode {
            TwirlMode::Full => Ok(TwirlPlan::full()),
            TwirlMode::Sampled => {
                TwirlPlan::sampled(self.twirl.count, self.seed).map_err(|e| invalid("twirl.count", e.to_string()))
            }
        }
    }

    /// Lindbladian of the `[noise]` section on `n` qubits.
    pub fn base_noise(&self, n: usize) -> Result<NoiseModel, ExperimentError> {
        let s = &self.noise;
        let mut dissipators = Vec::new();
        for (key, rates) in [("amplitude_damping", &s.amplitude_damping), ("dephasing", &s.dephasing)] {
            for (q, r) in rates.iter().enumerate() {
                let rate = r * s.scale;
                if rate == 0.0 {
                    continue;
                }
                let d = if key == "dephasing" { dephasing(q, rate, n) } else { amplitude_damping(q, rate, n) };
                dissipators.push(d.map_err(|e| invalid(&format!("noise.{key}[{q}]"), e.to_string()))?);
            }
        }
        let mut model = NoiseModel::new(dissipators);
        model.twirl_depolarizing = s.twirl_depolarizing;
        Ok(model)
    }

    /// Semantic checks; errors name the offending field.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let sections = [
            ("slicing", self.slicing.is_some(), ExperimentKind::Slicing),
            ("hermitianizer", self.hermitianizer.is_some(), ExperimentKind::Hermitianizer),
            ("ising", self.ising.is_some(), ExperimentKind::IsingKik),
            ("calibration", self.calibration.is_some(), ExperimentKind::Calibration),
            ("identities", self.identities.is_some(), ExperimentKind::Identities),
        ];
        for (name, present, kind) in sections {
            if present && kind != self.experiment {
                return Err(invalid(name, format!("section does not apply to experiment {}", self.experiment.name())));
            }
        }
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                return Err(invalid("output.stem", "must be a non-empty file name"));
            }
        }
        if self.twirl.mode == TwirlMode::Sampled && self.twirl.count == 0 {
            return Err(invalid("twirl.count", "sampled plans need count >= 1"));
        }
        self.validate_noise()?;
        match self.experiment {
            ExperimentKind::Slicing => self.validate_slicing(),
            ExperimentKind::Hermitianizer => self.validate_hermitianizer(),
            ExperimentKind::IsingKik => self.validate_ising(),
            ExperimentKind::Calibration => self.validate_calibration(),
            ExperimentKind::Identities => self.validate_identities(),
        }
    }

    fn validate_noise(&self) -> Result<(), ExperimentError> {
        let s = &self.noise;
        check_rates("noise.amplitude_damping", &s.amplitude_damping)?;
        check_rates("noise.dephasing", &s.dephasing)?;
        if !(s.scale.is_finite() && s.scale >= 0.0) {
            return Err(invalid("noise.scale", format!("{} must be finite and >= 0", s.scale)));
        }
        if !(0.0..=1.0).contains(&s.twirl_depolarizing) {
            return Err(invalid("noise.twirl_depolarizing", "must lie in [0, 1]"));
        }
        let n = self.qubits();
        for (key, rates) in [("amplitude_damping", &s.amplitude_damping), ("dephasing", &s.dephasing)] {
            if rates.len() > n {
                return Err(invalid(
                    &format!("noise.{key}"),
                    format!("{} rates for a {n}-qubit register", rates.len()),
                ));
            }
        }
        Ok(())
    }

    fn validate_slicing(&self) -> Result<(), ExperimentError> {
        let s = self.slicing();
        check_nonempty("slicing.m", &s.m)?;
        if let Some(i) = s.m.iter().position(|&m| m == 0) {
            return Err(invalid(&format!("slicing.m[{i}]"), "slice count must be >= 1"));
        }
        let mut sorted = s.m.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("slicing.m", "slice counts must be distinct"));
        }
        if s.m.len() < 3 {
            return Err(invalid("slicing.m", "b/m fit needs at least 3 slice counts"));
        }
        check_finite("slicing.zeta", s.zeta)?;
        check_phi("slicing.phi", s.phi)
    }

    fn validate_hermitianizer(&self) -> Result<(), ExperimentError> {
        let s = self.hermitianizer();
        check_nonempty("hermitianizer.damping", &s.damping)?;
        check_rates("hermitianizer.damping", &s.damping)?;
        check_finite("hermitianizer.zeta", s.zeta)?;
        check_phi("hermitianizer.phi", s.phi)
    }

    fn validate_ising(&self) -> Result<(), ExperimentError> {
        let s = self.ising();
        if !(2..=4).contains(&s.n) {
            return Err(invalid("ising.n", format!("{} must be between 2 and 4", s.n)));
        }
        check_finite("ising.j", s.j)?;
        check_finite("ising.g", s.g)?;
        check_nonempty("ising.epsilon", &s.epsilon)?;
        for (i, e) in s.epsilon.iter().enumerate() {
            check_finite(&format!("ising.epsilon[{i}]"), *e)?;
        }
        if s.weights.len() != s.n {
            return Err(invalid("ising.weights", format!("{} weights for {} qubits", s.weights.len(), s.n)));
        }
        check_rates("ising.weights", &s.weights)?;
        if !(s.scale.is_finite() && s.scale >= 0.0) {
            return Err(invalid("ising.scale", "must be finite and >= 0"));
        }
        if let Some(h) = &s.histogram {
            if h.repeats == 0 {
                return Err(invalid("ising.histogram.repeats", "must be >= 1"));
            }
            if h.bins == 0 {
                return Err(invalid("ising.histogram.bins", "must be >= 1"));
            }
            check_nonempty("ising.histogram.counts", &h.counts)?;
            if let Some(i) = h.counts.iter().position(|&c| c == 0) {
                return Err(invalid(&format!("ising.histogram.counts[{i}]"), "must be >= 1"));
            }
            if let Some(e) = h.epsilon {
                check_finite("ising.histogram.epsilon", e)?;
            }
        }
        Ok(())
    }

    fn validate_calibration(&self) -> Result<(), ExperimentError> {
        let s = self.calibration();
        if s.reps == 0 {
            return Err(invalid("calibration.reps", "must be >= 1"));
        }
        check_nonempty("calibration.chi", &s.chi)?;
        for (i, c) in s.chi.iter().enumerate() {
            if !(c.is_finite() && *c > 0.0) {
                return Err(invalid(&format!("calibration.chi[{i}]"), format!("{c} must be > 0")));
            }
        }
        if s.shots == Some(0) {
            return Err(invalid("calibration.shots", "must be >= 1"));
        }
        if !s.pst && s.realizations == 0 {
            return Err(invalid("calibration.realizations", "must be >= 1"));
        }
        check_finite("calibration.zeta", s.zeta)?;
        check_phi("calibration.phi", s.phi)
    }

    fn validate_identities(&self) -> Result<(), ExperimentError> {
        let s = self.identities();
        if let Some(n) = s.n {
            if !(1..=3).contains(&n) {
                return Err(invalid("identities.n", format!("{n} must be 1, 2 or 3")));
            }
        }
        if s.samples == 0 {
            return Err(invalid("identities.samples", "must be >= 1"));
        }
        Ok(())
    }
}

/// The π/2 pulse amplitude is `π/(4 cos φ)`, so `|φ|` must stay below π/2.
fn check_phi(path: &str, phi: f64) -> Result<(), ExperimentError> {
    if phi.is_finite() && phi.abs() < 1.5 {
        Ok(())
    } else {
        Err(invalid(path, format!("{phi} must satisfy |phi| < 1.5 rad")))
    }
}
