//! Experiment configuration files.
//!
//! A config is one JSON object. `kind` selects the experiment, `seed` is the
//! master seed (default 0) and `out` an optional output path; every other
//! field belongs to the experiment. Unknown fields are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use twistmod::channel::{ChannelConfig, SignalWindow};
use twistmod::estimators::{AnomalyMode, CostFunction, ThetaGrid};
use twistmod::synth::MarkovChain;
use twistmod::SystemSpec;

use crate::error::{invalid, CliError};

/// A parsed config: the experiment plus run-level settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| invalid("", "config must be a JSON object"))?;
        let seed = match obj.remove("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| invalid("seed", "must be a non-negative integer"))?,
        };
        let out = match obj.remove("out") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(invalid("out", "must be a string path")),
        };
        let experiment: Experiment = serde_json::from_value(value)?;
        experiment.validate()?;
        Ok(Self { seed, out, experiment })
    }

    /// Canonical JSON of everything that affects the results (the output
    /// path does not).
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(&self.experiment).expect("config serializes");
        v.as_object_mut()
            .expect("experiment is an object")
            .insert("seed".into(), self.seed.into());
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Autocorr(AutocorrConfig),
    Lyapunov(LyapunovConfig),
    Locus(LocusConfig),
    Spectrum(SpectrumConfig),
    Bounds(BoundsConfig),
    MlSweep(MlSweepConfig),
    ItineraryScheme(SchemeExperiment),
    Procsim(ProcsimConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Autocorr(_) => "autocorr",
            Experiment::Lyapunov(_) => "lyapunov",
            Experiment::Locus(_) => "locus",
            Experiment::Spectrum(_) => "spectrum",
            Experiment::Bounds(_) => "bounds",
            Experiment::MlSweep(_) => "ml-sweep",
            Experiment::ItineraryScheme(_) => "itinerary-scheme",
            Experiment::Procsim(_) => "procsim",
        }
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            Experiment::Autocorr(c) => {
                c.system.resolve("system")?;
                positive("trials", c.trials)?;
                if c.n <= c.k_max {
                    return Err(invalid("n", format!("must exceed k_max = {}", c.k_max)));
                }
                check_positive_f64("q", c.q)
            }
            Experiment::Lyapunov(c) => {
                for (i, s) in c.systems.iter().enumerate() {
                    s.resolve(&format!("systems[{i}]"))?;
                }
                positive("n", c.n)?;
                positive("trials", c.trials)?;
                if let Some(r) = &c.reconstruction {
                    positive("reconstruction.samples", r.samples)?;
                    positive("reconstruction.tau", r.tau)?;
                    if r.max_r < 2 {
                        return Err(invalid("reconstruction.max_r", "must be at least 2"));
                    }
                }
                Ok(())
            }
            Experiment::Locus(c) => {
                for (i, s) in c.systems.iter().enumerate() {
                    s.resolve(&format!("systems[{i}]"))?;
                }
                positive("n_max", c.n_max)?;
                check_positive_f64("q", c.q)
            }
            Experiment::Spectrum(c) => {
                positive("cases", c.cases)?;
                positive("frequencies", c.frequencies)?;
                positive("quadrature_points", c.quadrature_points)?;
                check_range("q_range", c.q_range)?;
                check_range("sigma2_range", c.sigma2_range)?;
                if c.max_r < 2 {
                    return Err(invalid("max_r", "must be at least 2"));
                }
                Ok(())
            }
            Experiment::Bounds(c) => {
                if !(c.alpha >= 0.0 && c.alpha.is_finite()) {
                    return Err(invalid("alpha", format!("{} must be finite and >= 0", c.alpha)));
                }
                check_positive_f64("gamma", c.gamma)?;
                c.cost()?;
                for (i, &pb) in c.p_bars.iter().chain(&c.p_bar).enumerate() {
                    if !(pb > 0.0 && pb < 1.0) {
                        return Err(invalid(&format!("p_bars[{i}]"), format!("{pb} must lie in (0, 1)")));
                    }
                }
                if let Some(g) = &c.alpha_grid {
                    if g.points < 2 || !(g.max > 0.0 && g.max.is_finite()) {
                        return Err(invalid("alpha_grid", "needs points >= 2 and a positive max"));
                    }
                }
                Ok(())
            }
            Experiment::MlSweep(c) => {
                c.system.resolve("system")?;
                c.channel.resolve("channel")?;
                positive("n", c.n)?;
                positive("trials", c.trials)?;
                c.theta_grid.resolve("theta_grid")?;
                cost_from_p("cost_p", c.cost_p)?;
                c.anomaly.resolve()?;
                Ok(())
            }
            Experiment::ItineraryScheme(c) => {
                c.scheme_config(0).map(|_| ())?;
                if c.mode == SchemeMode::Simulate {
                    positive("trials", c.trials)?;
                    if c.scheme_m()? > usize::MAX as f64 {
                        return Err(invalid("m", "codebook too large to simulate; use mode union-bound"));
                    }
                } else if c.union_samples < 2 {
                    return Err(invalid("union_samples", "union-bound mode needs at least 2 samples"));
                }
                c.thetas.resolve("thetas")?;
                cost_from_p("cost_p", c.cost_p)?;
                Ok(())
            }
            Experiment::Procsim(c) => {
                c.law.resolve()?;
                positive("n", c.n)?;
                if c.k_max > 3 {
                    return Err(invalid("k_max", "k-gram order must be at most 3"));
                }
                if let Bits::File { chunk, .. } = &c.bits {
                    positive("bits.chunk", *chunk)?;
                }
                Ok(())
            }
        }
    }

    /// Sets the trial count of experiments that have one.
    pub fn set_trials(&mut self, trials: usize) -> Result<(), CliError> {
        match self {
            Experiment::Autocorr(c) => c.trials = trials,
            Experiment::Lyapunov(c) => c.trials = trials,
            Experiment::MlSweep(c) => c.trials = trials,
            Experiment::ItineraryScheme(c) => c.trials = trials,
            Experiment::Procsim(c) => c.entropy_trials = trials,
            other => return Err(invalid("trials", format!("{} experiments have no trial count", other.kind()))),
        }
        Ok(())
    }

    /// Copy with one scalar parameter replaced, for sweeps.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self, CliError> {
        let mut e = self.clone();
        let as_count = |v: f64| -> Result<usize, CliError> {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e12 {
                Ok(v as usize)
            } else {
                Err(invalid(axis, format!("value {v} is not a positive integer")))
            }
        };
        let unsupported = || invalid("axis", format!("`{axis}` is not sweepable for {}", self.kind()));
        match (&mut e, axis) {
            (Experiment::MlSweep(c), "gamma") => c.channel.set_gamma(value),
            (Experiment::ItineraryScheme(c), "gamma") => c.channel.set_gamma(value),
            (Experiment::Bounds(c), "gamma") => c.gamma = value,
            (Experiment::MlSweep(c), "sigma2") => c.channel.set_sigma2(value),
            (Experiment::ItineraryScheme(c), "sigma2") => c.channel.set_sigma2(value),
            (Experiment::MlSweep(c), "n") => c.n = as_count(value)?,
            (Experiment::ItineraryScheme(c), "n") => c.n = as_count(value)?,
            (Experiment::Autocorr(c), "n") => c.n = as_count(value)?,
            (Experiment::Lyapunov(c), "n") => c.n = as_count(value)?,
            (Experiment::Locus(c), "n") => c.n_max = as_count(value)?,
            (Experiment::Procsim(c), "n") => c.n = as_count(value)?,
            (Experiment::Bounds(c), "alpha") => c.alpha = value,
            (Experiment::Bounds(c), "p_bar") => c.p_bar = Some(value),
            _ => return Err(unsupported()),
        }
        e.validate()?;
        Ok(e)
    }
}

fn positive(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_positive_f64(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be positive and finite")))
    }
}

fn check_range(field: &str, r: [f64; 2]) -> Result<(), CliError> {
    if r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{r:?} must be an increasing pair of positive numbers")))
    }
}

fn cost_from_p(field: &str, p: f64) -> Result<CostFunction, CliError> {
    CostFunction::power_law(p).map_err(|e| invalid(field, e.to_string()))
}

/// Map parameters: an explicit `p`, a named `preset`, or `r` alone for the
/// uniform map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `r` equal cells (needs `r`).
    Uniform,
    /// `(1/2, 1/4, 1/4)`.
    Dyadic,
    /// `(1/4, 3/4)`.
    Skewed,
}

impl SystemParams {
    pub fn uniform(r: usize) -> Self {
        Self {
            r: Some(r),
            ..Self::default()
        }
    }

    pub fn explicit(p: Vec<f64>) -> Self {
        Self {
            p: Some(p),
            ..Self::default()
        }
    }

    /// True for the `r`-equal-cells map, whatever lattice snapping does to
    /// the stored probabilities.
    pub fn is_uniform(&self) -> bool {
        match (&self.p, self.preset) {
            (Some(p), None) => p.iter().all(|&v| v == p[0]),
            (None, Some(Preset::Uniform)) | (None, None) => true,
            _ => false,
        }
    }

    /// Point label: the input probabilities, or `r=..` for the uniform map.
    pub fn label(&self, spec: &SystemSpec) -> String {
        match (&self.p, self.preset) {
            (Some(p), _) => crate::run::p_label(p),
            (None, Some(Preset::Uniform)) | (None, None) => format!("uniform_r={}", spec.r()),
            _ => crate::run::system_label(spec),
        }
    }

    pub fn resolve(&self, field: &str) -> Result<SystemSpec, CliError> {
        let bad = |sub: &str, e: twistmod::Error| invalid(&format!("{field}.{sub}"), e.to_string());
        match (&self.p, self.preset) {
            (Some(_), Some(_)) => Err(invalid(field, "give either p or preset, not both")),
            (Some(p), None) => {
                if let Some(r) = self.r {
                    if r != p.len() {
                        return Err(invalid(&format!("{field}.r"), format!("r = {r} but p has {} entries", p.len())));
                    }
                }
                SystemSpec::new(p).map_err(|e| bad("p", e))
            }
            (None, Some(Preset::Uniform)) | (None, None) => {
                let r = self.r.ok_or_else(|| invalid(field, "needs p, preset or r"))?;
                SystemSpec::uniform(r).map_err(|e| bad("r", e))
            }
            (None, Some(preset)) => {
                let p: &[f64] = match preset {
                    Preset::Dyadic => &[0.5, 0.25, 0.25],
                    _ => &[0.25, 0.75],
                };
                if self.r.is_some_and(|r| r != p.len()) {
                    return Err(invalid(&format!("{field}.r"), "does not match the preset"));
                }
                SystemSpec::new(p).map_err(|e| bad("preset", e))
            }
        }
    }
}

/// Signal power and one of `sigma2` or `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ChannelParams {
    pub fn resolve(&self, field: &str) -> Result<ChannelConfig, CliError> {
        let res = match (self.sigma2, self.gamma) {
            (Some(s), None) => ChannelConfig::new(self.q, s),
            (None, Some(g)) => ChannelConfig::from_gamma(self.q, g),
            _ => return Err(invalid(field, "give exactly one of sigma2 and gamma")),
        };
        res.map_err(|e| invalid(field, e.to_string()))
    }

    fn set_gamma(&mut self, g: f64) {
        self.gamma = Some(g);
        self.sigma2 = None;
    }

    fn set_sigma2(&mut self, s: f64) {
        self.sigma2 = Some(s);
        self.gamma = None;
    }
}

/// Parameter values for the supremum scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGridParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evenly_spaced: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for ThetaGridParams {
    fn default() -> Self {
        Self {
            evenly_spaced: Some(33),
            random: Some(16),
            values: None,
        }
    }
}

impl ThetaGridParams {
    pub fn resolve(&self, field: &str) -> Result<ThetaGrid, CliError> {
        let grid = match &self.values {
            Some(v) => {
                if self.evenly_spaced.is_some() || self.random.is_some() {
                    return Err(invalid(field, "give either values or evenly_spaced/random"));
                }
                if let Some(t) = v.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                    return Err(invalid(&format!("{field}.values"), format!("{t} is outside [0, 1]")));
                }
                ThetaGrid::Explicit(v.clone())
            }
            None => ThetaGrid::Mixed {
                evenly_spaced: self.evenly_spaced.unwrap_or(0),
                random: self.random.unwrap_or(0),
            },
        };
        if grid.values(0).is_empty() {
            return Err(invalid(field, "theta grid is empty"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnomalyParams {
    #[default]
    Cell,
    Threshold(f64),
}

impl AnomalyParams {
    pub fn resolve(&self) -> Result<AnomalyMode, CliError> {
        match *self {
            AnomalyParams::Cell => Ok(AnomalyMode::CellError),
            AnomalyParams::Threshold(e) if e > 0.0 && e.is_finite() => Ok(AnomalyMode::Threshold(e)),
            AnomalyParams::Threshold(e) => Err(invalid("anomaly.threshold", format!("{e} must be positive"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowParam {
    #[default]
    WithInitial,
    AfterInitial,
}

impl From<WindowParam> for SignalWindow {
    fn from(w: WindowParam) -> Self {
        match w {
            WindowParam::WithInitial => SignalWindow::WithInitial,
            WindowParam::AfterInitial => SignalWindow::AfterInitial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalParam {
    #[default]
    State,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrConfig {
    pub system: SystemParams,
    #[serde(default)]
    pub signal: SignalParam,
    #[serde(default = "one")]
    pub q: f64,
    pub n: usize,
    pub trials: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub systems: Vec<SystemParams>,
    pub n: usize,
    #[serde(default = "one_usize")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionParams>,
}

fn one_usize() -> usize {
    1
}

/// Random `(spec, s0)` pairs for the reconstruction bracket check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionParams {
    pub samples: usize,
    pub tau: usize,
    #[serde(default = "default_max_r")]
    pub max_r: usize,
}

fn default_max_r() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocusConfig {
    pub systems: Vec<SystemParams>,
    #[serde(default = "one")]
    pub q: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub cases: usize,
    #[serde(default = "default_frequencies")]
    pub frequencies: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature_points: usize,
    #[serde(default = "default_range")]
    pub q_range: [f64; 2],
    #[serde(default = "default_range")]
    pub sigma2_range: [f64; 2],
    #[serde(default = "default_max_r")]
    pub max_r: usize,
}

fn default_frequencies() -> usize {
    1000
}

fn default_quadrature() -> usize {
    8192
}

fn default_range() -> [f64; 2] {
    [0.01, 100.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default = "two")]
    pub cost_p: f64,
    /// `p_bar = sum p^2` of the map, for `C1` at `(alpha, gamma)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_bar: Option<f64>,
    /// Further `p_bar` values for a `C1` scan at `gamma`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_bars: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<AlphaGrid>,
}

impl BoundsConfig {
    pub fn cost(&self) -> Result<CostFunction, CliError> {
        cost_from_p("cost_p", self.cost_p)
    }
}

fn two() -> f64 {
    2.0
}

/// `points` evenly spaced values on `[0, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaGrid {
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlSweepConfig {
    pub system: SystemParams,
    pub channel: ChannelParams,
    pub n: usize,
    /// Trials per grid point.
    pub trials: usize,
    #[serde(default)]
    pub theta_grid: ThetaGridParams,
    #[serde(default = "two")]
    pub cost_p: f64,
    #[serde(default)]
    pub anomaly: AnomalyParams,
    #[serde(default)]
    pub window: WindowParam,
    #[serde(default = "yes")]
    pub per_theta: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeMode {
    /// Build the codebook and simulate transmissions.
    #[default]
    Simulate,
    /// Only the union-Chernoff bound; works for codebooks too large to store.
    UnionBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeExperiment {
    pub n: usize,
    /// Codebook size. Alternatives: `rate` (`M = ceil(e^{nR})`) or
    /// `epsilon_fraction` (`M = ceil(e^{n C (1 - eps)})`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_fraction: Option<f64>,
    #[serde(default = "default_r_cw")]
    pub r_cw: usize,
    /// Constellation spacing; defaults to `0.1 sqrt(Q)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub channel: ChannelParams,
    #[serde(default)]
    pub mode: SchemeMode,
    /// Trials per parameter value (simulate mode).
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub thetas: ThetaGridParams,
    #[serde(default)]
    pub union_samples: usize,
    #[serde(default = "two")]
    pub cost_p: f64,
    /// Codebook file to load (if present and matching) or create.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook: Option<PathBuf>,
}

fn default_r_cw() -> usize {
    101
}

impl SchemeExperiment {
    /// Codebook size as a real number (it may exceed any integer type).
    pub fn scheme_m(&self) -> Result<f64, CliError> {
        let n = self.n as f64;
        let m = match (self.m, self.rate, self.epsilon_fraction) {
            (Some(m), None, None) => m as f64,
            (None, Some(r), None) => {
                check_positive_f64("rate", r)?;
                (n * r).exp().ceil()
            }
            (None, None, Some(eps)) => {
                if !(0.0..1.0).contains(&eps) {
                    return Err(invalid("epsilon_fraction", format!("{eps} must lie in [0, 1)")));
                }
                let c = self.channel.resolve("channel")?.capacity();
                (n * c * (1.0 - eps)).exp().ceil()
            }
            _ => return Err(invalid("m", "give exactly one of m, rate and epsilon_fraction")),
        };
        if !(m >= 1.0 && m.is_finite()) {
            return Err(invalid("m", format!("codebook size {m} is not usable")));
        }
        Ok(m)
    }

    /// Scheme parameters; `m` is saturated for union-bound-only runs.
    pub fn scheme_config(&self, seed: u64) -> Result<twistmod::itinerary::SchemeConfig, CliError> {
        let ch = self.channel.resolve("channel")?;
        positive("n", self.n)?;
        let m = self.scheme_m()?;
        let cfg = twistmod::itinerary::SchemeConfig {
            n: self.n,
            m: if m >= usize::MAX as f64 { usize::MAX } else { m as usize },
            delta: self.delta.unwrap_or(0.1 * ch.q.sqrt()),
            r_cw: self.r_cw,
            q: ch.q,
            sigma2: ch.sigma2,
            seed,
        };
        cfg.validate().map_err(|e| invalid("scheme", e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawParams {
    Memoryless { p: Vec<f64> },
    /// First-order chain started from its stationary law.
    Markov { rows: Vec<Vec<f64>> },
}

/// A resolved law, kept concrete so the runner can report exact values.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Memoryless(twistmod::synth::Memoryless),
    Markov(MarkovChain),
}

impl LawParams {
    pub fn resolve(&self) -> Result<Law, CliError> {
        match self {
            LawParams::Memoryless { p } => SystemSpec::new(p)
                .map(|s| Law::Memoryless(twistmod::synth::Memoryless(s)))
                .map_err(|e| invalid("law.p", e.to_string())),
            LawParams::Markov { rows } => MarkovChain::stationary_start(rows)
                .map(Law::Markov)
                .map_err(|e| invalid("law.rows", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Bits {
    /// Generator seeded from the master seed.
    #[default]
    Seeded,
    /// Raw bytes, most significant bit first.
    File {
        path: PathBuf,
        #[serde(default = "default_chunk")]
        chunk: usize,
    },
}

fn default_chunk() -> usize {
    1 << 16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolFormat {
    #[default]
    Lines,
    Bytes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcsimConfig {
    pub law: LawParams,
    #[serde(default)]
    pub bits: Bits,
    pub n: usize,
    /// Chi-square tests on k-grams for `k = 1..=k_max`.
    #[serde(default = "default_k")]
    pub k_max: usize,
    /// Monte Carlo trials for the entropy-rate estimate (0 skips it).
    #[serde(default)]
    pub entropy_trials: usize,
    /// Initial states checked for the memoryless reduction (0 skips it).
    #[serde(default)]
    pub reduction_checks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols_out: Option<PathBuf>,
    #[serde(default)]
    pub symbols_format: SymbolFormat,
}

fn default_k() -> usize {
    3
}
