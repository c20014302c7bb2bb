//! Experiment configuration: the TOML document schema, defaults, preset
//! overlay and validation.
//!
//! Every key is documented in `docs/config.md`. Unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use onoff_core::{EfficiencyGrid, StateSpec, UpdateNormalization};
use serde::{Deserialize, Serialize};

use crate::error::{validation, HarnessError, Result};
use crate::presets;

pub const DEFAULT_TRUNCATION: usize = 20;
pub const DEFAULT_ETA_MIN: f64 = 0.02;
pub const DEFAULT_ETA_MAX: f64 = 0.99;
pub const DEFAULT_EFFICIENCY_COUNT: usize = 50;
pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BUDGET_SECONDS: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Coherent {
        mean_photons: f64,
    },
    Squeezed {
        mean_photons: f64,
        squeeze_fraction: f64,
        #[serde(default)]
        relative_phase: f64,
    },
    FockSuperposition {
        terms: Vec<FockTerm>,
    },
}

/// One `|n>` component, given either by its amplitude or by its weight
/// (squared amplitude).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockTerm {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl FockTerm {
    pub fn amplitude(n: usize, amplitude: f64) -> Self {
        Self {
            n,
            amplitude: Some(amplitude),
            weight: None,
        }
    }
}

impl StateConfig {
    pub fn to_spec(&self) -> Result<StateSpec<f64>> {
        let spec = match self {
            StateConfig::Coherent { mean_photons } => StateSpec::Coherent {
                mean_photons: *mean_photons,
            },
            StateConfig::Squeezed {
                mean_photons,
                squeeze_fraction,
                relative_phase,
            } => StateSpec::Squeezed {
                mean_photons: *mean_photons,
                squeeze_fraction: *squeeze_fraction,
                relative_phase: *relative_phase,
            },
            StateConfig::FockSuperposition { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    let amp = match (t.amplitude, t.weight) {
                        (Some(a), None) => a,
                        (None, Some(w)) if w >= 0.0 => w.sqrt(),
                        (None, Some(w)) => {
                            return Err(validation(format!(
                                "state.terms: weight of |{}> must be >= 0, got {w}",
                                t.n
                            )))
                        }
                        _ => {
                            return Err(validation(format!(
                                "state.terms: |{}> needs exactly one of amplitude or weight",
                                t.n
                            )))
                        }
                    };
                    out.push((t.n, amp));
                }
                StateSpec::FockSuperposition { terms: out }
            }
        };
        spec.validate()
            .map_err(|e| validation(format!("state: {e}")))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    pub count: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            eta_min: DEFAULT_ETA_MIN,
            eta_max: DEFAULT_ETA_MAX,
            count: DEFAULT_EFFICIENCY_COUNT,
        }
    }
}

/// Whether `shots` counts measurements per efficiency or over the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotsMode {
    #[default]
    PerEta,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Em,
    Inversion,
    LeastSquares,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Em => "em",
            Method::Inversion => "inversion",
            Method::LeastSquares => "least_squares",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Column,
    RowTruncated,
    RowAnalytic,
}

impl From<Normalization> for UpdateNormalization {
    fn from(n: Normalization) -> Self {
        match n {
            Normalization::Column => UpdateNormalization::Column,
            Normalization::RowTruncated => UpdateNormalization::RowTruncated,
            Normalization::RowAnalytic => UpdateNormalization::RowAnalytic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSettings {
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub renormalize: bool,
    /// `None` means `max(1, iterations / 1000)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Tabular,
    Structured,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tabular" => Ok(OutputFormat::Tabular),
            "structured" => Ok(OutputFormat::Structured),
            other => Err(format!("unknown format {other:?} (tabular | structured)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub truncation: usize,
    pub shots: u64,
    pub shots_mode: ShotsMode,
    pub iterations: u64,
    /// Efficiency fluctuation parameter `a`; the half-width of the uniform
    /// window around each `eta` is `(eta_max - eta_min) / (a N)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluctuation: Option<f64>,
    pub methods: Vec<Method>,
    pub budget_seconds: f64,
    pub state: StateConfig,
    pub grid: GridConfig,
    pub em: EmSettings,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Defaults for everything but the state: `N = 50`, `eta` in
    /// `[0.02, 0.99]`, `nbar = 20`, `1e5` shots per efficiency and as many
    /// iterations.
    pub fn with_state(state: StateConfig) -> Self {
        Self {
            name: None,
            seed: DEFAULT_SEED,
            truncation: DEFAULT_TRUNCATION,
            shots: DEFAULT_SHOTS,
            shots_mode: ShotsMode::PerEta,
            iterations: DEFAULT_SHOTS,
            fluctuation: None,
            methods: vec![Method::Em],
            budget_seconds: DEFAULT_BUDGET_SECONDS,
            state,
            grid: GridConfig::default(),
            em: EmSettings::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(validation("truncation must be >= 1"));
        }
        let g = &self.grid;
        if !(g.eta_min > 0.0) {
            return Err(validation(format!(
                "grid.eta_min must be > 0, got {}",
                g.eta_min
            )));
        }
        if !(g.eta_max < 1.0) {
            return Err(validation(format!(
                "grid.eta_max must be < 1, got {}",
                g.eta_max
            )));
        }
        if !(g.eta_min < g.eta_max) {
            return Err(validation(format!(
                "grid.eta_min ({}) must be < grid.eta_max ({})",
                g.eta_min, g.eta_max
            )));
        }
        if g.count < 2 {
            return Err(validation(format!(
                "grid.count must be >= 2, got {}",
                g.count
            )));
        }
        if self.shots == 0 {
            return Err(validation("shots must be >= 1"));
        }
        if self.shots_mode == ShotsMode::Total && self.shots < g.count as u64 {
            return Err(validation(format!(
                "shots ({}) must be >= grid.count ({}) when shots_mode = \"total\"",
                self.shots, g.count
            )));
        }
        if self.iterations == 0 {
            return Err(validation("iterations must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(validation("methods must not be empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(validation(format!("methods lists {:?} twice", m.name())));
            }
            if *m != Method::Em && g.count < self.truncation {
                return Err(validation(format!(
                    "method {:?} needs grid.count ({}) >= truncation ({})",
                    m.name(),
                    g.count,
                    self.truncation
                )));
            }
        }
        if let Some(stride) = self.em.trace_stride {
            if stride == 0 {
                return Err(validation("em.trace_stride must be >= 1"));
            }
        }
        if !(self.budget_seconds > 0.0) {
            return Err(validation(format!(
                "budget_seconds must be > 0, got {}",
                self.budget_seconds
            )));
        }
        if let StateConfig::FockSuperposition { terms } = &self.state {
            if let Some(t) = terms.iter().find(|t| t.n >= self.truncation) {
                return Err(validation(format!(
                    "state.terms: |{}> lies outside truncation {}",
                    t.n, self.truncation
                )));
            }
        }
        self.state.to_spec()?;
        let grid = self.efficiency_grid_unchecked()?;
        if let Some(a) = self.fluctuation {
            if !(a > 0.0) || !a.is_finite() {
                return Err(validation(format!("fluctuation must be > 0, got {a}")));
            }
            grid.with_fluctuation(a)
                .map_err(|e| validation(format!("fluctuation: {e}")))?;
        }
        Ok(())
    }

    fn efficiency_grid_unchecked(&self) -> Result<EfficiencyGrid<f64>> {
        EfficiencyGrid::uniform(self.grid.eta_min, self.grid.eta_max, self.grid.count)
            .map_err(|e| validation(format!("grid: {e}")))
    }

    /// The efficiency grid, including the fluctuation window if configured.
    pub fn efficiency_grid(&self) -> Result<EfficiencyGrid<f64>> {
        let grid = self.efficiency_grid_unchecked()?;
        match self.fluctuation {
            Some(a) => grid
                .with_fluctuation(a)
                .map_err(|e| validation(format!("fluctuation: {e}"))),
            None => Ok(grid),
        }
    }

    /// Shots at each efficiency. In `total` mode the remainder goes to the
    /// lowest efficiencies.
    pub fn shots_per_efficiency(&self) -> Vec<u64> {
        let n = self.grid.count as u64;
        match self.shots_mode {
            ShotsMode::PerEta => vec![self.shots; self.grid.count],
            ShotsMode::Total => (0..n)
                .map(|i| self.shots / n + u64::from(i < self.shots % n))
                .collect(),
        }
    }

    pub fn has_method(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn trace_stride(&self) -> usize {
        self.em
            .trace_stride
            .unwrap_or_else(|| onoff_core::em::default_trace_stride(self.iterations as usize))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config always serializes")
    }
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Number of efficiencies `N`.
    #[serde(alias = "N", alias = "count")]
    N,
    Zeta,
    Shots,
    #[serde(alias = "etaMax")]
    EtaMax,
    Iterations,
    Seed,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::Zeta => "zeta",
            SweepAxis::Shots => "shots",
            SweepAxis::EtaMax => "eta_max",
            SweepAxis::Iterations => "iterations",
            SweepAxis::Seed => "seed",
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(
            self,
            SweepAxis::N | SweepAxis::Shots | SweepAxis::Iterations | SweepAxis::Seed
        )
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "n" | "N" | "count" => SweepAxis::N,
            "zeta" => SweepAxis::Zeta,
            "shots" => SweepAxis::Shots,
            "eta_max" | "etaMax" => SweepAxis::EtaMax,
            "iterations" => SweepAxis::Iterations,
            "seed" => SweepAxis::Seed,
            other => {
                return Err(format!(
                    "unknown sweep axis {other:?} (n | zeta | shots | eta_max | iterations | seed)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A parsed document: the experiment plus an optional sweep section.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub experiment: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    preset: Option<String>,
    name: Option<String>,
    seed: Option<u64>,
    truncation: Option<usize>,
    shots: Option<u64>,
    shots_mode: Option<ShotsMode>,
    iterations: Option<u64>,
    fluctuation: Option<f64>,
    methods: Option<Vec<Method>>,
    budget_seconds: Option<f64>,
    state: Option<StateConfig>,
    grid: Option<RawGrid>,
    em: Option<RawEm>,
    output: Option<RawOutput>,
    sweep: Option<SweepSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    eta_min: Option<f64>,
    eta_max: Option<f64>,
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEm {
    normalization: Option<Normalization>,
    renormalize: Option<bool>,
    trace_stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    format: Option<OutputFormat>,
}

/// Parses, applies defaults (or a preset) and validates a TOML document.
pub fn load_document(text: &str) -> Result<ConfigDocument> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;

    let (mut cfg, mut sweep) = match &raw.preset {
        Some(name) => {
            let p = presets::preset(name).ok_or_else(|| {
                validation(format!(
                    "unknown preset {name:?} (known: {})",
                    presets::names().join(", ")
                ))
            })?;
            (p.config, p.sweep)
        }
        None => {
            let state = raw
                .state
                .clone()
                .ok_or_else(|| validation("missing [state] section (or select a preset)"))?;
            let mut cfg = ExperimentConfig::with_state(state);
            cfg.iterations = raw.shots.unwrap_or(DEFAULT_SHOTS);
            (cfg, None)
        }
    };

    if let Some(v) = raw.name {
        cfg.name = Some(v);
    }
    if let Some(v) = raw.seed {
        cfg.seed = v;
    }
    if let Some(v) = raw.truncation {
        cfg.truncation = v;
    }
    if let Some(v) = raw.shots {
        cfg.shots = v;
    }
    if let Some(v) = raw.shots_mode {
        cfg.shots_mode = v;
    }
    if let Some(v) = raw.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = raw.fluctuation {
        cfg.fluctuation = Some(v);
    }
    if let Some(v) = raw.methods {
        cfg.methods = v;
    }
    if let Some(v) = raw.budget_seconds {
        cfg.budget_seconds = v;
    }
    if let Some(v) = raw.state {
        cfg.state = v;
    }
    if let Some(g) = raw.grid {
        cfg.grid.eta_min = g.eta_min.unwrap_or(cfg.grid.eta_min);
        cfg.grid.eta_max = g.eta_max.unwrap_or(cfg.grid.eta_max);
        cfg.grid.count = g.count.unwrap_or(cfg.grid.count);
    }
    if let Some(em) = raw.em {
        cfg.em.normalization = em.normalization.unwrap_or(cfg.em.normalization);
        cfg.em.renormalize = em.renormalize.unwrap_or(cfg.em.renormalize);
        if em.trace_stride.is_some() {
            cfg.em.trace_stride = em.trace_stride;
        }
    }
    if let Some(out) = raw.output {
        if out.dir.is_some() {
            cfg.output.dir = out.dir;
        }
        cfg.output.format = out.format.unwrap_or(cfg.output.format);
    }
    if raw.sweep.is_some() {
        sweep = raw.sweep;
    }

    cfg.validate()?;
    if let Some(s) = &sweep {
        crate::runner::sweep_members(&cfg, s.axis, &s.values)?;
    }
    Ok(ConfigDocument {
        experiment: cfg,
        sweep,
    })
}

/// [`load_document`] without the sweep section.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    load_document(text).map(|d| d.experiment)
}
