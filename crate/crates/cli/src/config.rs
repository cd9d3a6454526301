//! Run configuration: a TOML document with the tables `params`, `pressure`,
//! `initial`, `grid`, `time`, `run` and an optional `sweep`.
//!
//! ```toml
//! [params]
//! n = 2.0
//! alpha = 2.0
//! kappa = 1.0
//! beta = 0.5
//! R = 1.0
//! eps = 1e-3        # default 1e-3 R
//! eps0 = 1e-2       # default 1e-2 R
//!
//! [pressure]
//! kind = "constant" # or "polynomial", "tabulated"
//! value = 1.0
//!
//! [initial]
//! kind = "compatible_quartic"  # or "zero", "polynomial", "tabulated", "steady"
//!
//! [grid]
//! cells = 512
//!
//! [time]
//! t_end = 5.0
//! output_times = [1.0, 5.0]
//!
//! [sweep]
//! "params.eps" = [1e-2, 1e-3, 1e-4]
//! ```
//!
//! Sweep keys are dotted paths to any scalar of the document. Members are
//! the cartesian product of the value lists, with keys taken in sorted
//! order and the last key varying fastest.

use std::fmt;

use poiseuille_core::pressure::{validate_profile, PressureProfile};
use poiseuille_core::rheology::ModelParams;
use poiseuille_core::unsteady::{DtPolicy, InitialCondition};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("could not read {path}: {message}")]
    Io { path: String, message: String },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{path}`")]
    UnknownKey { path: String },
    #[error("type mismatch at `{path}`: {message}")]
    TypeMismatch { path: String, message: String },
    #[error("constraint violated at `{path}`: {message}")]
    ConstraintViolation { path: String, message: String },
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { path } | ConfigError::TypeMismatch { path, .. } | ConfigError::ConstraintViolation { path, .. } => {
                Some(path)
            }
            _ => None,
        }
    }
}

/// All problems found in one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigError> for ConfigErrors {
    fn from(e: ConfigError) -> Self {
        ConfigErrors(vec![e])
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    params: RawParams,
    pressure: PressureSpec,
    #[serde(default)]
    initial: InitialSpec,
    #[serde(default)]
    grid: GridSpec,
    #[serde(default)]
    time: TimeSpec,
    #[serde(default)]
    run: RunFlags,
    #[serde(default)]
    sweep: toml::Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    n: f64,
    alpha: f64,
    kappa: f64,
    beta: f64,
    #[serde(rename = "R")]
    radius: f64,
    eps: Option<f64>,
    eps0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureSpec {
    Constant { value: f64 },
    Polynomial { coefficients: Vec<f64>, b0: f64 },
    Tabulated { y: Vec<f64>, b: Vec<f64>, b0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `-b(R)(R²-Y²)²/(8R²)`.
    #[default]
    CompatibleQuartic,
    Zero,
    Polynomial { coefficients: Vec<f64> },
    Tabulated { y: Vec<f64>, psi: Vec<f64> },
    /// Start from the steady equilibrium (no a-priori monitoring).
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_cells() -> usize {
    512
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { cells: default_cells() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DtKind {
    #[default]
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub dt_policy: DtKind,
    /// Fixed step, or the first adaptive step.
    pub dt: Option<f64>,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_t0")]
    pub t0_cap: f64,
}

fn default_t_end() -> f64 {
    1.0
}
fn default_dt_max() -> f64 {
    0.05
}
fn default_t0() -> f64 {
    10.0
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t_end: default_t_end(), output_times: Vec::new(), dt_policy: DtKind::Adaptive, dt: None, dt_max: default_dt_max(), t0_cap: default_t0() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepCommand {
    Steady,
    #[default]
    Unsteady,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunFlags {
    #[serde(default)]
    pub override_backward: bool,
    #[serde(default)]
    pub override_hypotheses: bool,
    /// Worker threads for sweeps; 1 runs members sequentially.
    pub workers: Option<usize>,
    #[serde(default)]
    pub sweep_command: SweepCommand,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub pressure_spec: PressureSpec,
    pub profile: PressureProfile,
    pub initial: InitialSpec,
    pub cells: usize,
    pub time: TimeSpec,
    pub run: RunFlags,
    /// Sweep axes in expansion order.
    pub sweep: Vec<(String, Vec<toml::Value>)>,
    /// The document with the sweep table removed.
    pub document: toml::Table,
}

impl RunConfig {
    pub fn dt_policy(&self) -> DtPolicy {
        match self.time.dt_policy {
            DtKind::Fixed => DtPolicy::Fixed { dt: self.time.dt.unwrap_or(1e-3) },
            DtKind::Adaptive => DtPolicy::Adaptive { initial: self.time.dt, max: self.time.dt_max },
        }
    }

    /// `None` for a steady start.
    pub fn initial_condition(&self) -> Option<InitialCondition> {
        match &self.initial {
            InitialSpec::CompatibleQuartic => Some(InitialCondition::compatible_quartic(self.profile.value(self.params.radius), self.params.radius)),
            InitialSpec::Zero => Some(InitialCondition::zero()),
            InitialSpec::Polynomial { coefficients } => Some(InitialCondition::polynomial(coefficients.clone())),
            InitialSpec::Tabulated { y, psi } => InitialCondition::tabulated(y, psi).ok(),
            InitialSpec::Steady => None,
        }
    }

    /// Cartesian expansion of the sweep axes. Without axes the result is
    /// the configuration itself.
    pub fn expand_sweep(&self) -> Result<Vec<SweepMember>, ConfigErrors> {
        let mut members = vec![(self.document.clone(), Vec::new())];
        for (key, values) in &self.sweep {
            let mut next = Vec::with_capacity(members.len() * values.len());
            for (doc, assignment) in &members {
                for v in values {
                    let mut doc = doc.clone();
                    set_path(&mut doc, key, v.clone())?;
                    let mut a: Vec<(String, toml::Value)> = assignment.clone();
                    a.push((key.clone(), v.clone()));
                    next.push((doc, a));
                }
            }
            members = next;
        }
        members
            .into_iter()
            .map(|(doc, assignment)| Ok(SweepMember { config: from_table(doc)?, assignment }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub config: RunConfig,
    pub assignment: Vec<(String, toml::Value)>,
}

fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let bad = || ConfigError::ConstraintViolation { path: format!("sweep.{key}"), message: "sweep key must name a scalar inside a table".into() };
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(bad)?;
    let mut table = doc;
    for p in parts {
        table = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())).as_table_mut().ok_or_else(bad)?;
    }
    if matches!(table.get(leaf), Some(toml::Value::Table(_) | toml::Value::Array(_))) {
        return Err(bad());
    }
    table.insert(leaf.to_string(), value);
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    from_table(table)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

fn classify_serde(path: String, message: String) -> ConfigError {
    if message.starts_with("unknown field") || message.starts_with("unknown variant") {
        let field = message.split('`').nth(1).unwrap_or("");
        let path = if path == "." || path.is_empty() { field.to_string() } else { path };
        ConfigError::UnknownKey { path }
    } else if message.starts_with("invalid type") || message.starts_with("invalid value") {
        ConfigError::TypeMismatch { path, message }
    } else if message.starts_with("missing field") {
        let field = message.split('`').nth(1).unwrap_or("");
        let path = if path == "." || path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
        ConfigError::ConstraintViolation { path, message: "required key is missing".into() }
    } else {
        ConfigError::TypeMismatch { path, message }
    }
}

fn from_table(mut table: toml::Table) -> Result<RunConfig, ConfigErrors> {
    let sweep_raw = table.get("sweep").cloned();
    let raw: RawConfig = serde_path_to_error::deserialize(toml::Value::Table(table.clone()))
        .map_err(|e| classify_serde(e.path().to_string(), e.inner().to_string()))?;
    table.remove("sweep");
    let _ = sweep_raw;

    let mut errors = Vec::new();
    let mut violation = |path: &str, message: String| errors.push(ConfigError::ConstraintViolation { path: path.to_string(), message });

    if let Some(v) = raw.schema_version {
        if v != SCHEMA_VERSION {
            violation("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"));
        }
    }

    let rp = &raw.params;
    let radius_ok = rp.radius > 0.0 && rp.radius.is_finite();
    let params = ModelParams {
        n: rp.n,
        alpha: rp.alpha,
        kappa: rp.kappa,
        beta: rp.beta,
        radius: rp.radius,
        eps: rp.eps.unwrap_or(1e-3 * rp.radius),
        eps0: rp.eps0.unwrap_or(1e-2 * rp.radius),
    };
    if let Err(e) = params.validate() {
        violation(&format!("params.{}", e.name), format!("{} = {} violates {}", e.name, e.value, e.constraint));
    }

    let profile = match &raw.pressure {
        PressureSpec::Constant { value } => PressureProfile::constant(*value),
        PressureSpec::Polynomial { coefficients, b0 } => PressureProfile::polynomial(coefficients.clone(), *b0),
        PressureSpec::Tabulated { y, b, b0 } => PressureProfile::tabulated(y, b, *b0),
    };
    let profile = match profile {
        Ok(p) => {
            if radius_ok {
                if let Err(e) = validate_profile(&p, rp.radius) {
                    violation("pressure", e.to_string());
                }
            }
            Some(p)
        }
        Err(e) => {
            violation("pressure", e.to_string());
            None
        }
    };

    if let InitialSpec::Tabulated { y, psi } = &raw.initial {
        if let Err(e) = InitialCondition::tabulated(y, psi) {
            violation("initial", e.to_string());
        }
    }
    if raw.grid.cells < 2 {
        violation("grid.cells", format!("need at least 2 cells, got {}", raw.grid.cells));
    }
    let t = &raw.time;
    if !(t.t_end > 0.0 && t.t_end.is_finite()) {
        violation("time.t_end", format!("must be positive, got {}", t.t_end));
    }
    if t.output_times.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        violation("time.output_times", "times must be finite and nonnegative".into());
    }
    if let Some(dt) = t.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            violation("time.dt", format!("must be positive, got {dt}"));
        }
    }
    if !(t.dt_max > 0.0) {
        violation("time.dt_max", format!("must be positive, got {}", t.dt_max));
    }
    if !(t.t0_cap > 0.0 && t.t0_cap.is_finite()) {
        violation("time.t0_cap", format!("must be positive, got {}", t.t0_cap));
    }
    if raw.run.workers == Some(0) {
        violation("run.workers", "need at least one worker".into());
    }

    let mut sweep: Vec<(String, Vec<toml::Value>)> = Vec::new();
    for (key, values) in &raw.sweep {
        match values {
            toml::Value::Array(list) if !list.is_empty() => {
                if list.iter().any(|v| matches!(v, toml::Value::Array(_) | toml::Value::Table(_))) {
                    violation(&format!("sweep.{key}"), "sweep values must be scalars".into());
                }
                sweep.push((key.clone(), list.clone()));
            }
            _ => violation(&format!("sweep.{key}"), "expected a nonempty list of values".into()),
        }
    }
    sweep.sort_by(|a, b| a.0.cmp(&b.0));

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        params,
        pressure_spec: raw.pressure,
        profile: profile.expect("checked above"),
        initial: raw.initial,
        cells: raw.grid.cells,
        time: raw.time,
        run: raw.run,
        sweep,
        document: table,
    })
}
