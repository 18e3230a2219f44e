//! JSON run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wavespeed_core::scenarios::{DockeryConfig, PatchPlan, Probe, SegregatedConfig, Thresholds};
use wavespeed_core::{
    CoefficientField, CompetitionKind, EstimateConfig, Grid1D, ModelSpec, Protocol, Species,
    StepperConfig,
};

use crate::sweep::SweepPlan;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Speed,
    Sweep,
    Contour,
    Validate,
    Scenario,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Speed => "speed",
            Command::Sweep => "sweep",
            Command::Contour => "contour",
            Command::Validate => "validate",
            Command::Scenario => "scenario",
        }
    }

    pub fn needs_plan(self) -> bool {
        matches!(self, Command::Sweep | Command::Contour)
    }
}

/// Model section. Every field is optional; `d` is shorthand for a constant
/// `d_v`, and `h` defaults to `k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_u: Option<CoefficientField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_v: Option<CoefficientField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<CoefficientField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoefficientField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CompetitionKind>,
}

pub const DEFAULT_K: f64 = 2.0;

impl ModelConfig {
    /// The model with every unset field filled: `d = 1`, `k = 2`, `r = 1`,
    /// `h = k`, `alpha = 1`, uniform `mu` and `a`.
    pub fn to_spec(&self) -> Result<ModelSpec, ConfigError> {
        if self.d.is_some() && self.d_v.is_some() {
            return Err(invalid("model.d and model.d_v are mutually exclusive"));
        }
        let k = self.k.unwrap_or(DEFAULT_K);
        let d_v = match (&self.d_v, self.d) {
            (Some(f), _) => f.clone(),
            (None, d) => CoefficientField::constant(d.unwrap_or(1.0)),
        };
        let spec = ModelSpec {
            d_u: self.d_u.clone().unwrap_or_default(),
            d_v,
            r: self.r.unwrap_or(1.0),
            h: self.h.unwrap_or(k),
            k,
            alpha: self.alpha.unwrap_or(1.0),
            mu: self.mu.clone().unwrap_or_default(),
            a: self.a.clone().unwrap_or_default(),
            kind: self.kind.unwrap_or_default(),
        };
        spec.validate()
            .map_err(|e| invalid(format!("model: {e}")))?;
        Ok(spec)
    }

    /// Constant `d_v`, if one was given.
    pub fn constant_d(&self) -> Option<f64> {
        self.d.or_else(|| self.d_v.as_ref().and_then(|f| f.as_constant()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub length: f64,
    pub dx: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            length: 40.0,
            dx: 0.02,
        }
    }
}

/// Time horizon and front tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub t_end: f64,
    pub window: (f64, f64),
    pub level: f64,
    pub species: Species,
    pub sample_every: f64,
    /// Times at which `simulate` dumps `x, u, v` snapshots.
    pub snapshot_times: Vec<f64>,
    pub max_length: f64,
    pub estimate: EstimateConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        let p = Protocol::default();
        RunSettings {
            t_end: p.t_end,
            window: p.window,
            level: p.level,
            species: p.species,
            sample_every: p.sample_every,
            snapshot_times: Vec::new(),
            max_length: p.max_length,
            estimate: p.estimate,
        }
    }
}

/// Extra knobs for the `scenario` command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSettings {
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_d: Option<f64>,
    pub patches: PatchPlan,
    pub dockery: DockeryConfig,
    pub segregated: SegregatedConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<Probe>>,
}

fn default_output() -> PathBuf {
    PathBuf::from("wavespeed-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SweepPlan>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_name: Option<String>,
    #[serde(default)]
    pub scenario: ScenarioSettings,
}

impl RunConfig {
    /// Config for `command` with every default filled in; sweep-like
    /// commands get the desk-scale plan.
    pub fn for_command(command: Command) -> Self {
        RunConfig {
            command,
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            stepper: StepperConfig::default(),
            run: RunSettings::default(),
            plan: command.needs_plan().then(SweepPlan::default),
            output_dir: default_output(),
            scenario_name: None,
            scenario: ScenarioSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("dx", self.grid.dx),
            ("length", self.grid.length),
            ("dt", self.stepper.dt),
            ("t_end", self.run.t_end),
            ("sample_every", self.run.sample_every),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        Grid1D::new(self.grid.length, self.grid.dx).map_err(|e| invalid(format!("grid: {e}")))?;
        let (t0, t1) = self.run.window;
        if !(t0 < t1) || t1 > self.run.t_end + 1e-9 {
            return Err(invalid("run.window must satisfy start < end <= t_end"));
        }
        if self.run.snapshot_times.iter().any(|&t| !(t >= 0.0)) {
            return Err(invalid("run.snapshot_times must be nonnegative"));
        }
        match (&self.plan, self.command.needs_plan()) {
            (None, true) => {
                return Err(invalid(format!(
                    "plan is required for command {}",
                    self.command.name()
                )))
            }
            (Some(_), false) => {
                return Err(invalid(format!(
                    "plan is only allowed for sweep and contour, not {}",
                    self.command.name()
                )))
            }
            (Some(plan), true) => plan.validate().map_err(|e| invalid(format!("plan: {e}")))?,
            (None, false) => {}
        }
        if self.command == Command::Scenario && self.scenario_name.is_none() {
            return Err(invalid("scenario_name is required for command scenario"));
        }
        self.model.to_spec()?;
        Ok(())
    }

    /// Front-tracking protocol assembled from the grid, stepper and run
    /// sections.
    pub fn protocol(&self) -> Protocol {
        Protocol {
            length: self.grid.length,
            dx: self.grid.dx,
            dt: self.stepper.dt,
            t_end: self.run.t_end,
            window: self.run.window,
            level: self.run.level,
            species: self.run.species,
            sample_every: self.run.sample_every,
            rescaled: self.stepper.rescaled,
            max_length: self.run.max_length.max(self.grid.length),
            estimate: self.run.estimate,
            ..Protocol::default()
        }
    }
}

/// Parses and validates a JSON config. Unknown keys are rejected and
/// schema errors name the offending field path.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
