//! Schema-versioned JSON configuration.

use std::path::{Path, PathBuf};

use orlicz_finsler::flow::Normalization;
use orlicz_finsler::random::Roughness;
use orlicz_finsler::weights::WeightSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_GRID: usize = 64;
pub const DEFAULT_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Norm,
    Dist,
    Energy,
    Envelope,
    Geodesic,
    Epsgeo,
    Flow,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Weights,
    Orlicz,
    Toric,
    Metrics,
    Epsgeo,
    Flow,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Weights => "weights",
            Suite::Orlicz => "orlicz",
            Suite::Toric => "toric",
            Suite::Metrics => "metrics",
            Suite::Epsgeo => "epsgeo",
            Suite::Flow => "flow",
            Suite::All => "all",
        }
    }
}

/// Input and output locations. Which ones are required depends on the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoPaths {
    #[serde(default)]
    pub function: Option<PathBuf>,
    #[serde(default)]
    pub measure: Option<PathBuf>,
    #[serde(default)]
    pub u0: Option<PathBuf>,
    #[serde(default)]
    pub u1: Option<PathBuf>,
    #[serde(default)]
    pub u: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_trials() -> usize {
    1
}

/// One experiment, as accepted by `run --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: CommandKind,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub suite: Option<Suite>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub flow: Option<FlowSettings>,
    #[serde(default)]
    pub io: IoPaths,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.grid < MIN_GRID {
            return Err(CliError::Usage(format!("grid must be at least {MIN_GRID}, got {}", self.grid)));
        }
        if self.trials < 1 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if let Some(f) = &self.flow {
            f.validate()?;
        }
        Ok(())
    }
}

/// Starting potential of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    /// The reference (Kähler–Einstein) potential.
    Reference,
    Random {
        seed: u64,
        #[serde(default)]
        roughness: Option<Roughness>,
    },
    /// A `y,dual_value` CSV on the `L = 2` polytope.
    File { path: PathBuf },
}

fn default_dt() -> f64 {
    0.05
}

fn default_t_end() -> f64 {
    20.0
}

fn default_norm() -> Normalization {
    Normalization::AmZero
}

/// Settings of a Kähler–Ricci flow run (`flow --config`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSettings {
    pub schema_version: u32,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_norm")]
    pub normalization: Normalization,
    pub initial: InitialSpec,
}

impl FlowSettings {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.grid < MIN_GRID {
            return Err(CliError::Usage(format!("grid must be at least {MIN_GRID}, got {}", self.grid)));
        }
        Ok(())
    }
}

fn check_version(v: u32) -> Result<(), CliError> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed {what}: {e}")))
}

/// A weight given inline (`{"kind":"power","p":2}`) or as a path to a JSON file.
pub fn parse_weight(arg: &str) -> Result<WeightSpec, CliError> {
    let t = arg.trim_start();
    if t.starts_with('{') {
        parse_json(t, "weight JSON")
    } else {
        parse_json(&read_text(Path::new(arg))?, "weight JSON")
    }
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig, CliError> {
    let c: ExperimentConfig = parse_json(&read_text(path)?, "experiment config")?;
    c.validate()?;
    Ok(c)
}

pub fn load_flow(path: &Path) -> Result<FlowSettings, CliError> {
    let c: FlowSettings = parse_json(&read_text(path)?, "flow config")?;
    c.validate()?;
    Ok(c)
}
