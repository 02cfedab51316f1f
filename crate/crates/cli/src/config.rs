//! Config resolution: command-line flags override JSON config-file values;
//! defaults fill the rest. Every override is recorded in the run manifest.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_EPSILON: f64 = 1.0 / 16.0;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "probreach_out";

/// Optional values accepted from a JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub subcommand: Option<String>,
    pub name: Option<String>,
    pub preset: Option<String>,
    pub system: Option<PathBuf>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trajectories: Option<usize>,
    pub samples: Option<usize>,
    pub scaling_samples: Option<usize>,
    pub expectation_samples: Option<usize>,
    pub lipschitz_pairs: Option<usize>,
    pub backend: Option<String>,
    pub full_scale: Option<bool>,
    pub check: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The fully resolved run configuration, echoed into the manifest.
///
/// `delta`/`epsilon` stay unset unless given explicitly: presets carry their
/// own published values, and only custom systems fall back to the documented
/// defaults (δ = 10⁻³, ε = 1/16).
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub experiment: Option<String>,
    pub preset: Option<String>,
    pub system: Option<String>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub trajectories: Option<usize>,
    pub samples: usize,
    pub scaling_samples: usize,
    pub expectation_samples: usize,
    pub lipschitz_pairs: usize,
    pub backend: Option<String>,
    pub full_scale: bool,
    pub check: bool,
    /// Flags that overrode a conflicting config-file value.
    pub overrides: Vec<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(CliError::Config(format!(
                    "delta must be in (0,1), got {delta}"
                )));
            }
        }
        if let Some(epsilon) = self.epsilon {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(CliError::Config(format!(
                    "epsilon must be in (0,1), got {epsilon}"
                )));
            }
        }
        match self.subcommand.as_str() {
            "experiment" => {
                if self.experiment.is_none() {
                    return Err(CliError::Config("experiment name required".into()));
                }
            }
            "amgf-check" => {}
            _ => {
                if self.preset.is_none() && self.system.is_none() {
                    return Err(CliError::Config(
                        "missing system spec: pass --preset or --system".into(),
                    ));
                }
                if self.preset.is_some() && self.system.is_some() {
                    return Err(CliError::Config(
                        "--preset and --system are mutually exclusive".into(),
                    ));
                }
            }
        }
        if let Some(b) = &self.backend {
            if b != "lipschitz" && b != "interval" {
                return Err(CliError::Config(format!(
                    "backend must be lipschitz or interval, got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Pick the flag value when both flag and file provide one, recording the
/// override.
pub fn pick<T>(
    flag: Option<T>,
    file: Option<T>,
    name: &str,
    overrides: &mut Vec<String>,
) -> Option<T> {
    match (flag, file) {
        (Some(f), Some(_)) => {
            overrides.push(name.to_string());
            Some(f)
        }
        (Some(f), None) => Some(f),
        (None, v) => v,
    }
}
