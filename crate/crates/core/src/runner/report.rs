use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::spectral::Method;

/// Wall-clock seconds spent in each pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTimes {
    pub kernel: f64,
    pub degrees: f64,
    pub decomposition: f64,
    pub embedding: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.kernel + self.degrees + self.decomposition + self.embedding
    }
}

/// Deterministic time divided by Nystrom time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Speedup {
    /// Eigendecomposition stage only; kernel cost is shared by all methods.
    pub decomposition: f64,
    pub pipeline: f64,
}

/// Results of one decomposition method on the experiment's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRun {
    pub method: Method,
    pub wall_time_seconds: StageTimes,
    pub total_seconds: f64,
    /// Descending; length `min(rank (+1 with drop_trivial), effective_rank)`.
    pub eigenvalues: Vec<f64>,
    pub effective_rank: usize,
    pub embedding_dims: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedup: Option<Speedup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_inertia: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub observations: usize,
    pub variables: usize,
    /// Wall-clock seconds spent loading or generating the data.
    pub data_seconds: f64,
    pub runs: Vec<MethodRun>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("report serialization: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid report: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
