use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{LorenzParams, DEFAULT_NOISE_STD};
use crate::embedding::Weighting;
use crate::error::{Error, Result};
use crate::kernel::DEFAULT_BLOCK_SIZE;
use crate::nystrom::{
    SketchConfig, SketchStrategy, DEFAULT_OVERSAMPLING, DEFAULT_PINV_TOLERANCE, DEFAULT_POWER_ITERATIONS,
};
use crate::spectral::{EigenSolver, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Helix,
    SwissRoll,
    Lorenz,
    Csv,
}

/// Lorenz integration settings; the trajectory is subsampled to `n` rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzSettings {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: [f64; 3],
    pub t_end: f64,
    pub dt: f64,
}

impl Default for LorenzSettings {
    fn default() -> Self {
        let p = LorenzParams::default();
        Self {
            sigma: p.sigma,
            rho: p.rho,
            beta: p.beta,
            x0: p.x0,
            t_end: p.t_end,
            dt: p.dt,
        }
    }
}

impl From<LorenzSettings> for LorenzParams {
    fn from(s: LorenzSettings) -> Self {
        LorenzParams {
            sigma: s.sigma,
            rho: s.rho,
            beta: s.beta,
            x0: s.x0,
            t_end: s.t_end,
            dt: s.dt,
        }
    }
}

/// Everything needed to reproduce one experiment. Stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    pub csv_header: bool,
    /// Number of observations; generated trajectories and CSV inputs are
    /// subsampled to this many rows.
    pub n: usize,
    pub noise_std: f64,
    pub sigma: f64,
    /// Target rank `d`: number of eigenpairs and embedding components.
    pub rank: usize,
    pub t: f64,
    pub method: Method,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub pinv_tolerance: f64,
    pub seed: u64,
    pub drop_trivial: bool,
    pub weighting: Weighting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    pub cluster_max_iters: usize,
    pub solver: EigenSolver,
    pub block_size: usize,
    /// Also run the deterministic path and report the embedding error.
    pub reference: bool,
    pub output_dir: PathBuf,
    pub lorenz: LorenzSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Helix,
            csv_path: None,
            csv_header: false,
            n: 2000,
            noise_std: DEFAULT_NOISE_STD,
            sigma: 0.5,
            rank: 50,
            t: 1.0,
            method: Method::NystromProjection,
            oversampling: DEFAULT_OVERSAMPLING,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            pinv_tolerance: DEFAULT_PINV_TOLERANCE,
            seed: 0,
            drop_trivial: false,
            weighting: Weighting::SqrtPower,
            cluster: None,
            cluster_max_iters: 300,
            solver: EigenSolver::Auto,
            block_size: DEFAULT_BLOCK_SIZE,
            reference: false,
            output_dir: PathBuf::from("out"),
            lorenz: LorenzSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Full-scale benchmark settings for each dataset.
    pub fn preset(dataset: DatasetKind) -> Self {
        // Clustering presets drop the constant component, which carries no
        // geometric information.
        let base = Self {
            dataset,
            drop_trivial: dataset != DatasetKind::Csv,
            ..Self::default()
        };
        match dataset {
            DatasetKind::Helix => Self {
                n: 15_000,
                rank: 300,
                cluster: Some(2),
                ..base
            },
            DatasetKind::SwissRoll => Self {
                n: 20_000,
                rank: 300,
                cluster: Some(4),
                ..base
            },
            DatasetKind::Lorenz => Self {
                n: 30_000,
                sigma: 10.0,
                rank: 500,
                cluster: Some(2),
                ..base
            },
            DatasetKind::Csv => base,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Eigenpairs to compute: `rank`, plus the trivial one when it is dropped.
    pub fn components(&self) -> usize {
        self.rank + usize::from(self.drop_trivial)
    }

    pub fn sketch(&self, strategy: SketchStrategy) -> SketchConfig {
        SketchConfig {
            target_rank: self.components(),
            oversampling: self.oversampling,
            power_iterations: self.power_iterations,
            strategy,
            // Keep the sketch stream independent of the data-noise stream.
            seed: self.seed.wrapping_add(1),
            pinv_tolerance: self.pinv_tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be non-negative, got {}", self.noise_std));
        }
        if !(self.pinv_tolerance > 0.0 && self.pinv_tolerance < 1.0) {
            return bad(format!("pinv_tolerance must lie in (0, 1), got {}", self.pinv_tolerance));
        }
        if self.block_size == 0 {
            return bad("block_size must be positive".into());
        }
        if self.cluster == Some(0) || self.cluster_max_iters == 0 {
            return bad("cluster count and cluster_max_iters must be positive".into());
        }
        if self.dataset == DatasetKind::Csv && self.csv_path.is_none() {
            return bad("dataset `csv` requires csv_path".into());
        }
        Ok(())
    }

    /// Checks that depend on the number of rows actually loaded.
    pub fn validate_for(&self, n: usize, methods: &[Method]) -> Result<()> {
        if self.components() > n {
            return Err(Error::Config(format!(
                "rank {} (+1 with drop_trivial) exceeds the {n} observations",
                self.rank
            )));
        }
        let width = self.components() + self.oversampling;
        if methods.iter().any(|m| *m != Method::Deterministic) && width > n {
            return Err(Error::Config(format!(
                "sketch width {width} (components + oversampling) exceeds the {n} observations"
            )));
        }
        if let Some(k) = self.cluster {
            if k > n {
                return Err(Error::Config(format!("cluster count {k} exceeds n = {n}")));
            }
        }
        Ok(())
    }
}
