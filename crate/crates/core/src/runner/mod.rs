//! Experiment pipeline: data, kernel and degrees, decomposition, embedding,
//! timed per stage, with JSON/CSV outputs.
//!
//! Files written to `output_dir`:
//!
//! * `report.json`: [`ExperimentReport`];
//! * `config.toml`: the effective configuration;
//! * `embedding.csv` (`run`) or `embedding_<method>.csv` (`compare`):
//!   columns `c1..cd`, plus `label` when clustering was requested;
//! * `spectrum.csv`: `eigval_index` followed by one column per method.

mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use faer::Mat;

pub use config::{DatasetKind, ExperimentConfig, LorenzSettings};
pub use report::{ExperimentReport, MethodRun, Speedup, StageTimes};

use crate::datasets::{
    format_f64, generate_helix, generate_swiss_roll, integrate_lorenz, load_csv, write_csv_rows, DataMatrix,
    LorenzParams,
};
use crate::embedding::{
    diffusion_map, kmeans_cluster, relative_embedding_error, DiffusionEmbedding, EmbeddingParams,
};
use crate::error::{Error, Result};
use crate::kernel::{DegreeVector, GaussianKernel};
use crate::linalg::DenseOperator;
use crate::nystrom::{nystrom_columns_model, nystrom_projection_model, SketchStrategy};
use crate::spectral::{deterministic_model, into_symmetric_matrix, Method, SpectralModel};

/// Generates or loads the configured data set.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<DataMatrix> {
    match cfg.dataset {
        DatasetKind::Helix => generate_helix(cfg.n, cfg.noise_std, cfg.seed),
        DatasetKind::SwissRoll => generate_swiss_roll(cfg.n, cfg.noise_std, cfg.seed).map(|r| r.data),
        DatasetKind::Lorenz => {
            let params: LorenzParams = cfg.lorenz.into();
            integrate_lorenz(&params)?.subsample_uniform(cfg.n)
        }
        DatasetKind::Csv => {
            let path = cfg
                .csv_path
                .as_ref()
                .ok_or_else(|| Error::Config("dataset `csv` requires csv_path".into()))?;
            load_csv(path, cfg.csv_header)?.subsample_uniform(cfg.n)
        }
    }
}

/// Output of one method on one data set.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub model: SpectralModel,
    pub embedding: DiffusionEmbedding,
    pub labels: Option<Vec<usize>>,
    pub cluster_inertia: Option<f64>,
    pub times: StageTimes,
}

/// Kernel stage shared by the deterministic and projection paths: the
/// symmetric operator `A` and the degrees.
struct DenseStage {
    a: Mat<f64>,
    deg: DegreeVector,
    kernel_seconds: f64,
    degree_seconds: f64,
}

fn dense_stage(data: &DataMatrix, cfg: &ExperimentConfig) -> Result<DenseStage> {
    let start = Instant::now();
    let kernel = GaussianKernel::new(data, cfg.sigma).map_err(|e| e.in_stage("kernel"))?;
    let k = kernel.matrix().map_err(|e| e.in_stage("kernel"))?;
    let mut kernel_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let deg = k.row_sums();
    let degree_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let a = into_symmetric_matrix(k, &deg).map_err(|e| e.in_stage("kernel"))?;
    kernel_seconds += start.elapsed().as_secs_f64();
    Ok(DenseStage {
        a,
        deg,
        kernel_seconds,
        degree_seconds,
    })
}

fn embed(model: SpectralModel, cfg: &ExperimentConfig, mut times: StageTimes) -> Result<MethodOutcome> {
    let start = Instant::now();
    let offset = usize::from(cfg.drop_trivial);
    let dims = cfg.rank.min(model.eigenvalues.len().saturating_sub(offset));
    if dims == 0 {
        return Err(Error::Degenerate("no usable spectral components".into()).in_stage("embedding"));
    }
    let params = EmbeddingParams::new(cfg.t, dims)
        .drop_trivial(cfg.drop_trivial)
        .weighting(cfg.weighting);
    let embedding = diffusion_map(&model, &params).map_err(|e| e.in_stage("embedding"))?;
    let (labels, cluster_inertia) = match cfg.cluster {
        Some(k) => {
            let c = kmeans_cluster(&embedding, k, cfg.seed.wrapping_add(2), cfg.cluster_max_iters)
                .map_err(|e| e.in_stage("embedding"))?;
            (Some(c.labels), Some(c.inertia))
        }
        None => (None, None),
    };
    times.embedding = start.elapsed().as_secs_f64();
    Ok(MethodOutcome {
        model,
        embedding,
        labels,
        cluster_inertia,
        times,
    })
}

fn decompose_dense(stage: &DenseStage, cfg: &ExperimentConfig, method: Method) -> Result<MethodOutcome> {
    let start = Instant::now();
    let model = match method {
        Method::Deterministic => deterministic_model(stage.a.as_ref(), &stage.deg, cfg.components(), cfg.solver),
        Method::NystromProjection => nystrom_projection_model(
            &DenseOperator(stage.a.as_ref()),
            &stage.deg,
            &cfg.sketch(SketchStrategy::GaussianProjection),
        ),
        Method::NystromColumns => unreachable!("column sampling does not use the dense operator"),
    }
    .map_err(|e| e.in_stage("decomposition"))?;
    let times = StageTimes {
        kernel: stage.kernel_seconds,
        degrees: stage.degree_seconds,
        decomposition: start.elapsed().as_secs_f64(),
        embedding: 0.0,
    };
    embed(model, cfg, times)
}

fn run_columns(data: &DataMatrix, cfg: &ExperimentConfig) -> Result<MethodOutcome> {
    let start = Instant::now();
    let kernel = GaussianKernel::new(data, cfg.sigma).map_err(|e| e.in_stage("kernel"))?;
    let kernel_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let deg = kernel.degrees(cfg.block_size).map_err(|e| e.in_stage("degrees"))?;
    let degree_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let model = nystrom_columns_model(&kernel, &deg, &cfg.sketch(SketchStrategy::UniformColumns))
        .map_err(|e| e.in_stage("decomposition"))?;
    let times = StageTimes {
        kernel: kernel_seconds,
        degrees: degree_seconds,
        decomposition: start.elapsed().as_secs_f64(),
        embedding: 0.0,
    };
    embed(model, cfg, times)
}

/// Runs every method in `methods` on the same data. Dense kernel work is
/// done once and shared.
pub fn run_methods(data: &DataMatrix, cfg: &ExperimentConfig, methods: &[Method]) -> Result<Vec<MethodOutcome>> {
    cfg.validate()?;
    cfg.validate_for(data.nrows(), methods)?;
    let needs_dense = methods.iter().any(|m| *m != Method::NystromColumns);
    let dense = if needs_dense { Some(dense_stage(data, cfg)?) } else { None };
    methods
        .iter()
        .map(|&m| match (m, &dense) {
            (Method::NystromColumns, _) => run_columns(data, cfg),
            (_, Some(stage)) => decompose_dense(stage, cfg, m),
            (_, None) => unreachable!(),
        })
        .collect()
}

/// Relative error of `approx` against `reference` over their common
/// components.
fn embedding_error(
    reference: &DiffusionEmbedding,
    approx: &DiffusionEmbedding,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let dims = reference.d().min(approx.d());
    if dims < reference.d() {
        warnings.push(format!(
            "relative error computed over the first {dims} of {} components",
            reference.d()
        ));
    }
    let cut = |e: &DiffusionEmbedding| DiffusionEmbedding {
        coords: e.coords.as_ref().subcols(0, dims).to_owned(),
        t: e.t,
        component_eigenvalues: e.component_eigenvalues[..dims].to_vec(),
    };
    relative_embedding_error(&cut(reference), &cut(approx))
}

fn method_run(outcome: &MethodOutcome) -> MethodRun {
    MethodRun {
        method: outcome.model.method,
        wall_time_seconds: outcome.times,
        total_seconds: outcome.times.total(),
        eigenvalues: outcome.model.eigenvalues.clone(),
        effective_rank: outcome.model.effective_rank,
        embedding_dims: outcome.embedding.d(),
        relative_error: None,
        speedup: None,
        cluster_inertia: outcome.cluster_inertia,
        warnings: outcome.model.warnings.clone(),
    }
}

/// Outcomes of an experiment before anything is written to disk.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub outcomes: Vec<MethodOutcome>,
    /// Whether embeddings are written per method (`compare`) or as a single
    /// `embedding.csv` (`run`).
    per_method_files: bool,
}

fn assemble(
    cfg: &ExperimentConfig,
    data: &DataMatrix,
    data_seconds: f64,
    outcomes: Vec<MethodOutcome>,
    per_method_files: bool,
) -> Result<Experiment> {
    let mut runs: Vec<MethodRun> = outcomes.iter().map(method_run).collect();
    let reference = outcomes.iter().position(|o| o.model.method == Method::Deterministic);
    if let Some(r) = reference {
        let ref_times = outcomes[r].times;
        for (i, o) in outcomes.iter().enumerate() {
            if i == r {
                continue;
            }
            let mut warnings = Vec::new();
            let err = embedding_error(&outcomes[r].embedding, &o.embedding, &mut warnings)?;
            runs[i].relative_error = Some(err);
            runs[i].warnings.extend(warnings);
            runs[i].speedup = Some(Speedup {
                decomposition: ref_times.decomposition / o.times.decomposition.max(f64::MIN_POSITIVE),
                pipeline: ref_times.total() / o.times.total().max(f64::MIN_POSITIVE),
            });
        }
    }
    let warnings = runs
        .iter()
        .flat_map(|r| r.warnings.iter().map(move |w| format!("{}: {w}", r.method)))
        .collect();
    Ok(Experiment {
        report: ExperimentReport {
            config: cfg.clone(),
            observations: data.nrows(),
            variables: data.ncols(),
            data_seconds,
            runs,
            warnings,
        },
        outcomes,
        per_method_files,
    })
}

/// Runs `cfg.method` (plus the deterministic reference when
/// `cfg.reference` is set) without touching the file system.
pub fn execute_run(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let start = Instant::now();
    let data = load_dataset(cfg).map_err(|e| e.in_stage("data"))?;
    let data_seconds = start.elapsed().as_secs_f64();
    let mut methods = Vec::new();
    if cfg.reference && cfg.method != Method::Deterministic {
        methods.push(Method::Deterministic);
    }
    methods.push(cfg.method);
    let outcomes = run_methods(&data, cfg, &methods)?;
    assemble(cfg, &data, data_seconds, outcomes, false)
}

/// Runs the deterministic reference and both Nystrom strategies on the same
/// data; `cfg.method` is ignored.
pub fn execute_compare(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let start = Instant::now();
    let data = load_dataset(cfg).map_err(|e| e.in_stage("data"))?;
    let data_seconds = start.elapsed().as_secs_f64();
    let methods = [Method::Deterministic, Method::NystromProjection, Method::NystromColumns];
    let outcomes = run_methods(&data, cfg, &methods)?;
    assemble(cfg, &data, data_seconds, outcomes, true)
}

impl Experiment {
    /// Spectrum table: one row per eigenvalue index, one column per method.
    pub fn spectrum_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["eigval_index".to_string()];
        header.extend(self.report.runs.iter().map(|r| r.method.to_string()));
        let len = self.report.runs.iter().map(|r| r.eigenvalues.len()).max().unwrap_or(0);
        let rows = (0..len)
            .map(|i| {
                let mut row = vec![(i + 1).to_string()];
                row.extend(
                    self.report
                        .runs
                        .iter()
                        .map(|r| r.eigenvalues.get(i).map_or_else(String::new, |v| format_f64(*v))),
                );
                row
            })
            .collect();
        (header, rows)
    }

    fn embedding_file(&self, outcome: &MethodOutcome) -> String {
        if self.per_method_files {
            format!("embedding_{}.csv", outcome.model.method)
        } else {
            "embedding.csv".to_string()
        }
    }

    /// Writes all outputs into `dir`. On failure every file written so far is
    /// removed again.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let result = self.write_files(dir, &mut written);
        if result.is_err() {
            for path in &written {
                let _ = fs::remove_file(path);
            }
        }
        result.map(|_| written)
    }

    fn write_files(&self, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
        let path = dir.join("config.toml");
        written.push(path.clone());
        fs::write(&path, self.report.config.to_toml_string()?)?;

        let outcomes: Vec<&MethodOutcome> = if self.per_method_files {
            self.outcomes.iter().collect()
        } else {
            self.outcomes.iter().filter(|o| o.model.method == self.report.config.method).collect()
        };
        for o in outcomes {
            let path = dir.join(self.embedding_file(o));
            written.push(path.clone());
            o.embedding.write_csv(&path, o.labels.as_deref())?;
        }

        let (header, rows) = self.spectrum_rows();
        let path = dir.join("spectrum.csv");
        written.push(path.clone());
        write_csv_rows(&path, Some(&header), rows)?;

        let path = dir.join("report.json");
        written.push(path.clone());
        fs::write(&path, self.report.to_json()?)?;
        Ok(())
    }
}

/// Runs an experiment and writes its outputs to `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let exp = execute_run(cfg)?;
    exp.write(&cfg.output_dir)?;
    Ok(exp.report)
}

/// Compares all methods and writes the outputs to `cfg.output_dir`.
pub fn compare_methods(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let exp = execute_compare(cfg)?;
    exp.write(&cfg.output_dir)?;
    Ok(exp.report)
}
