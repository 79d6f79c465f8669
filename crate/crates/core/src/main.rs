use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use diffmap::runner::{compare_methods, run_experiment, DatasetKind, ExperimentConfig, ExperimentReport};
use diffmap::{EigenSolver, Error, Method, Weighting};

const EXIT_BAD_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "diffmap", version, about = "Diffusion maps with Nystrom acceleration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one decomposition method and write report, embedding and spectrum.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Also run the deterministic path and report the embedding error.
        #[arg(long)]
        reference: bool,
    },
    /// Run the deterministic path and both Nystrom strategies on the same data.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print a preset configuration as TOML.
    Preset {
        #[arg(value_enum)]
        dataset: DatasetArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Helix,
    Swiss,
    Lorenz,
    Csv,
}

impl From<DatasetArg> for DatasetKind {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Helix => DatasetKind::Helix,
            DatasetArg::Swiss => DatasetKind::SwissRoll,
            DatasetArg::Lorenz => DatasetKind::Lorenz,
            DatasetArg::Csv => DatasetKind::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Det,
    NysCols,
    NysRp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Det => Method::Deterministic,
            MethodArg::NysCols => Method::NystromColumns,
            MethodArg::NysRp => Method::NystromProjection,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Sqrt,
    Power,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dense,
    Lanczos,
}

/// Flags shared by `run` and `compare`. Every flag given on the command
/// line overrides the value from `--config` (or from the dataset preset).
#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file used as the base configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    #[arg(long)]
    csv_path: Option<PathBuf>,
    /// Skip the first row of the CSV input.
    #[arg(long)]
    csv_header: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    power_iters: Option<usize>,
    #[arg(long)]
    pinv_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    drop_trivial: bool,
    /// Cluster the embedding with k-means into K groups.
    #[arg(long, value_name = "K")]
    cluster: Option<usize>,
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    block_size: Option<usize>,
}

impl CommonArgs {
    fn into_config(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, self.dataset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(d)) => ExperimentConfig::preset(d.into()),
            (None, None) => {
                return Err(Error::Config("either --config or --dataset is required".into()));
            }
        };
        if let Some(d) = self.dataset {
            cfg.dataset = d.into();
        }
        if let Some(p) = self.csv_path {
            cfg.csv_path = Some(p);
        }
        cfg.csv_header |= self.csv_header;
        cfg.drop_trivial |= self.drop_trivial;
        macro_rules! set {
            ($($field:ident <- $flag:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(
            n <- n,
            noise_std <- noise,
            sigma <- sigma,
            rank <- rank,
            t <- t,
            oversampling <- oversample,
            power_iterations <- power_iters,
            pinv_tolerance <- pinv_tol,
            seed <- seed,
            output_dir <- out,
            block_size <- block_size,
        );
        if let Some(k) = self.cluster {
            cfg.cluster = Some(k);
        }
        if let Some(w) = self.weighting {
            cfg.weighting = match w {
                WeightingArg::Sqrt => Weighting::SqrtPower,
                WeightingArg::Power => Weighting::Power,
            };
        }
        if let Some(s) = self.solver {
            cfg.solver = match s {
                SolverArg::Auto => EigenSolver::Auto,
                SolverArg::Dense => EigenSolver::Dense,
                SolverArg::Lanczos => EigenSolver::Lanczos,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(report: &ExperimentReport) {
    println!(
        "{} observations x {} variables, rank {}, t = {}",
        report.observations, report.variables, report.config.rank, report.config.t
    );
    for run in &report.runs {
        let mut line = format!(
            "{:<20} decomposition {:>9.3}s  total {:>9.3}s",
            run.method.to_string(),
            run.wall_time_seconds.decomposition,
            run.total_seconds
        );
        if let Some(s) = run.speedup {
            line.push_str(&format!("  speedup {:.2}x", s.decomposition));
        }
        if let Some(e) = run.relative_error {
            line.push_str(&format!("  error {e:.3e}"));
        }
        println!("{line}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("outputs written to {}", report.config.output_dir.display());
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        e if e.is_numeric() => EXIT_NUMERIC,
        Error::Io(_) => 1,
        _ => EXIT_BAD_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            common,
            method,
            reference,
        } => common.into_config().and_then(|mut cfg| {
            if let Some(m) = method {
                cfg.method = m.into();
            }
            cfg.reference |= reference;
            run_experiment(&cfg)
        }),
        Command::Compare { common } => common.into_config().and_then(|cfg| compare_methods(&cfg)),
        Command::Preset { dataset } => {
            return match ExperimentConfig::preset(dataset.into()).to_toml_string() {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_BAD_CONFIG)
                }
            };
        }
    };
    match result {
        Ok(report) => {
            summarize(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
