//! Command-line interface.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pnn_core::train::LossKind;

use crate::commands;
use crate::config::{Benchmark, RunConfig};
use crate::error::{CliError, Result};

/// Probabilistic neural networks for heteroscedastic regression: generate
/// benchmark data, train, grid-search architectures, evaluate, and compare
/// with Gaussian process regression.
///
/// Settings are layered: built-in defaults, then `--config`, then flags.
/// Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure,
/// 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "pnn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write train.csv and test.csv for a benchmark, or split an existing CSV.
    Generate(GenerateArgs),
    /// Train one network and write checkpoint.json and loss.csv.
    Train(TrainArgs),
    /// Train every depth/width cell, score each by KL divergence on the test
    /// set, and keep the best network.
    Gridsearch(GridArgs),
    /// Score a PNN or GPR checkpoint on a test set.
    Evaluate(EvaluateArgs),
    /// Tune a GPR over length-scale bounds and noise variances, then evaluate
    /// the best one.
    Gpr(GprArgs),
    /// Gather every manifest.json under a directory into summary.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: <output root>/<command>].
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root of default output directories.
    #[arg(long, env = "PNN_OUTPUT_ROOT", default_value = "runs", value_name = "DIR")]
    pub output_root: PathBuf,
    /// Seed from which every random stream of the command is derived.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    /// Input columns [default: every column except the output column and any
    /// column named `group` or given by --group-column].
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub input_columns: Option<Vec<String>>,
    /// Output column [default: y].
    #[arg(long, value_name = "NAME")]
    pub output_column: Option<String>,
    /// Take replicate groups from this integer column instead of grouping
    /// rows with identical inputs.
    #[arg(long, value_name = "NAME")]
    pub group_column: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training CSV.
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    /// Test CSV.
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
    /// z-score inputs using training-set statistics; stored in the checkpoint.
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    /// Passes over the training set [default: 100].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default: 32].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Training loss [default: heteroscedastic-nll].
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// RMSProp step size [default: 0.001].
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// RMSProp decay of the squared-gradient average [default: 0.9].
    #[arg(long)]
    pub decay: Option<f64>,
    /// RMSProp epsilon [default: 1e-7].
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum LossArg {
    HeteroscedasticNll,
    Mse,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Data source.
    #[arg(long, value_enum)]
    pub benchmark: Option<Benchmark>,
    /// Unique training inputs [default: 100 cubic, 300 ishigami].
    #[arg(long)]
    pub n_unique: Option<usize>,
    /// Outputs drawn per unique input [default: 10].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Unique test inputs [default: 50 cubic, 100 ishigami].
    #[arg(long)]
    pub test_n_unique: Option<usize>,
    /// Ishigami coefficient a [default: 7].
    #[arg(long)]
    pub a: Option<f64>,
    /// Ishigami coefficient b [default: 0.1].
    #[arg(long)]
    pub b: Option<f64>,
    /// CSV to split (with --benchmark csv).
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Fraction of groups sent to the test set (with --benchmark csv) [default: 0.2].
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Hidden layers [default: 4].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Units per hidden layer [default: 6].
    #[arg(long)]
    pub width: Option<usize>,
    /// Constant added to the softplus variance head [default: 1e-6].
    #[arg(long)]
    pub variance_floor: Option<f64>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Depths to try, comma separated [default: 1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Widths to try, comma separated [default: 2,4,6,8].
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// Independently seeded runs per cell [default: 1].
    #[arg(long)]
    pub seeds_per_cell: Option<usize>,
    /// Worker threads [default: number of logical cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall time per run in grid.csv (makes the file run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint written by train, gridsearch or gpr.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Test CSV.
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GprArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Upper bounds for the length-scale search, comma separated
    /// [default: 0.01,0.03,0.1,0.3,1,3].
    #[arg(long, value_delimiter = ',')]
    pub length_scale_bounds: Option<Vec<f64>>,
    /// Noise variances, comma separated [default: 1e-4,1e-3,0.01,0.1,1,10].
    #[arg(long, value_delimiter = ',')]
    pub noise_variances: Option<Vec<f64>>,
    /// Worker threads [default: number of logical cores].
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory searched for manifests [default: the output root].
    #[arg(long, value_name = "DIR")]
    pub root: Option<PathBuf>,
    /// Directory receiving summary.json [default: the searched directory].
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root of default output directories.
    #[arg(long, env = "PNN_OUTPUT_ROOT", default_value = "runs", value_name = "DIR")]
    pub output_root: PathBuf,
}

fn apply_columns(cfg: &mut RunConfig, c: &ColumnArgs) {
    cfg.data.input_columns = c.input_columns.clone();
    cfg.data.output_column = c.output_column.clone();
    cfg.data.group_column = c.group_column.clone();
}

fn apply_data(cfg: &mut RunConfig, d: &DataArgs) {
    cfg.data.train = d.train.clone();
    cfg.data.test = d.test.clone();
    cfg.model.standardize = d.standardize.then_some(true);
    apply_columns(cfg, &d.columns);
}

fn apply_training(cfg: &mut RunConfig, t: &TrainingArgs) {
    cfg.train.epochs = t.epochs;
    cfg.train.batch_size = t.batch_size;
    cfg.train.loss = t.loss.map(|l| match l {
        LossArg::HeteroscedasticNll => LossKind::HeteroscedasticNll,
        LossArg::Mse => LossKind::Mse,
    });
    cfg.optimizer.learning_rate = t.learning_rate;
    cfg.optimizer.decay = t.decay;
    cfg.optimizer.epsilon = t.epsilon;
}

/// Merges defaults, the config file and flags for one command.
fn resolve(name: &str, common: &CommonArgs, flags: RunConfig) -> Result<RunConfig> {
    let base = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut flags = flags;
    flags.seed = common.seed;
    flags.output_dir = common.out.clone();
    let mut cfg = base.overlay(&flags);
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(common.output_root.join(name));
    }
    Ok(cfg)
}

/// Runs one command and returns a line to print on success.
pub fn execute(cli: Cli) -> Result<String> {
    let manifest = match &cli.command {
        Command::Generate(a) => {
            let mut f = RunConfig::default();
            f.data.benchmark = a.benchmark;
            f.data.n_unique = a.n_unique;
            f.data.replicates = a.replicates;
            f.data.test_n_unique = a.test_n_unique;
            f.data.a = a.a;
            f.data.b = a.b;
            f.data.input = a.input.clone();
            f.data.test_fraction = a.test_fraction;
            apply_columns(&mut f, &a.columns);
            commands::generate(&resolve("generate", &a.common, f)?)?
        }
        Command::Train(a) => {
            let mut f = RunConfig::default();
            apply_data(&mut f, &a.data);
            f.model.depth = a.depth;
            f.model.width = a.width;
            f.model.variance_floor = a.variance_floor;
            apply_training(&mut f, &a.training);
            commands::train(&resolve("train", &a.common, f)?)?
        }
        Command::Gridsearch(a) => {
            let mut f = RunConfig::default();
            apply_data(&mut f, &a.data);
            f.grid.depths = a.depths.clone();
            f.grid.widths = a.widths.clone();
            f.grid.seeds_per_cell = a.seeds_per_cell;
            f.jobs = a.jobs;
            f.timing = a.timing.then_some(true);
            apply_training(&mut f, &a.training);
            commands::gridsearch(&resolve("gridsearch", &a.common, f)?)?
        }
        Command::Evaluate(a) => {
            let mut f = RunConfig::default();
            f.model.checkpoint = a.checkpoint.clone();
            f.data.test = a.test.clone();
            apply_columns(&mut f, &a.columns);
            commands::evaluate(&resolve("evaluate", &a.common, f)?)?
        }
        Command::Gpr(a) => {
            let mut f = RunConfig::default();
            apply_data(&mut f, &a.data);
            f.gpr.length_scale_bounds = a.length_scale_bounds.clone();
            f.gpr.noise_variances = a.noise_variances.clone();
            f.jobs = a.jobs;
            commands::gpr(&resolve("gpr", &a.common, f)?)?
        }
        Command::Report(a) => {
            let root = a.root.clone().unwrap_or_else(|| a.output_root.clone());
            let out = a.out.clone().unwrap_or_else(|| root.clone());
            commands::report(&root, &out)?;
            return Ok(format!("wrote {}", out.join("summary.json").display()));
        }
    };
    let dir = manifest.config.output_dir.clone().unwrap_or_default();
    Ok(format!(
        "{}: wrote {} to {}",
        manifest.command,
        manifest.outputs.join(", "),
        dir.display()
    ))
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => CliError::Validation(String::new()).exit_code(),
            };
        }
    };
    match execute(cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
