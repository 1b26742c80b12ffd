//! The pipeline commands. Each takes a fully merged [`RunConfig`], writes its
//! artifacts plus a `manifest.json` into the output directory, and returns the
//! manifest.

use std::path::{Path, PathBuf};

use pnn_core::bench::{gen_cubic, gen_ishigami, split, CubicSpec, IshigamiSpec, Standardizer};
use pnn_core::math::derive_seed;
use pnn_core::metrics::{evaluate_predictor, EvalReport};
use pnn_core::modelsel::{group_replicates, GridPlan, GridSpec, RunStatus};
use pnn_core::nn::Pnn;
use pnn_core::train::{fit, OptimizerConfig, TrainConfig};
use pnn_core::{Architecture, Dataset, GprModel, Rng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checkpoint::Checkpoint;
use crate::config::{Benchmark, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{self, CsvLayout, GroupMode};
use crate::parallel;

pub const DEFAULT_DEPTHS: [usize; 4] = [1, 2, 3, 4];
pub const DEFAULT_WIDTHS: [usize; 4] = [2, 4, 6, 8];
pub const DEFAULT_LENGTH_SCALE_BOUNDS: [f64; 6] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];
pub const DEFAULT_NOISE_VARIANCES: [f64; 6] = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0];
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

pub const MANIFEST: &str = "manifest.json";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Settings that reproduce this run when passed back with `--config`.
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub results: Value,
}

impl Manifest {
    fn write(command: &str, config: RunConfig, outputs: &[&str], results: Value, dir: &Path) -> Result<Manifest> {
        let mut outputs: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
        outputs.push(MANIFEST.into());
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            outputs,
            results,
        };
        io::write_json(&dir.join(MANIFEST), &m)?;
        Ok(m)
    }
}

/// Summary part of an [`EvalReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub r_squared: f64,
    pub interval_correlation: f64,
    pub mean_kl: f64,
    pub groups: usize,
    pub degenerate_groups: usize,
}

impl From<&EvalReport> for ReportSummary {
    fn from(r: &EvalReport) -> Self {
        ReportSummary {
            r_squared: r.r_squared,
            interval_correlation: r.interval_correlation,
            mean_kl: r.mean_kl,
            groups: r.groups,
            degenerate_groups: r.degenerate_groups,
        }
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.output_dir
        .clone()
        .ok_or_else(|| CliError::validation("no output directory given"))
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| CliError::validation(format!("missing required setting: {what}")))
}

fn layout(cfg: &RunConfig) -> CsvLayout {
    CsvLayout {
        inputs: cfg.data.input_columns.clone(),
        output: cfg.data.output_column.clone().unwrap_or_else(|| "y".into()),
        group: match &cfg.data.group_column {
            Some(c) => GroupMode::Column(c.clone()),
            None => GroupMode::Exact,
        },
    }
}

/// Resolved training and test data, and the settings used to read it.
struct Data {
    train: Dataset,
    test: Option<Dataset>,
    standardizer: Option<Standardizer>,
}

fn load_data(cfg: &RunConfig, need_test: bool) -> Result<Data> {
    let layout = layout(cfg);
    let train = io::load_csv(required(&cfg.data.train, "data.train")?, &layout)?;
    let test = match (&cfg.data.test, need_test) {
        (Some(p), _) => Some(io::load_csv(p, &layout)?),
        (None, true) => return Err(CliError::validation("missing required setting: data.test")),
        (None, false) => None,
    };
    if let Some(t) = &test {
        if t.input_dim() != train.input_dim() {
            return Err(CliError::validation(format!(
                "train has {} input columns but test has {}",
                train.input_dim(),
                t.input_dim()
            )));
        }
    }
    if !cfg.model.standardize.unwrap_or(false) {
        return Ok(Data {
            train,
            test,
            standardizer: None,
        });
    }
    let s = Standardizer::fit(&train);
    Ok(Data {
        train: s.transform(&train)?,
        test: test.map(|t| s.transform(&t)).transpose()?,
        standardizer: Some(s),
    })
}

fn train_config(cfg: &RunConfig, shuffle_seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let t = TrainConfig {
        batch_size: cfg.train.batch_size.unwrap_or(d.batch_size),
        epochs: cfg.train.epochs.unwrap_or(d.epochs),
        shuffle_seed,
        loss: cfg.train.loss.unwrap_or(d.loss),
    };
    t.validate()?;
    Ok(t)
}

fn optimizer_config(cfg: &RunConfig) -> Result<OptimizerConfig> {
    let d = OptimizerConfig::default();
    let o = OptimizerConfig {
        learning_rate: cfg.optimizer.learning_rate.unwrap_or(d.learning_rate),
        decay: cfg.optimizer.decay.unwrap_or(d.decay),
        epsilon: cfg.optimizer.epsilon.unwrap_or(d.epsilon),
    };
    o.validate()?;
    Ok(o)
}

/// Copies the resolved training settings back into `out`.
fn record_training(out: &mut RunConfig, t: &TrainConfig, o: &OptimizerConfig) {
    out.train.batch_size = Some(t.batch_size);
    out.train.epochs = Some(t.epochs);
    out.train.loss = Some(t.loss);
    out.optimizer.learning_rate = Some(o.learning_rate);
    out.optimizer.decay = Some(o.decay);
    out.optimizer.epsilon = Some(o.epsilon);
}

pub fn generate(cfg: &RunConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    let benchmark = cfg
        .data
        .benchmark
        .ok_or_else(|| CliError::validation("missing required setting: data.benchmark"))?;
    let mut effective = RunConfig {
        seed: Some(seed),
        output_dir: Some(dir.clone()),
        ..RunConfig::default()
    };
    effective.data.benchmark = Some(benchmark);
    let (train, test) = match benchmark {
        Benchmark::Cubic => {
            let train_spec = CubicSpec {
                n_unique: cfg.data.n_unique.unwrap_or(CubicSpec::train_protocol(0).n_unique),
                replicates: cfg.data.replicates.unwrap_or(CubicSpec::train_protocol(0).replicates),
                seed: derive_seed(seed, 0),
            };
            let test_spec = CubicSpec {
                n_unique: cfg.data.test_n_unique.unwrap_or(CubicSpec::test_protocol(0).n_unique),
                seed: derive_seed(seed, 1),
                ..train_spec
            };
            effective.data.n_unique = Some(train_spec.n_unique);
            effective.data.replicates = Some(train_spec.replicates);
            effective.data.test_n_unique = Some(test_spec.n_unique);
            (gen_cubic(&train_spec)?, gen_cubic(&test_spec)?)
        }
        Benchmark::Ishigami => {
            let d = IshigamiSpec::train_protocol(0);
            let train_spec = IshigamiSpec {
                a: cfg.data.a.unwrap_or(d.a),
                b: cfg.data.b.unwrap_or(d.b),
                n_unique: cfg.data.n_unique.unwrap_or(d.n_unique),
                replicates: cfg.data.replicates.unwrap_or(d.replicates),
                seed: derive_seed(seed, 0),
            };
            let test_spec = IshigamiSpec {
                n_unique: cfg.data.test_n_unique.unwrap_or(IshigamiSpec::test_protocol(0).n_unique),
                seed: derive_seed(seed, 1),
                ..train_spec
            };
            effective.data.n_unique = Some(train_spec.n_unique);
            effective.data.replicates = Some(train_spec.replicates);
            effective.data.test_n_unique = Some(test_spec.n_unique);
            effective.data.a = Some(train_spec.a);
            effective.data.b = Some(train_spec.b);
            (gen_ishigami(&train_spec)?, gen_ishigami(&test_spec)?)
        }
        Benchmark::Csv => {
            let input = required(&cfg.data.input, "data.input")?;
            let fraction = cfg.data.test_fraction.unwrap_or(DEFAULT_TEST_FRACTION);
            let all = io::load_csv(input, &layout(cfg))?;
            effective.data.input = Some(input.clone());
            effective.data.test_fraction = Some(fraction);
            effective.data.input_columns = cfg.data.input_columns.clone();
            effective.data.output_column = cfg.data.output_column.clone();
            effective.data.group_column = cfg.data.group_column.clone();
            split(&all, fraction, derive_seed(seed, 0))?
        }
    };
    io::write_csv(&dir.join("train.csv"), &train)?;
    io::write_csv(&dir.join("test.csv"), &test)?;
    let results = json!({
        "train_rows": train.len(),
        "train_groups": train.unique_keys().len(),
        "test_rows": test.len(),
        "test_groups": test.unique_keys().len(),
    });
    Manifest::write("generate", effective, &["train.csv", "test.csv"], results, &dir)
}

pub fn train(cfg: &RunConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    let data = load_data(cfg, false)?;
    let arch = Architecture {
        variance_floor: cfg.model.variance_floor.unwrap_or(pnn_core::nn::DEFAULT_VARIANCE_FLOOR),
        ..Architecture::new(
            data.train.input_dim(),
            cfg.model.depth.unwrap_or(4),
            cfg.model.width.unwrap_or(6),
        )?
    };
    arch.validate()?;
    let root = Rng::new(seed);
    let t = train_config(cfg, root.substream(1).key())?;
    let o = optimizer_config(cfg)?;
    let outcome = fit(&data.train, &arch, &t, &o, &mut root.substream(0))?;
    let model = Pnn::new(arch, outcome.params)?;
    Checkpoint::pnn(&model, seed, data.standardizer).save(&dir.join(CHECKPOINT))?;
    io::write_loss_history(&dir.join("loss.csv"), &outcome.history)?;

    let mut effective = RunConfig {
        seed: Some(seed),
        output_dir: Some(dir.clone()),
        ..RunConfig::default()
    };
    effective.data = cfg.data.clone();
    effective.data.test = None;
    effective.model.depth = Some(arch.depth);
    effective.model.width = Some(arch.width);
    effective.model.variance_floor = Some(arch.variance_floor);
    effective.model.standardize = Some(cfg.model.standardize.unwrap_or(false));
    record_training(&mut effective, &t, &o);
    let results = json!({
        "parameters": arch.parameter_count(),
        "first_epoch_loss": outcome.history.first(),
        "final_epoch_loss": outcome.history.last(),
    });
    Manifest::write("train", effective, &[CHECKPOINT, "loss.csv"], results, &dir)
}

pub fn gridsearch(cfg: &RunConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    let data = load_data(cfg, true)?;
    let test = data.test.as_ref().expect("test set is required");
    let spec = GridSpec {
        depths: cfg.grid.depths.clone().unwrap_or(DEFAULT_DEPTHS.to_vec()),
        widths: cfg.grid.widths.clone().unwrap_or(DEFAULT_WIDTHS.to_vec()),
        seeds_per_cell: cfg.grid.seeds_per_cell.unwrap_or(1),
    };
    let t = train_config(cfg, 0)?;
    let o = optimizer_config(cfg)?;
    let jobs = cfg.jobs.unwrap_or_else(parallel::default_jobs);
    let timing = cfg.timing.unwrap_or(false);
    let plan = GridPlan::new(&data.train, test, spec.clone(), t, o, &Rng::new(seed))?;
    let result = parallel::run_grid(&plan, jobs, timing)?;

    io::write_grid(&dir.join("grid.csv"), &result, timing)?;
    io::write_grid_cells(&dir.join("grid_cells.csv"), &result)?;
    let (best, model) = match (result.best(), result.best_model(), result.best_run()) {
        (Some(b), Some(m), Some(r)) => (b.clone(), (m, r.run)),
        _ => {
            let diverged = result.runs.iter().any(|r| r.status == RunStatus::Diverged);
            let msg = "every grid run failed";
            return Err(if diverged {
                CliError::Numerical(msg.into())
            } else {
                CliError::validation(msg)
            });
        }
    };
    let run_key = plan.run_rng(&model.1).key();
    Checkpoint::pnn(&model.0, run_key, data.standardizer).save(&dir.join(CHECKPOINT))?;

    let mut effective = RunConfig {
        seed: Some(seed),
        output_dir: Some(dir.clone()),
        jobs: None,
        timing: Some(timing),
        ..RunConfig::default()
    };
    effective.data = cfg.data.clone();
    effective.model.standardize = Some(cfg.model.standardize.unwrap_or(false));
    effective.grid.depths = Some(spec.depths);
    effective.grid.widths = Some(spec.widths);
    effective.grid.seeds_per_cell = Some(spec.seeds_per_cell);
    record_training(&mut effective, &t, &o);
    let failed = result.runs.iter().filter(|r| r.status != RunStatus::Ok).count();
    let results = json!({
        "best_depth": best.depth,
        "best_width": best.width,
        "best_mean_kl": best.mean_kl,
        "runs": result.runs.len(),
        "failed_runs": failed,
    });
    Manifest::write(
        "gridsearch",
        effective,
        &["grid.csv", "grid_cells.csv", CHECKPOINT],
        results,
        &dir,
    )
}

pub fn evaluate(cfg: &RunConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let ckpt_path = required(&cfg.model.checkpoint, "model.checkpoint")?;
    let test_path = required(&cfg.data.test, "data.test")?;
    let model = Checkpoint::load(ckpt_path)?.into_model()?;
    let test = io::load_csv(test_path, &layout(cfg))?;
    let emp = group_replicates(&test)?;
    let report = evaluate_predictor(&model, &emp)?;
    write_report(&dir, &report)?;

    let mut effective = RunConfig {
        output_dir: Some(dir.clone()),
        ..RunConfig::default()
    };
    effective.model.checkpoint = Some(ckpt_path.clone());
    effective.data.test = Some(test_path.clone());
    effective.data.input_columns = cfg.data.input_columns.clone();
    effective.data.output_column = cfg.data.output_column.clone();
    effective.data.group_column = cfg.data.group_column.clone();
    let results = serde_json::to_value(ReportSummary::from(&report)).expect("summary serializes");
    Manifest::write(
        "evaluate",
        effective,
        &[REPORT, "scatter_mean.csv", "scatter_interval.csv"],
        results,
        &dir,
    )
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    io::write_json(&dir.join(REPORT), &ReportSummary::from(report))?;
    io::write_scatter(dir, report)
}

pub fn gpr(cfg: &RunConfig) -> Result<Manifest> {
    let dir = output_dir(cfg)?;
    let data = load_data(cfg, true)?;
    let test = data.test.as_ref().expect("test set is required");
    let bounds = cfg
        .gpr
        .length_scale_bounds
        .clone()
        .unwrap_or(DEFAULT_LENGTH_SCALE_BOUNDS.to_vec());
    let noise = cfg.gpr.noise_variances.clone().unwrap_or(DEFAULT_NOISE_VARIANCES.to_vec());
    let jobs = cfg.jobs.unwrap_or_else(parallel::default_jobs);
    let emp = group_replicates(test)?;
    let tuning = parallel::run_tuning(&data.train, &emp, &bounds, &noise, jobs)?;
    io::write_tuning(&dir.join("gpr_tuning.csv"), &tuning)?;
    let best = tuning
        .best_row()
        .cloned()
        .ok_or_else(|| CliError::Numerical("every GPR tuning cell failed".into()))?;
    let model = GprModel::fit(&data.train, &tuning.best_config().expect("best row exists"))?;
    let report = evaluate_predictor(&model, &emp)?;
    Checkpoint::gpr(&model, &data.train, data.standardizer).save(&dir.join(CHECKPOINT))?;
    write_report(&dir, &report)?;

    let mut effective = RunConfig {
        output_dir: Some(dir.clone()),
        jobs: None,
        ..RunConfig::default()
    };
    effective.data = cfg.data.clone();
    effective.model.standardize = Some(cfg.model.standardize.unwrap_or(false));
    effective.gpr.length_scale_bounds = Some(bounds);
    effective.gpr.noise_variances = Some(noise);
    let max_kl = tuning.rows.iter().filter_map(|r| r.kl).fold(f64::NEG_INFINITY, f64::max);
    let results = json!({
        "best_length_scale_bound": best.length_scale_bound,
        "best_noise_variance": best.noise_variance,
        "best_length_scale": best.length_scale,
        "best_kl": best.kl,
        "max_kl": max_kl,
        "report": ReportSummary::from(&report),
    });
    Manifest::write(
        "gpr",
        effective,
        &["gpr_tuning.csv", CHECKPOINT, REPORT, "scatter_mean.csv", "scatter_interval.csv"],
        results,
        &dir,
    )
}

/// Collects every `manifest.json` under `root` (other than the summary's own
/// directory) into `summary.json`.
pub fn report(root: &Path, out: &Path) -> Result<Value> {
    if !root.is_dir() {
        return Err(CliError::io(root, "not a directory"));
    }
    let mut runs = Vec::new();
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.file_name() == MANIFEST)
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    for path in paths {
        let dir = path.parent().unwrap_or(Path::new(""));
        if dir == out {
            continue;
        }
        let m: Manifest = io::read_json(&path)?;
        if m.command == "report" {
            continue;
        }
        let rel = dir.strip_prefix(root).unwrap_or(dir);
        runs.push(json!({
            "directory": rel.to_string_lossy(),
            "command": m.command,
            "results": m.results,
        }));
    }
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": "report",
        "runs": runs,
    });
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
