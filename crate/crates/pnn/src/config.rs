//! Run configuration.
//!
//! Settings come from three layers, later ones winning: built-in defaults, a
//! TOML file passed with `--config` (or the `config` object of a previous
//! run's `manifest.json`), and command-line flags. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/cubic"
//! jobs = 4
//!
//! [data]
//! benchmark = "cubic"   # cubic | ishigami | csv
//! n_unique = 100
//! replicates = 10
//! test_n_unique = 50
//! train = "runs/cubic/train.csv"
//! test = "runs/cubic/test.csv"
//!
//! [model]
//! depth = 4
//! width = 6
//!
//! [train]
//! batch_size = 32
//! epochs = 100
//!
//! [optimizer]
//! learning_rate = 0.001
//!
//! [grid]
//! depths = [1, 2, 3, 4]
//! widths = [2, 4, 6, 8]
//!
//! [gpr]
//! length_scale_bounds = [0.01, 0.1, 1.0]
//! noise_variances = [0.01, 0.1, 1.0]
//! ```

use std::path::{Path, PathBuf};

use pnn_core::train::LossKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Cubic,
    Ishigami,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub benchmark: Option<Benchmark>,
    /// Unique training inputs for generated benchmarks.
    pub n_unique: Option<usize>,
    pub replicates: Option<usize>,
    /// Unique test inputs for generated benchmarks.
    pub test_n_unique: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// CSV to split when `benchmark = "csv"`.
    pub input: Option<PathBuf>,
    pub test_fraction: Option<f64>,
    pub input_columns: Option<Vec<String>>,
    pub output_column: Option<String>,
    /// Read replicate groups from this column instead of exact input equality.
    pub group_column: Option<String>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub depth: Option<usize>,
    pub width: Option<usize>,
    pub variance_floor: Option<f64>,
    /// z-score inputs with statistics of the training set.
    pub standardize: Option<bool>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub loss: Option<LossKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub learning_rate: Option<f64>,
    pub decay: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub depths: Option<Vec<usize>>,
    pub widths: Option<Vec<usize>>,
    pub seeds_per_cell: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GprSection {
    pub length_scale_bounds: Option<Vec<f64>>,
    pub noise_variances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Record wall time per grid run.
    pub timing: Option<bool>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub gpr: GprSection,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    /// `top` wins wherever it sets a value.
    pub fn overlay(mut self, top: &RunConfig) -> RunConfig {
        overlay!(self, top; seed, output_dir, jobs, timing);
        overlay!(self.data, top.data; benchmark, n_unique, replicates, test_n_unique, a, b, input,
            test_fraction, input_columns, output_column, group_column, train, test);
        overlay!(self.model, top.model; depth, width, variance_floor, standardize, checkpoint);
        overlay!(self.train, top.train; batch_size, epochs, loss);
        overlay!(self.optimizer, top.optimizer; learning_rate, decay, epsilon);
        overlay!(self.grid, top.grid; depths, widths, seeds_per_cell);
        overlay!(self.gpr, top.gpr; length_scale_bounds, noise_variances);
        self
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("invalid config: {}", e.message())))
    }

    /// Reads a TOML config, or the `config` object of a `manifest.json`.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct ManifestConfig {
                config: RunConfig,
            }
            serde_json::from_str::<ManifestConfig>(&text)
                .map(|m| m.config)
                .map_err(|e| CliError::validation(format!("invalid config: {e}")))
        } else {
            RunConfig::from_toml(&text)
        };
        parsed.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }
}
