//! Trained-model files.
//!
//! A checkpoint is a JSON object with a `kind` of `pnn` or `gpr`. Network
//! weights are stored per layer as row-major `fan_out x fan_in` matrices. GPR
//! checkpoints carry their training data and are refitted on load, which is
//! deterministic.

use std::path::Path;

use pnn_core::bench::Standardizer;
use pnn_core::nn::{Architecture, GaussianPrediction, NetworkParameters, Pnn, Predictor};
use pnn_core::{Dataset, GprConfig, GprModel, Matrix, Provenance, Vector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{read_json, write_json};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnnCheckpoint {
    pub format_version: u32,
    pub architecture: Architecture,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
    pub seed: u64,
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprCheckpoint {
    pub format_version: u32,
    pub config: GprConfig,
    pub train_inputs: Matrix,
    pub train_outputs: Vector,
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Pnn(PnnCheckpoint),
    Gpr(GprCheckpoint),
}

impl Checkpoint {
    pub fn pnn(model: &Pnn, seed: u64, standardizer: Option<Standardizer>) -> Checkpoint {
        Checkpoint::Pnn(PnnCheckpoint {
            format_version: FORMAT_VERSION,
            architecture: model.arch,
            weights: model.params.weights.clone(),
            biases: model.params.biases.clone(),
            seed,
            standardizer,
        })
    }

    /// `train` is the (already standardized) data the model was fitted on.
    pub fn gpr(model: &GprModel, train: &Dataset, standardizer: Option<Standardizer>) -> Checkpoint {
        Checkpoint::Gpr(GprCheckpoint {
            format_version: FORMAT_VERSION,
            config: GprConfig {
                tune_length_scale: false,
                ..model.config
            },
            train_inputs: train.inputs().clone(),
            train_outputs: train.outputs().clone(),
            standardizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let ckpt: Checkpoint = read_json(path)?;
        let version = match &ckpt {
            Checkpoint::Pnn(c) => c.format_version,
            Checkpoint::Gpr(c) => c.format_version,
        };
        if version != FORMAT_VERSION {
            return Err(CliError::validation(format!(
                "{}: unsupported checkpoint format_version {version}",
                path.display()
            )));
        }
        Ok(ckpt)
    }

    /// Rebuilds the model, wrapped so that it accepts raw inputs.
    pub fn into_model(self) -> Result<LoadedModel> {
        match self {
            Checkpoint::Pnn(c) => {
                let params = NetworkParameters {
                    weights: c.weights,
                    biases: c.biases,
                };
                Ok(LoadedModel {
                    inner: Box::new(Pnn::new(c.architecture, params)?),
                    standardizer: c.standardizer,
                })
            }
            Checkpoint::Gpr(c) => {
                let train = Dataset::from_exact_inputs(c.train_inputs, c.train_outputs, Provenance::Csv)?;
                Ok(LoadedModel {
                    inner: Box::new(GprModel::fit(&train, &c.config)?),
                    standardizer: c.standardizer,
                })
            }
        }
    }
}

/// A predictor that applies a stored input standardization first.
pub struct LoadedModel {
    inner: Box<dyn Predictor + Send + Sync>,
    standardizer: Option<Standardizer>,
}

impl Predictor for LoadedModel {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn predict(&self, x: &[f64]) -> pnn_core::Result<GaussianPrediction> {
        match &self.standardizer {
            Some(s) if s.mean.len() == x.len() => {
                let mut z = vec![0.0; x.len()];
                s.transform_point(x, &mut z);
                self.inner.predict(&z)
            }
            _ => self.inner.predict(x),
        }
    }
}
