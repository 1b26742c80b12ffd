//! Probabilistic neural networks for heteroscedastic regression.
//!
//! A network with a shared ELU trunk and a two-output Gaussian head predicts a
//! mean and a variance for every input. Training minimizes the Gaussian
//! negative log-likelihood with RMSProp, and architectures are compared by the
//! KL divergence between the empirical distribution of replicated outputs and
//! the predicted Gaussian. A squared-exponential Gaussian process baseline and
//! seeded generators for the cubic and Ishigami benchmarks are included.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! parallel grid runner live in the `pnn` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bench;
mod error;
pub mod gpr;
pub mod math;
pub mod metrics;
pub mod modelsel;
pub mod nn;
pub mod train;

pub use bench::{CubicSpec, Dataset, IshigamiSpec, Provenance};
pub use error::{Error, Result};
pub use gpr::{GprConfig, GprModel};
pub use math::{Matrix, Rng, Vector};
pub use metrics::EvalReport;
pub use modelsel::{EmpiricalStats, GridResult, GridSpec};
pub use nn::{Architecture, GaussianPrediction, NetworkParameters, Pnn, Predictor};
pub use train::{LossKind, OptimizerConfig, OptimizerState, TrainConfig};
