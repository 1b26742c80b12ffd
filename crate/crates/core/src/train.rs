//! Gaussian negative log-likelihood, RMSProp, and the mini-batch training loop.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bench::Dataset;
use crate::error::{config_err, domain_err, shape_err};
use crate::math::Rng;
use crate::nn::{
    accumulate_backward, forward_with, init_parameters, Architecture, GaussianPrediction,
    NetworkParameters, Scratch,
};
use crate::{Error, Result};

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.001,
            decay: 0.9,
            epsilon: 1e-7,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(config_err!("learning_rate must be positive"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(config_err!("decay must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(config_err!("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Moving average of squared gradients, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub mean_square: NetworkParameters,
}

impl OptimizerState {
    pub fn new(params: &NetworkParameters) -> Self {
        OptimizerState {
            mean_square: params.zeros_like(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    #[default]
    HeteroscedasticNll,
    /// Mean squared error on the mean head; the variance head is not trained.
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub shuffle_seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 100,
            shuffle_seed: 0,
            loss: LossKind::HeteroscedasticNll,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(config_err!("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(config_err!("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Negative log-likelihood of `y` under `N(pred.mean, pred.variance)`.
pub fn nll(pred: GaussianPrediction, y: f64) -> Result<f64> {
    check_variance(pred)?;
    Ok(nll_unchecked(pred, y))
}

#[inline]
fn nll_unchecked(pred: GaussianPrediction, y: f64) -> f64 {
    let r = y - pred.mean;
    0.5 * libm::log(2.0 * PI * pred.variance) + r * r / (2.0 * pred.variance)
}

/// Summed NLL over pairs.
pub fn nll_sum(preds: &[GaussianPrediction], ys: &[f64]) -> Result<f64> {
    check_lengths(preds, ys)?;
    preds.iter().zip(ys).map(|(p, y)| nll(*p, *y)).sum()
}

/// `(dNLL/dmean, dNLL/dvariance)` for one pair.
pub fn nll_grad(pred: GaussianPrediction, y: f64) -> Result<(f64, f64)> {
    check_variance(pred)?;
    Ok(nll_grad_unchecked(pred, y))
}

#[inline]
fn nll_grad_unchecked(pred: GaussianPrediction, y: f64) -> (f64, f64) {
    let r = y - pred.mean;
    let v = pred.variance;
    (-r / v, (v - r * r) / (2.0 * v * v))
}

fn check_variance(pred: GaussianPrediction) -> Result<()> {
    if pred.variance > 0.0 {
        Ok(())
    } else {
        Err(domain_err!("predicted variance {} is not positive", pred.variance))
    }
}

fn check_lengths(preds: &[GaussianPrediction], ys: &[f64]) -> Result<()> {
    if preds.len() != ys.len() {
        return Err(shape_err!("{} predictions for {} targets", preds.len(), ys.len()));
    }
    if preds.is_empty() {
        return Err(domain_err!("loss over an empty set"));
    }
    Ok(())
}

/// Mean squared error of the mean head.
pub fn mse_loss(preds: &[GaussianPrediction], ys: &[f64]) -> Result<f64> {
    check_lengths(preds, ys)?;
    let sum: f64 = preds.iter().zip(ys).map(|(p, y)| (y - p.mean) * (y - p.mean)).sum();
    Ok(sum / ys.len() as f64)
}

/// One RMSProp update: `s <- decay s + (1 - decay) g^2`,
/// `theta <- theta - lr g / sqrt(s + eps)`.
pub fn rmsprop_step(
    state: &mut OptimizerState,
    params: &mut NetworkParameters,
    grads: &NetworkParameters,
    cfg: &OptimizerConfig,
) -> Result<()> {
    if params.parameter_count() != grads.parameter_count()
        || params.parameter_count() != state.mean_square.parameter_count()
    {
        return Err(shape_err!(
            "rmsprop over {} parameters with {} gradients and {} state entries",
            params.parameter_count(),
            grads.parameter_count(),
            state.mean_square.parameter_count()
        ));
    }
    let keep = cfg.decay;
    let fresh = 1.0 - cfg.decay;
    for ((theta, g), s) in params
        .slices_mut()
        .zip(grads.slices())
        .zip(state.mean_square.slices_mut())
    {
        for ((t, g), s) in theta.iter_mut().zip(g).zip(s.iter_mut()) {
            *s = keep * *s + fresh * g * g;
            *t -= cfg.learning_rate * g / libm::sqrt(*s + cfg.epsilon);
        }
    }
    Ok(())
}

/// Mean per-pair loss over `rows` and its gradient, added into `grads`.
fn batch_into(
    params: &NetworkParameters,
    arch: &Architecture,
    dataset: &Dataset,
    rows: &[usize],
    loss: LossKind,
    scratch: &mut Scratch,
    grads: &mut NetworkParameters,
) -> f64 {
    let weight = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    for &r in rows {
        let y = dataset.output(r);
        let pred = forward_with(params, arch, dataset.input(r), scratch);
        let (value, upstream) = match loss {
            LossKind::HeteroscedasticNll => (nll_unchecked(pred, y), nll_grad_unchecked(pred, y)),
            LossKind::Mse => {
                let d = pred.mean - y;
                (d * d, (2.0 * d, 0.0))
            }
        };
        total += value;
        accumulate_backward(
            params,
            arch,
            scratch,
            (upstream.0 * weight, upstream.1 * weight),
            grads,
        );
    }
    total * weight
}

/// Mean loss over the given rows and its exact parameter gradient.
pub fn batch_gradient(
    params: &NetworkParameters,
    arch: &Architecture,
    dataset: &Dataset,
    rows: &[usize],
    loss: LossKind,
) -> Result<(f64, NetworkParameters)> {
    params.check(arch)?;
    check_dataset(dataset, arch)?;
    if rows.is_empty() {
        return Err(domain_err!("empty batch"));
    }
    if let Some(r) = rows.iter().find(|&&r| r >= dataset.len()) {
        return Err(shape_err!("row {r} out of range for {} rows", dataset.len()));
    }
    let mut grads = params.zeros_like();
    let value = batch_into(params, arch, dataset, rows, loss, &mut Scratch::new(arch), &mut grads);
    Ok((value, grads))
}

fn check_dataset(dataset: &Dataset, arch: &Architecture) -> Result<()> {
    if dataset.is_empty() {
        return Err(domain_err!("empty training set"));
    }
    if dataset.input_dim() != arch.input_dim {
        return Err(shape_err!(
            "dataset has {} input columns, network expects {}",
            dataset.input_dim(),
            arch.input_dim
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: NetworkParameters,
    /// Mean per-pair training loss of each epoch.
    pub history: Vec<f64>,
}

/// Trains a freshly initialized network. Initialization draws from `rng`;
/// epoch `e` shuffles with substream `e` of `train_cfg.shuffle_seed`.
pub fn fit(
    dataset: &Dataset,
    arch: &Architecture,
    train_cfg: &TrainConfig,
    opt_cfg: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<FitOutcome> {
    arch.validate()?;
    let params = init_parameters(arch, rng);
    fit_from(params, dataset, arch, train_cfg, opt_cfg)
}

/// Trains starting from `params`.
pub fn fit_from(
    mut params: NetworkParameters,
    dataset: &Dataset,
    arch: &Architecture,
    train_cfg: &TrainConfig,
    opt_cfg: &OptimizerConfig,
) -> Result<FitOutcome> {
    arch.validate()?;
    train_cfg.validate()?;
    opt_cfg.validate()?;
    params.check(arch)?;
    check_dataset(dataset, arch)?;

    let n = dataset.len();
    let shuffle_root = Rng::new(train_cfg.shuffle_seed);
    let mut state = OptimizerState::new(&params);
    let mut grads = params.zeros_like();
    let mut scratch = Scratch::new(arch);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut step = 0;

    for epoch in 0..train_cfg.epochs {
        order.sort_unstable();
        shuffle_root.substream(epoch as u64).shuffle(&mut order);
        let mut epoch_total = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            grads.fill_zero();
            let batch_loss = batch_into(
                &params,
                arch,
                dataset,
                batch,
                train_cfg.loss,
                &mut scratch,
                &mut grads,
            );
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch, step });
            }
            epoch_total += batch_loss * batch.len() as f64;
            rmsprop_step(&mut state, &mut params, &grads, opt_cfg)?;
            step += 1;
        }
        history.push(epoch_total / n as f64);
    }
    if params.check(arch).is_err() {
        return Err(Error::Diverged {
            epoch: train_cfg.epochs - 1,
            step: step.saturating_sub(1),
        });
    }
    Ok(FitOutcome { params, history })
}
