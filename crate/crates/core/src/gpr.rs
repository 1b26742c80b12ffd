//! Gaussian process regression with a squared-exponential kernel, zero prior
//! mean and homoscedastic observation noise.
//!
//! Training rows with bit-identical inputs are collapsed before factorizing:
//! `c` replicates with mean `ybar` under noise `s2` carry exactly the same
//! information about the latent function as one observation `ybar` with
//! noise `s2 / c`. Posterior moments are unchanged and the log marginal
//! likelihood differs by a term that only involves within-group scatter, which
//! is added back. Without replicates this is the textbook dense computation.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bench::Dataset;
use crate::error::{config_err, domain_err, shape_err};
use crate::math::{cholesky, forward_substitute, solve_spd, Matrix, Vector};
use crate::modelsel::{score_predictor, EmpiricalStats, RunStatus};
use crate::nn::{GaussianPrediction, Predictor};
use crate::{Error, Result};

/// Always added to the diagonal of `K + noise I`.
pub const JITTER: f64 = 1e-10;
/// Candidate length scales examined when tuning.
pub const TUNING_GRID_POINTS: usize = 50;
pub const DEFAULT_LENGTH_SCALE_LOWER: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GprConfig {
    pub length_scale: f64,
    pub length_scale_bounds: (f64, f64),
    pub noise_variance: f64,
    /// Pick the length scale maximizing the log marginal likelihood over a
    /// log-spaced grid within `length_scale_bounds`.
    pub tune_length_scale: bool,
}

impl Default for GprConfig {
    fn default() -> Self {
        GprConfig {
            length_scale: 1.0,
            length_scale_bounds: (DEFAULT_LENGTH_SCALE_LOWER, 1e5),
            noise_variance: 1e-10,
            tune_length_scale: true,
        }
    }
}

impl GprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(config_err!("length_scale must be positive"));
        }
        let (lo, hi) = self.length_scale_bounds;
        if !(lo > 0.0 && lo <= hi) {
            return Err(config_err!("length_scale_bounds must satisfy 0 < lower <= upper"));
        }
        if self.tune_length_scale && !hi.is_finite() {
            return Err(config_err!("length_scale_bounds must be finite when tuning"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(config_err!("noise_variance must be nonnegative"));
        }
        Ok(())
    }

    /// Noise actually placed on the diagonal.
    pub fn effective_noise(&self) -> f64 {
        self.noise_variance + JITTER
    }
}

/// `exp(-|x - x'|^2 / (2 l^2))`.
pub fn kernel(x: &[f64], x2: &[f64], length_scale: f64) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(shape_err!("kernel inputs of lengths {} and {}", x.len(), x2.len()));
    }
    if !(length_scale > 0.0) {
        return Err(domain_err!("length scale must be positive"));
    }
    Ok(kernel_unchecked(x, x2, length_scale))
}

#[inline]
fn kernel_unchecked(x: &[f64], x2: &[f64], length_scale: f64) -> f64 {
    let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::exp(-d2 / (2.0 * length_scale * length_scale))
}

/// Training data with replicated inputs collapsed.
#[derive(Debug, Clone, PartialEq)]
struct Collapsed {
    inputs: Matrix,
    counts: Vec<usize>,
    means: Vec<f64>,
    /// Sum of squared deviations from the group mean, per group.
    scatter: Vec<f64>,
    n_rows: usize,
}

fn collapse(train: &Dataset) -> Result<Collapsed> {
    if train.is_empty() {
        return Err(domain_err!("GPR needs at least one training row"));
    }
    let d = train.input_dim();
    let mut slots: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut members: Vec<Vec<f64>> = Vec::new();
    for r in 0..train.len() {
        let x = train.input(r);
        let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        let slot = *slots.entry(bits).or_insert_with(|| {
            inputs.extend_from_slice(x);
            members.push(Vec::new());
            members.len() - 1
        });
        members[slot].push(train.output(r));
    }
    let means: Vec<f64> = members.iter().map(|ys| ys.iter().sum::<f64>() / ys.len() as f64).collect();
    let scatter = members
        .iter()
        .zip(&means)
        .map(|(ys, m)| ys.iter().map(|y| (y - m) * (y - m)).sum())
        .collect();
    Ok(Collapsed {
        inputs: Matrix::new(members.len(), d, inputs)?,
        counts: members.iter().map(Vec::len).collect(),
        means,
        scatter,
        n_rows: train.len(),
    })
}

/// `K + diag(noise / count)` over the collapsed inputs.
fn covariance(data: &Collapsed, length_scale: f64, noise: f64) -> Matrix {
    let m = data.inputs.rows();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            let v = kernel_unchecked(data.inputs.row(i), data.inputs.row(j), length_scale);
            k.set(i, j, v);
            k.set(j, i, v);
        }
        k.set(i, i, 1.0 + noise / data.counts[i] as f64);
    }
    k
}

struct Factorized {
    factor: Matrix,
    weights: Vector,
    log_marginal_likelihood: f64,
}

fn factorize(data: &Collapsed, length_scale: f64, noise: f64) -> Result<Factorized> {
    let cov = covariance(data, length_scale, noise);
    let factor = cholesky(&cov).map_err(|e| {
        Error::Model(alloc::format!(
            "cannot factorize K + noise I at length scale {length_scale:e} ({e}); try a larger noise variance"
        ))
    })?;
    let weights = solve_spd(&factor, &data.means)?;
    let m = data.means.len() as f64;
    let log_det_half: f64 = (0..factor.rows()).map(|i| libm::log(factor.get(i, i))).sum();
    let fit_term = -0.5 * crate::math::dot(&data.means, &weights) - log_det_half - 0.5 * m * libm::log(2.0 * PI);
    let within: f64 = data
        .counts
        .iter()
        .zip(&data.scatter)
        .map(|(&c, &ss)| {
            let c = c as f64;
            -0.5 * (c - 1.0) * libm::log(2.0 * PI * noise) - 0.5 * libm::log(c) - ss / (2.0 * noise)
        })
        .sum();
    Ok(Factorized {
        factor,
        weights,
        log_marginal_likelihood: fit_term + within,
    })
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 || lo == hi {
        return alloc::vec![hi];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                libm::exp(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GprModel {
    /// Configuration with `length_scale` set to the value actually used.
    pub config: GprConfig,
    data: Collapsed,
    factor: Matrix,
    weights: Vector,
    log_marginal_likelihood: f64,
}

impl GprModel {
    pub fn fit(train: &Dataset, config: &GprConfig) -> Result<GprModel> {
        config.validate()?;
        let data = collapse(train)?;
        let noise = config.effective_noise();
        let mut chosen = *config;
        if config.tune_length_scale {
            let (lo, hi) = config.length_scale_bounds;
            let mut best: Option<(f64, f64)> = None;
            let mut last_err = None;
            for ell in log_grid(lo, hi, TUNING_GRID_POINTS) {
                match factorize(&data, ell, noise) {
                    Ok(f) => {
                        if best.is_none_or(|(_, lml)| f.log_marginal_likelihood > lml) {
                            best = Some((ell, f.log_marginal_likelihood));
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            match best {
                Some((ell, _)) => chosen.length_scale = ell,
                None => return Err(last_err.unwrap_or_else(|| Error::Model("empty length-scale grid".to_string()))),
            }
        }
        let f = factorize(&data, chosen.length_scale, noise)?;
        Ok(GprModel {
            config: chosen,
            data,
            factor: f.factor,
            weights: f.weights,
            log_marginal_likelihood: f.log_marginal_likelihood,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.data.inputs.cols()
    }

    pub fn length_scale(&self) -> f64 {
        self.config.length_scale
    }

    /// Exact Gaussian log marginal likelihood of the training outputs.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Number of distinct training inputs.
    pub fn unique_inputs(&self) -> usize {
        self.data.inputs.rows()
    }

    pub fn training_rows(&self) -> usize {
        self.data.n_rows
    }

    /// `(K + noise I)^-1 y` over the distinct training inputs.
    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    /// Cholesky factor of `K + diag(noise / count)` over the distinct inputs.
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    /// Latent predictive mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
        if x.len() != self.input_dim() {
            return Err(shape_err!(
                "test input of length {} for a model over {} inputs",
                x.len(),
                self.input_dim()
            ));
        }
        let ell = self.config.length_scale;
        let mut k: Vec<f64> = (0..self.data.inputs.rows())
            .map(|i| kernel_unchecked(self.data.inputs.row(i), x, ell))
            .collect();
        let mean = crate::math::dot(&k, &self.weights);
        forward_substitute(&self.factor, &mut k)?;
        let mut variance = 1.0 - crate::math::dot(&k, &k);
        if variance < 0.0 {
            log::warn!("clamping negative GPR predictive variance {variance:e} to 0");
            variance = 0.0;
        }
        Ok(GaussianPrediction { mean, variance })
    }
}

impl Predictor for GprModel {
    fn input_dim(&self) -> usize {
        GprModel::input_dim(self)
    }

    fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
        GprModel::predict(self, x)
    }
}

/// One cell of the noise / length-scale-bound grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningRow {
    pub length_scale_bound: f64,
    pub noise_variance: f64,
    /// Length scale selected within the bound.
    pub length_scale: Option<f64>,
    pub kl: Option<f64>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GprTuning {
    /// Bound-major order.
    pub rows: Vec<TuningRow>,
    pub best: Option<usize>,
}

impl GprTuning {
    pub fn best_row(&self) -> Option<&TuningRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn best_config(&self) -> Option<GprConfig> {
        self.best_row().map(|r| tuning_config(r.length_scale_bound, r.noise_variance))
    }
}

/// Tuned length scale within `[DEFAULT_LENGTH_SCALE_LOWER, bound]`.
pub fn tuning_config(length_scale_bound: f64, noise_variance: f64) -> GprConfig {
    let lower = DEFAULT_LENGTH_SCALE_LOWER.min(length_scale_bound);
    GprConfig {
        length_scale: length_scale_bound,
        length_scale_bounds: (lower, length_scale_bound),
        noise_variance,
        tune_length_scale: true,
    }
}

/// Fits and scores one tuning cell.
pub fn tune_cell(
    train: &Dataset,
    test: &EmpiricalStats,
    length_scale_bound: f64,
    noise_variance: f64,
) -> TuningRow {
    let cfg = tuning_config(length_scale_bound, noise_variance);
    let mut row = TuningRow {
        length_scale_bound,
        noise_variance,
        length_scale: None,
        kl: None,
        status: RunStatus::Invalid,
    };
    let Ok(model) = GprModel::fit(train, &cfg) else {
        return row;
    };
    row.length_scale = Some(model.length_scale());
    if let Ok(kl) = score_predictor(&model, test) {
        if kl.is_finite() {
            row.kl = Some(kl);
            row.status = RunStatus::Ok;
        }
    }
    row
}

/// Index of the lowest-KL row; the earliest wins ties.
pub fn best_tuning_row(rows: &[TuningRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.kl.map(|kl| (i, kl)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Grid search over length-scale upper bounds and noise variances, scored by
/// mean KL against the test groups.
pub fn tune_noise(
    train: &Dataset,
    test: &EmpiricalStats,
    length_scale_bounds: &[f64],
    noise_grid: &[f64],
) -> Result<GprTuning> {
    check_tuning_grid(length_scale_bounds, noise_grid)?;
    let rows: Vec<TuningRow> = length_scale_bounds
        .iter()
        .flat_map(|&b| noise_grid.iter().map(move |&s| (b, s)))
        .map(|(b, s)| tune_cell(train, test, b, s))
        .collect();
    let best = best_tuning_row(&rows);
    Ok(GprTuning { rows, best })
}

pub fn check_tuning_grid(length_scale_bounds: &[f64], noise_grid: &[f64]) -> Result<()> {
    if length_scale_bounds.is_empty() || noise_grid.is_empty() {
        return Err(config_err!("GPR tuning grids must be nonempty"));
    }
    if length_scale_bounds.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(config_err!("length-scale bounds must be positive and finite"));
    }
    if noise_grid.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(config_err!("noise variances must be nonnegative and finite"));
    }
    Ok(())
}
