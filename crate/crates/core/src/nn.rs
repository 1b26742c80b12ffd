//! Feed-forward network with ELU hidden layers and a Gaussian output head.
//!
//! The final layer has two outputs. The first is the predicted mean (identity
//! activation); the second is mapped through `softplus(z) + variance_floor` to
//! give a strictly positive predicted variance. All hidden layers share the
//! same width.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, shape_err};
use crate::math::{dot, Matrix, Rng, Vector};
use crate::Result;

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Elu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub input_dim: usize,
    /// Number of hidden layers.
    pub depth: usize,
    /// Units per hidden layer.
    pub width: usize,
    pub hidden_activation: Activation,
    pub variance_floor: f64,
}

impl Architecture {
    pub fn new(input_dim: usize, depth: usize, width: usize) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            depth,
            width,
            hidden_activation: Activation::Elu,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(config_err!("input_dim must be at least 1"));
        }
        if self.depth == 0 {
            return Err(config_err!("depth must be at least 1"));
        }
        if self.width == 0 {
            return Err(config_err!("width must be at least 1"));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(config_err!("variance_floor must be positive and finite"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.depth + 1);
        shapes.push((self.input_dim, self.width));
        for _ in 1..self.depth {
            shapes.push((self.width, self.width));
        }
        shapes.push((self.width, 2));
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

/// Weights and biases of every layer. Weight matrices are `fan_out x fan_in`.
///
/// Gradients and optimizer state use the same layout.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkParameters {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
}

impl NetworkParameters {
    pub fn zeros(arch: &Architecture) -> Self {
        let shapes = arch.layer_shapes();
        NetworkParameters {
            weights: shapes.iter().map(|&(i, o)| Matrix::zeros(o, i)).collect(),
            biases: shapes.iter().map(|&(_, o)| Vector::zeros(o)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParameters {
            weights: self.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: self.biases.iter().map(|b| Vector::zeros(b.len())).collect(),
        }
    }

    /// Checks that every shape matches `arch` and every entry is finite.
    pub fn check(&self, arch: &Architecture) -> Result<()> {
        let shapes = arch.layer_shapes();
        if self.weights.len() != shapes.len() || self.biases.len() != shapes.len() {
            return Err(shape_err!(
                "expected {} layers, got {} weight matrices and {} bias vectors",
                shapes.len(),
                self.weights.len(),
                self.biases.len()
            ));
        }
        for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let w = &self.weights[l];
            if w.rows() != fan_out || w.cols() != fan_in || self.biases[l].len() != fan_out {
                return Err(shape_err!(
                    "layer {l}: expected {fan_out}x{fan_in} weights and {fan_out} biases, got {}x{} and {}",
                    w.rows(),
                    w.cols(),
                    self.biases[l].len()
                ));
            }
        }
        if !self.slices().all(|s| s.iter().all(|v| v.is_finite())) {
            return Err(crate::Error::Domain("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().map(<[f64]>::len).sum()
    }

    /// Every parameter block: layer weights then layer bias, layer by layer.
    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), &mut b[..]])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().flatten().copied().collect()
    }

    /// Overwrites all parameters from a flat buffer in [`Self::slices`] order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(shape_err!(
                "{} values for {} parameters",
                flat.len(),
                self.parameter_count()
            ));
        }
        let mut offset = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// `self += other`, blockwise.
    pub fn add_assign(&mut self, other: &NetworkParameters) {
        for (a, b) in self.slices_mut().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            for x in s {
                *x *= factor;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        for s in self.slices_mut() {
            s.fill(0.0);
        }
    }
}

/// Predicted Gaussian for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrediction {
    pub fn new(mean: f64, variance: f64) -> Self {
        GaussianPrediction { mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

/// Anything that maps an input vector to a Gaussian.
pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<GaussianPrediction>;
}

#[inline]
pub fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        libm::expm1(z)
    }
}

#[inline]
fn elu_slope(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        libm::exp(z)
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Derivative of [`softplus`].
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Reusable activation buffers for one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Scratch {
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
    /// `acts[0]` is the input; `acts[l]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    raw: [f64; 2],
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Scratch {
    pub fn new(arch: &Architecture) -> Self {
        let mut acts = vec![vec![0.0; arch.input_dim]];
        acts.extend((0..arch.depth).map(|_| vec![0.0; arch.width]));
        Scratch {
            pre: (0..arch.depth).map(|_| vec![0.0; arch.width]).collect(),
            acts,
            raw: [0.0; 2],
            delta: Vec::with_capacity(arch.width.max(2)),
            delta_prev: Vec::with_capacity(arch.width.max(2)),
        }
    }
}

/// Forward pass without shape checks. `scratch` keeps the activations that
/// [`accumulate_backward`] needs.
pub(crate) fn forward_with(
    params: &NetworkParameters,
    arch: &Architecture,
    x: &[f64],
    scratch: &mut Scratch,
) -> GaussianPrediction {
    scratch.acts[0].copy_from_slice(x);
    for l in 0..arch.depth {
        let w = &params.weights[l];
        let b = &params.biases[l];
        let (prev, rest) = scratch.acts.split_at_mut(l + 1);
        let input = &prev[l];
        let out = &mut rest[0];
        let pre = &mut scratch.pre[l];
        for r in 0..w.rows() {
            let z = dot(w.row(r), input) + b[r];
            pre[r] = z;
            out[r] = elu(z);
        }
    }
    let w = &params.weights[arch.depth];
    let b = &params.biases[arch.depth];
    let last = &scratch.acts[arch.depth];
    scratch.raw = [dot(w.row(0), last) + b[0], dot(w.row(1), last) + b[1]];
    GaussianPrediction {
        mean: scratch.raw[0],
        variance: softplus(scratch.raw[1]) + arch.variance_floor,
    }
}

/// Adds the gradient of `upstream.0 * mean + upstream.1 * variance` with
/// respect to every parameter into `grads`. Must follow [`forward_with`] on
/// the same `scratch`.
pub(crate) fn accumulate_backward(
    params: &NetworkParameters,
    arch: &Architecture,
    scratch: &mut Scratch,
    upstream: (f64, f64),
    grads: &mut NetworkParameters,
) {
    let Scratch {
        pre,
        acts,
        raw,
        delta,
        delta_prev,
    } = scratch;
    delta.clear();
    delta.push(upstream.0);
    delta.push(upstream.1 * sigmoid(raw[1]));

    for l in (0..=arch.depth).rev() {
        let input = &acts[l];
        let gw = grads.weights[l].as_mut_slice();
        let fan_in = input.len();
        for (r, d) in delta.iter().enumerate() {
            let row = &mut gw[r * fan_in..(r + 1) * fan_in];
            for (g, a) in row.iter_mut().zip(input) {
                *g += d * a;
            }
            grads.biases[l][r] += d;
        }
        if l == 0 {
            break;
        }
        let w = &params.weights[l];
        delta_prev.clear();
        delta_prev.resize(fan_in, 0.0);
        for (r, d) in delta.iter().enumerate() {
            for (p, wv) in delta_prev.iter_mut().zip(w.row(r)) {
                *p += d * wv;
            }
        }
        for (p, z) in delta_prev.iter_mut().zip(&pre[l - 1]) {
            *p *= elu_slope(*z);
        }
        core::mem::swap(delta, delta_prev);
    }
}

fn check_input(arch: &Architecture, x: &[f64]) -> Result<()> {
    if x.len() != arch.input_dim {
        return Err(shape_err!(
            "input of length {} for a network with input_dim {}",
            x.len(),
            arch.input_dim
        ));
    }
    Ok(())
}

pub fn forward(
    params: &NetworkParameters,
    arch: &Architecture,
    x: &[f64],
) -> Result<GaussianPrediction> {
    params.check(arch)?;
    check_input(arch, x)?;
    Ok(forward_with(params, arch, x, &mut Scratch::new(arch)))
}

/// Forward pass over every row of `inputs`.
pub fn forward_batch(
    params: &NetworkParameters,
    arch: &Architecture,
    inputs: &Matrix,
) -> Result<Vec<GaussianPrediction>> {
    params.check(arch)?;
    if inputs.cols() != arch.input_dim {
        return Err(shape_err!(
            "inputs have {} columns, network expects {}",
            inputs.cols(),
            arch.input_dim
        ));
    }
    let mut scratch = Scratch::new(arch);
    Ok((0..inputs.rows())
        .map(|r| forward_with(params, arch, inputs.row(r), &mut scratch))
        .collect())
}

/// Reverse-mode gradient of `upstream.0 * mean + upstream.1 * variance` at `x`.
pub fn backward(
    params: &NetworkParameters,
    arch: &Architecture,
    x: &[f64],
    upstream: (f64, f64),
) -> Result<NetworkParameters> {
    params.check(arch)?;
    check_input(arch, x)?;
    if !(upstream.0.is_finite() && upstream.1.is_finite()) {
        return Err(crate::Error::Domain("upstream gradient is not finite".into()));
    }
    let mut scratch = Scratch::new(arch);
    let mut grads = NetworkParameters::zeros(arch);
    forward_with(params, arch, x, &mut scratch);
    accumulate_backward(params, arch, &mut scratch, upstream, &mut grads);
    Ok(grads)
}

/// Glorot-uniform weights, zero biases.
pub fn init_parameters(arch: &Architecture, rng: &mut Rng) -> NetworkParameters {
    let mut params = NetworkParameters::zeros(arch);
    for w in &mut params.weights {
        let bound = libm::sqrt(6.0 / (w.rows() + w.cols()) as f64);
        for v in w.as_mut_slice() {
            *v = rng.uniform_range(-bound, bound);
        }
    }
    params
}

/// A trained network together with its architecture.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pnn {
    pub arch: Architecture,
    pub params: NetworkParameters,
}

impl Pnn {
    pub fn new(arch: Architecture, params: NetworkParameters) -> Result<Self> {
        arch.validate()?;
        params.check(&arch)?;
        Ok(Pnn { arch, params })
    }
}

impl Predictor for Pnn {
    fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
        check_input(&self.arch, x)?;
        Ok(forward_with(&self.params, &self.arch, x, &mut Scratch::new(&self.arch)))
    }
}
