//! Datasets with replicated inputs and the synthetic benchmark generators.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{config_err, domain_err, shape_err};
use crate::math::{Matrix, Rng, Vector};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    Cubic,
    Ishigami,
    Csv,
}

/// Input rows, outputs, and a key per row naming the unique input it
/// replicates. Rows sharing a key have bit-identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    outputs: Vector,
    group_key: Vec<u64>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        inputs: Matrix,
        outputs: Vector,
        group_key: Vec<u64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = inputs.rows();
        if n == 0 || inputs.cols() == 0 {
            return Err(domain_err!("dataset needs at least one row and one input column"));
        }
        if outputs.len() != n || group_key.len() != n {
            return Err(shape_err!(
                "{n} input rows, {} outputs, {} group keys",
                outputs.len(),
                group_key.len()
            ));
        }
        if !outputs.is_finite() {
            return Err(domain_err!("dataset outputs must be finite"));
        }
        let mut first_row: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, key) in group_key.iter().enumerate() {
            let first = *first_row.entry(*key).or_insert(i);
            if !same_bits(inputs.row(first), inputs.row(i)) {
                return Err(domain_err!(
                    "rows {first} and {i} share group key {key} but have different inputs"
                ));
            }
        }
        Ok(Dataset {
            inputs,
            outputs,
            group_key,
            provenance,
        })
    }

    /// Groups rows by exact (bitwise) equality of their input vectors. Keys
    /// are assigned 0, 1, 2, ... in order of first appearance.
    pub fn from_exact_inputs(inputs: Matrix, outputs: Vector, provenance: Provenance) -> Result<Self> {
        let mut keys: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        let group_key = (0..inputs.rows())
            .map(|r| {
                let bits: Vec<u64> = inputs.row(r).iter().map(|v| v.to_bits()).collect();
                let next = keys.len() as u64;
                *keys.entry(bits).or_insert(next)
            })
            .collect();
        Dataset::new(inputs, outputs, group_key, provenance)
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn outputs(&self) -> &Vector {
        &self.outputs
    }

    pub fn group_keys(&self) -> &[u64] {
        &self.group_key
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn input(&self, row: usize) -> &[f64] {
        self.inputs.row(row)
    }

    pub fn output(&self, row: usize) -> f64 {
        self.outputs[row]
    }

    /// Distinct group keys in order of first appearance.
    pub fn unique_keys(&self) -> Vec<u64> {
        let mut seen = BTreeMap::new();
        let mut keys = Vec::new();
        for &k in &self.group_key {
            if seen.insert(k, ()).is_none() {
                keys.push(k);
            }
        }
        keys
    }

    /// Rows whose key satisfies `keep`, in original order.
    pub fn filter_groups(&self, mut keep: impl FnMut(u64) -> bool) -> Result<Dataset> {
        let rows: Vec<usize> = (0..self.len()).filter(|&r| keep(self.group_key[r])).collect();
        let mut data = Vec::with_capacity(rows.len() * self.input_dim());
        for &r in &rows {
            data.extend_from_slice(self.input(r));
        }
        Dataset::new(
            Matrix::new(rows.len(), self.input_dim(), data)?,
            rows.iter().map(|&r| self.outputs[r]).collect(),
            rows.iter().map(|&r| self.group_key[r]).collect(),
            self.provenance,
        )
    }

    /// Same rows with inputs replaced by `f(input)`; keys are kept.
    pub fn map_inputs(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Dataset> {
        let mut data = self.inputs.as_slice().to_vec();
        let d = self.input_dim();
        for r in 0..self.len() {
            let src = self.input(r);
            f(src, &mut data[r * d..(r + 1) * d]);
        }
        Dataset::new(
            Matrix::new(self.len(), d, data)?,
            self.outputs.clone(),
            self.group_key.clone(),
            self.provenance,
        )
    }
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Splits at the group level: every replicate of a unique input lands on the
/// same side. The test side gets `max(1, floor(groups * test_fraction))`
/// groups. Returns `(train, test)`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(domain_err!("test_fraction must lie in (0, 1), got {test_fraction}"));
    }
    let mut keys = dataset.unique_keys();
    if keys.len() < 2 {
        return Err(domain_err!("need at least 2 groups to split, found {}", keys.len()));
    }
    let n_test = test_group_count(keys.len(), test_fraction);
    Rng::new(seed).shuffle(&mut keys);
    let test_keys: BTreeMap<u64, ()> = keys[..n_test].iter().map(|k| (*k, ())).collect();
    let train = dataset.filter_groups(|k| !test_keys.contains_key(&k))?;
    let test = dataset.filter_groups(|k| test_keys.contains_key(&k))?;
    Ok((train, test))
}

pub fn test_group_count(groups: usize, test_fraction: f64) -> usize {
    // The small offset keeps products like 0.29 * 100 from flooring to 28.
    let raw = libm::floor(groups as f64 * test_fraction + 1e-9) as usize;
    raw.clamp(1, groups - 1)
}

/// `y = x^3 + 0.1 (2 + x) eps` on `x ~ U[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubicSpec {
    pub n_unique: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl CubicSpec {
    pub const X_RANGE: (f64, f64) = (-1.0, 1.0);
    pub const NOISE_SCALE: f64 = 0.1;

    /// 100 inputs x 10 replicates.
    pub fn train_protocol(seed: u64) -> Self {
        CubicSpec { n_unique: 100, replicates: 10, seed }
    }

    /// 50 inputs x 10 replicates.
    pub fn test_protocol(seed: u64) -> Self {
        CubicSpec { n_unique: 50, replicates: 10, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_unique == 0 || self.replicates == 0 {
            return Err(config_err!("cubic n_unique and replicates must be at least 1"));
        }
        Ok(())
    }

    pub fn mean(x: f64) -> f64 {
        x * x * x
    }

    pub fn noise_std(x: f64) -> f64 {
        Self::NOISE_SCALE * (2.0 + x)
    }
}

pub fn gen_cubic(spec: &CubicSpec) -> Result<Dataset> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let mut x_rng = root.substream(0);
    let mut noise_rng = root.substream(1);
    let (lo, hi) = CubicSpec::X_RANGE;
    let xs: Vec<f64> = (0..spec.n_unique).map(|_| x_rng.uniform_range(lo, hi)).collect();
    replicate(&xs, 1, spec.replicates, Provenance::Cubic, |x| {
        let x = x[0];
        CubicSpec::mean(x) + CubicSpec::noise_std(x) * noise_rng.standard_normal()
    })
}

/// Ishigami function with additive `N(0, noise_factor * |f(x)|)` noise on the
/// cube `[-pi, pi]^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IshigamiSpec {
    pub a: f64,
    pub b: f64,
    pub n_unique: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl IshigamiSpec {
    pub const INPUT_RANGE: (f64, f64) = (-PI, PI);
    pub const NOISE_FACTOR: f64 = 0.2;
    pub const DEFAULT_A: f64 = 7.0;
    pub const DEFAULT_B: f64 = 0.1;

    /// 300 inputs x 10 replicates.
    pub fn train_protocol(seed: u64) -> Self {
        IshigamiSpec {
            a: Self::DEFAULT_A,
            b: Self::DEFAULT_B,
            n_unique: 300,
            replicates: 10,
            seed,
        }
    }

    /// 100 inputs x 10 replicates.
    pub fn test_protocol(seed: u64) -> Self {
        IshigamiSpec {
            n_unique: 100,
            ..Self::train_protocol(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_unique == 0 || self.replicates == 0 {
            return Err(config_err!("ishigami n_unique and replicates must be at least 1"));
        }
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(config_err!("ishigami a and b must be finite"));
        }
        Ok(())
    }

    pub fn noise_variance(&self, x: &[f64]) -> f64 {
        Self::NOISE_FACTOR * libm::fabs(ishigami(x, self.a, self.b))
    }
}

/// `sin(x1) + a sin^2(x2) + b x3^4 sin(x1)`. Uses the first three entries of `x`.
pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    let s1 = libm::sin(x[0]);
    let s2 = libm::sin(x[1]);
    let x3_2 = x[2] * x[2];
    s1 + a * s2 * s2 + b * x3_2 * x3_2 * s1
}

pub fn gen_ishigami(spec: &IshigamiSpec) -> Result<Dataset> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let mut x_rng = root.substream(0);
    let mut noise_rng = root.substream(1);
    let (lo, hi) = IshigamiSpec::INPUT_RANGE;
    let xs: Vec<f64> = (0..spec.n_unique * 3).map(|_| x_rng.uniform_range(lo, hi)).collect();
    replicate(&xs, 3, spec.replicates, Provenance::Ishigami, |x| {
        let f = ishigami(x, spec.a, spec.b);
        let var = IshigamiSpec::NOISE_FACTOR * libm::fabs(f);
        // A zero variance yields exact replicates; downstream flags the group.
        f + libm::sqrt(var) * noise_rng.standard_normal()
    })
}

/// Expands unique inputs (row-major, `dim` columns) into `replicates` rows
/// each, group-major, with outputs drawn by `draw`.
fn replicate(
    unique: &[f64],
    dim: usize,
    replicates: usize,
    provenance: Provenance,
    mut draw: impl FnMut(&[f64]) -> f64,
) -> Result<Dataset> {
    let n_unique = unique.len() / dim;
    let n = n_unique * replicates;
    let mut data = Vec::with_capacity(n * dim);
    let mut outputs = Vec::with_capacity(n);
    let mut keys = Vec::with_capacity(n);
    for (g, x) in unique.chunks_exact(dim).enumerate() {
        for _ in 0..replicates {
            data.extend_from_slice(x);
            outputs.push(draw(x));
            keys.push(g as u64);
        }
    }
    Dataset::new(Matrix::new(n, dim, data)?, Vector::new(outputs), keys, provenance)
}

/// Per-column z-score transform fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and population standard deviations; constant columns get
    /// scale 1.
    pub fn fit(dataset: &Dataset) -> Self {
        let n = dataset.len() as f64;
        let d = dataset.input_dim();
        let mut mean = alloc::vec![0.0; d];
        for r in 0..dataset.len() {
            for (m, v) in mean.iter_mut().zip(dataset.input(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; d];
        for r in 0..dataset.len() {
            for ((s, v), m) in var.iter_mut().zip(dataset.input(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_point(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.input_dim() != self.mean.len() {
            return Err(shape_err!(
                "standardizer for {} columns applied to {}",
                self.mean.len(),
                dataset.input_dim()
            ));
        }
        dataset.map_inputs(|x, out| self.transform_point(x, out))
    }
}
