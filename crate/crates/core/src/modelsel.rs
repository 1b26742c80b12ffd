//! Architecture selection by KL divergence.
//!
//! Test outputs are grouped by unique input. Each group's sample mean and
//! variance define an empirical Gaussian, and a model is scored by the mean of
//! `KL(empirical || predicted)` over groups. Groups with fewer than two
//! replicates or zero spread are excluded from the score.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bench::Dataset;
use crate::error::{config_err, domain_err};
use crate::math::Rng;
use crate::nn::{Architecture, GaussianPrediction, NetworkParameters, Pnn, Predictor};
use crate::train::{fit, OptimizerConfig, TrainConfig};
use crate::Result;

/// Moments and range of the replicated outputs at one unique input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupStats {
    pub key: u64,
    pub input: Vec<f64>,
    pub mean: f64,
    /// Unbiased (n - 1) sample variance; 0 for a single replicate.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GroupStats {
    /// Unusable for KL: fewer than two replicates or zero spread.
    pub fn is_degenerate(&self) -> bool {
        self.count < 2 || !(self.variance > 0.0)
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalStats {
    /// One row per unique input, in order of first appearance.
    pub groups: Vec<GroupStats>,
}

impl EmpiricalStats {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn valid_groups(&self) -> impl Iterator<Item = &GroupStats> {
        self.groups.iter().filter(|g| !g.is_degenerate())
    }

    pub fn degenerate_count(&self) -> usize {
        self.groups.iter().filter(|g| g.is_degenerate()).count()
    }

    /// Predictions for every group, in group order.
    pub fn predict_all<P: Predictor + ?Sized>(&self, model: &P) -> Result<Vec<GaussianPrediction>> {
        self.groups.iter().map(|g| model.predict(&g.input)).collect()
    }
}

pub fn group_replicates(dataset: &Dataset) -> Result<EmpiricalStats> {
    if dataset.is_empty() {
        return Err(domain_err!("cannot group an empty dataset"));
    }
    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    let mut members: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in 0..dataset.len() {
        let key = dataset.group_keys()[r];
        let slot = *index.entry(key).or_insert_with(|| {
            members.push((r, Vec::new()));
            members.len() - 1
        });
        members[slot].1.push(dataset.output(r));
    }
    let groups = members
        .into_iter()
        .map(|(first, ys)| {
            let n = ys.len();
            let mean = ys.iter().sum::<f64>() / n as f64;
            let variance = if n > 1 {
                ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
            let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            GroupStats {
                key: dataset.group_keys()[first],
                input: dataset.input(first).to_vec(),
                // Rounding can push the mean of equal values a hair outside.
                mean: mean.clamp(min, max),
                variance,
                min,
                max,
                count: n,
            }
        })
        .collect();
    Ok(EmpiricalStats { groups })
}

/// `KL(N(emp) || N(pred))` for `(mean, variance)` pairs.
pub fn kl_gaussian(emp: (f64, f64), pred: (f64, f64)) -> Result<f64> {
    let (m0, v0) = emp;
    let (m1, v1) = pred;
    if !(v0 > 0.0 && v1 > 0.0) {
        return Err(domain_err!("KL needs positive variances, got {v0} and {v1}"));
    }
    let d = m0 - m1;
    Ok(0.5 * libm::log(v1 / v0) + (v0 + d * d) / (2.0 * v1) - 0.5)
}

/// Mean KL over non-degenerate groups; `preds[i]` belongs to `emp.groups[i]`.
pub fn score_predictions(preds: &[GaussianPrediction], emp: &EmpiricalStats) -> Result<f64> {
    if preds.len() != emp.len() {
        return Err(crate::Error::Shape(alloc::format!(
            "{} predictions for {} groups",
            preds.len(),
            emp.len()
        )));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for (p, g) in preds.iter().zip(&emp.groups) {
        if g.is_degenerate() {
            continue;
        }
        total += kl_gaussian((g.mean, g.variance), (p.mean, p.variance))?;
        used += 1;
    }
    if used == 0 {
        return Err(domain_err!("every group is degenerate; KL is undefined"));
    }
    Ok(total / used as f64)
}

pub fn score_predictor<P: Predictor + ?Sized>(model: &P, emp: &EmpiricalStats) -> Result<f64> {
    if emp.valid_groups().next().is_none() {
        return Err(domain_err!("every group is degenerate; KL is undefined"));
    }
    let preds = emp.predict_all(model)?;
    score_predictions(&preds, emp)
}

pub fn score_model(
    params: &NetworkParameters,
    arch: &Architecture,
    emp: &EmpiricalStats,
) -> Result<f64> {
    score_predictor(&Pnn::new(*arch, params.clone())?, emp)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub seeds_per_cell: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.widths.is_empty() {
            return Err(config_err!("grid depths and widths must be nonempty"));
        }
        if self.depths.iter().chain(&self.widths).any(|v| *v == 0) {
            return Err(config_err!("grid depths and widths must be at least 1"));
        }
        if self.seeds_per_cell == 0 {
            return Err(config_err!("seeds_per_cell must be at least 1"));
        }
        Ok(())
    }

    /// Every (depth, width, seed) run, depth-major.
    pub fn runs(&self) -> Vec<GridRun> {
        let mut runs = Vec::new();
        for &depth in &self.depths {
            for &width in &self.widths {
                for seed in 0..self.seeds_per_cell {
                    runs.push(GridRun {
                        index: runs.len(),
                        depth,
                        width,
                        seed: seed as u64,
                    });
                }
            }
        }
        runs
    }
}

/// One training job of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridRun {
    pub index: usize,
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RunStatus {
    Ok,
    /// Training hit a non-finite loss.
    Diverged,
    /// Training or scoring failed for another reason.
    Invalid,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
            RunStatus::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: GridRun,
    /// Mean KL; `None` unless `status` is `Ok`.
    pub kl: Option<f64>,
    pub status: RunStatus,
    pub message: Option<String>,
    /// Wall time, when the executor measured it.
    pub seconds: Option<f64>,
    pub params: Option<NetworkParameters>,
}

/// Aggregate over the seeds of one (depth, width) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub depth: usize,
    pub width: usize,
    pub parameter_count: usize,
    pub valid_runs: usize,
    pub mean_kl: Option<f64>,
    pub median_kl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub input_dim: usize,
    /// Ordered by run index.
    pub runs: Vec<RunOutcome>,
    pub cells: Vec<CellSummary>,
    /// Index into `cells` of the lowest mean KL, if any run succeeded.
    pub best_cell: Option<usize>,
}

impl GridResult {
    pub fn best(&self) -> Option<&CellSummary> {
        self.best_cell.map(|i| &self.cells[i])
    }

    /// Lowest-KL successful run of the best cell.
    pub fn best_run(&self) -> Option<&RunOutcome> {
        let best = self.best()?;
        self.runs
            .iter()
            .filter(|r| r.run.depth == best.depth && r.run.width == best.width)
            .filter(|r| r.kl.is_some())
            .min_by(|a, b| a.kl.unwrap().total_cmp(&b.kl.unwrap()))
    }

    pub fn best_model(&self) -> Option<Pnn> {
        let best = self.best_run()?;
        let arch = Architecture::new(self.input_dim, best.run.depth, best.run.width).ok()?;
        Some(Pnn {
            arch,
            params: best.params.clone()?,
        })
    }

    pub fn cell(&self, depth: usize, width: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.depth == depth && c.width == width)
    }
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Everything needed to run grid cells independently and in any order.
///
/// Run `(depth, width, seed)` draws from substream `seed` of substream `width`
/// of substream `depth` of the root stream, so its result does not depend on
/// which other runs exist or on execution order.
#[derive(Debug, Clone)]
pub struct GridPlan<'a> {
    pub train: &'a Dataset,
    pub test_stats: EmpiricalStats,
    pub spec: GridSpec,
    pub train_cfg: TrainConfig,
    pub opt_cfg: OptimizerConfig,
    root: Rng,
}

impl<'a> GridPlan<'a> {
    pub fn new(
        train: &'a Dataset,
        test: &Dataset,
        spec: GridSpec,
        train_cfg: TrainConfig,
        opt_cfg: OptimizerConfig,
        rng: &Rng,
    ) -> Result<Self> {
        spec.validate()?;
        train_cfg.validate()?;
        opt_cfg.validate()?;
        if train.input_dim() != test.input_dim() {
            return Err(crate::Error::Shape(alloc::format!(
                "train has {} input columns, test has {}",
                train.input_dim(),
                test.input_dim()
            )));
        }
        let test_stats = group_replicates(test)?;
        if test_stats.valid_groups().next().is_none() {
            return Err(domain_err!("test set has no group usable for KL"));
        }
        Ok(GridPlan {
            train,
            test_stats,
            spec,
            train_cfg,
            opt_cfg,
            root: rng.clone(),
        })
    }

    pub fn runs(&self) -> Vec<GridRun> {
        self.spec.runs()
    }

    pub fn run_rng(&self, run: &GridRun) -> Rng {
        self.root
            .substream(run.depth as u64)
            .substream(run.width as u64)
            .substream(run.seed)
    }

    pub fn architecture(&self, run: &GridRun) -> Result<Architecture> {
        Architecture::new(self.train.input_dim(), run.depth, run.width)
    }

    /// Trains and scores one run.
    pub fn execute(&self, run: &GridRun) -> RunOutcome {
        let trained = self.architecture(run).and_then(|arch| {
            let rng = self.run_rng(run);
            let cfg = TrainConfig {
                shuffle_seed: rng.substream(1).key(),
                ..self.train_cfg
            };
            fit(self.train, &arch, &cfg, &self.opt_cfg, &mut rng.substream(0)).map(|o| o.params)
        });
        self.score(run, trained)
    }

    /// Scores the outcome of training `run`.
    pub fn score(&self, run: &GridRun, trained: Result<NetworkParameters>) -> RunOutcome {
        let failed = |status, message: String| RunOutcome {
            run: *run,
            kl: None,
            status,
            message: Some(message),
            seconds: None,
            params: None,
        };
        let params = match trained {
            Ok(p) => p,
            Err(e @ crate::Error::Diverged { .. }) => return failed(RunStatus::Diverged, e.to_string()),
            Err(e) => return failed(RunStatus::Invalid, e.to_string()),
        };
        let kl = self
            .architecture(run)
            .and_then(|arch| score_model(&params, &arch, &self.test_stats));
        match kl {
            Ok(kl) if kl.is_finite() => RunOutcome {
                run: *run,
                kl: Some(kl),
                status: RunStatus::Ok,
                message: None,
                seconds: None,
                params: Some(params),
            },
            Ok(kl) => failed(RunStatus::Invalid, alloc::format!("non-finite KL {kl}")),
            Err(e) => failed(RunStatus::Invalid, e.to_string()),
        }
    }

    /// Orders outcomes, summarizes cells, and picks the best cell.
    pub fn finish(&self, mut outcomes: Vec<RunOutcome>) -> GridResult {
        outcomes.sort_by_key(|o| o.run.index);
        let mut cells = Vec::new();
        for &depth in &self.spec.depths {
            for &width in &self.spec.widths {
                let kls: Vec<f64> = outcomes
                    .iter()
                    .filter(|o| o.run.depth == depth && o.run.width == width)
                    .filter_map(|o| o.kl)
                    .collect();
                let parameter_count = Architecture::new(self.train.input_dim(), depth, width)
                    .map(|a| a.parameter_count())
                    .unwrap_or(0);
                cells.push(CellSummary {
                    depth,
                    width,
                    parameter_count,
                    valid_runs: kls.len(),
                    mean_kl: (!kls.is_empty()).then(|| kls.iter().sum::<f64>() / kls.len() as f64),
                    median_kl: median(&kls),
                });
            }
        }
        let best_cell = cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.mean_kl.map(|kl| (i, kl, c)))
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(a.2.parameter_count.cmp(&b.2.parameter_count))
                    .then(a.2.depth.cmp(&b.2.depth))
                    .then(a.2.width.cmp(&b.2.width))
            })
            .map(|(i, _, _)| i);
        GridResult {
            input_dim: self.train.input_dim(),
            runs: outcomes,
            cells,
            best_cell,
        }
    }
}

/// Sequential grid search over `spec`.
pub fn grid_search(
    train: &Dataset,
    test: &Dataset,
    spec: GridSpec,
    train_cfg: TrainConfig,
    opt_cfg: OptimizerConfig,
    rng: &Rng,
) -> Result<GridResult> {
    let plan = GridPlan::new(train, test, spec, train_cfg, opt_cfg, rng)?;
    let outcomes = plan.runs().iter().map(|r| plan.execute(r)).collect();
    Ok(plan.finish(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_cubic, CubicSpec, Provenance};
    use crate::math::{Matrix, Vector};
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    fn dataset(inputs: &[f64], outputs: &[f64]) -> Dataset {
        Dataset::from_exact_inputs(
            Matrix::new(inputs.len(), 1, inputs.to_vec()).unwrap(),
            Vector::new(outputs.to_vec()),
            Provenance::Csv,
        )
        .unwrap()
    }

    /// Echoes each group's empirical moments back, optionally scaling the variance.
    struct Echo<'a>(&'a EmpiricalStats, f64);

    impl Predictor for Echo<'_> {
        fn input_dim(&self) -> usize {
            1
        }
        fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
            let g = self.0.groups.iter().find(|g| g.input == x).unwrap();
            Ok(GaussianPrediction::new(g.mean, g.variance * self.1))
        }
    }

    #[test]
    fn group_hand_case() {
        let s = group_replicates(&dataset(&[5.0, 5.0], &[1.0, 3.0])).unwrap();
        let g = &s.groups[0];
        assert_eq!((g.mean, g.variance, g.min, g.max, g.count), (2.0, 2.0, 1.0, 3.0, 2));
        assert!(!g.is_degenerate());
    }

    #[test]
    fn equal_replicates_are_degenerate() {
        let s = group_replicates(&dataset(&[1.0, 1.0, 2.0], &[4.0, 4.0, 1.0])).unwrap();
        assert_eq!(s.groups[0].variance, 0.0);
        assert!(s.groups[0].is_degenerate());
        assert!(s.groups[1].is_degenerate()); // single replicate
        assert_eq!(s.valid_groups().count(), 0);
    }

    #[test]
    fn cubic_test_groups() {
        let s = group_replicates(&gen_cubic(&CubicSpec::test_protocol(3)).unwrap()).unwrap();
        assert_eq!(s.len(), 50);
        assert!(s.groups.iter().all(|g| g.count == 10));
        assert!(s.groups.iter().all(|g| g.min <= g.mean && g.mean <= g.max));
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_gaussian((0.3, 1.7), (0.3, 1.7)).unwrap(), 0.0);
        assert!(close(kl_gaussian((0.0, 1.0), (1.0, 1.0)).unwrap(), 0.5, 1e-15));
        let v = kl_gaussian((0.0, 1.0), (0.0, 2.0)).unwrap();
        assert!(close(v, 0.5 * libm::log(2.0) + 0.25 - 0.5, 1e-15));
        assert!(close(v, 0.096574, 1e-6));
        assert!(kl_gaussian((0.0, 0.0), (0.0, 1.0)).is_err());
        assert!(kl_gaussian((0.0, 1.0), (0.0, -1.0)).is_err());
    }

    #[test]
    fn kl_is_asymmetric() {
        let ab = kl_gaussian((0.0, 1.0), (0.0, 2.0)).unwrap();
        let ba = kl_gaussian((0.0, 2.0), (0.0, 1.0)).unwrap();
        assert!(libm::fabs(ab - ba) > 1e-3);
    }

    #[test]
    fn echo_scores() {
        let s = group_replicates(&gen_cubic(&CubicSpec::test_protocol(1)).unwrap()).unwrap();
        assert_eq!(score_predictor(&Echo(&s, 1.0), &s).unwrap(), 0.0);
        let doubled = score_predictor(&Echo(&s, 2.0), &s).unwrap();
        assert!(close(doubled, 0.5 * libm::log(2.0) - 0.25, 1e-12));
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let s = group_replicates(&dataset(&[1.0, 2.0], &[4.0, 4.0])).unwrap();
        assert!(score_predictor(&Echo(&s, 1.0), &s).is_err());
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn grid_spec_validation() {
        let ok = GridSpec { depths: vec![1], widths: vec![2], seeds_per_cell: 1 };
        assert!(ok.validate().is_ok());
        assert!(GridSpec { depths: vec![], ..ok.clone() }.validate().is_err());
        assert!(GridSpec { widths: vec![0], ..ok.clone() }.validate().is_err());
        assert!(GridSpec { seeds_per_cell: 0, ..ok }.validate().is_err());
        let runs = GridSpec { depths: vec![1, 2], widths: vec![3], seeds_per_cell: 2 }.runs();
        assert_eq!(runs.len(), 4);
        assert_eq!((runs[3].depth, runs[3].width, runs[3].seed, runs[3].index), (2, 3, 1, 3));
    }

    fn small_problem() -> (Dataset, Dataset) {
        let train = gen_cubic(&CubicSpec { n_unique: 30, replicates: 5, seed: 1 }).unwrap();
        let test = gen_cubic(&CubicSpec { n_unique: 10, replicates: 5, seed: 2 }).unwrap();
        (train, test)
    }

    #[test]
    fn singleton_grid_returns_its_cell() {
        let (train, test) = small_problem();
        let spec = GridSpec { depths: vec![2], widths: vec![3], seeds_per_cell: 1 };
        let cfg = TrainConfig { epochs: 2, ..Default::default() };
        let r = grid_search(&train, &test, spec, cfg, OptimizerConfig::default(), &Rng::new(0)).unwrap();
        assert_eq!(r.best_cell, Some(0));
        assert_eq!((r.best().unwrap().depth, r.best().unwrap().width), (2, 3));
        assert!(r.best_model().is_some());
    }

    #[test]
    fn order_does_not_matter() {
        let (train, test) = small_problem();
        let spec = GridSpec { depths: vec![1, 2], widths: vec![2, 3], seeds_per_cell: 2 };
        let cfg = TrainConfig { epochs: 2, ..Default::default() };
        let plan = GridPlan::new(&train, &test, spec.clone(), cfg, OptimizerConfig::default(), &Rng::new(4)).unwrap();
        let forward: Vec<_> = plan.runs().iter().map(|r| plan.execute(r)).collect();
        let reversed: Vec<_> = plan.runs().iter().rev().map(|r| plan.execute(r)).collect();
        assert_eq!(plan.finish(forward), plan.finish(reversed));
        // A run's result does not depend on the rest of the grid.
        let narrow = GridSpec { depths: vec![2], widths: vec![3], seeds_per_cell: 1 };
        let small = grid_search(&train, &test, narrow, cfg, OptimizerConfig::default(), &Rng::new(4)).unwrap();
        let full = grid_search(&train, &test, spec, cfg, OptimizerConfig::default(), &Rng::new(4)).unwrap();
        let pick = full.runs.iter().find(|o| o.run.depth == 2 && o.run.width == 3 && o.run.seed == 0).unwrap();
        assert_eq!(small.runs[0].kl, pick.kl);
    }

    #[test]
    fn planted_model_wins() {
        let (train, test) = small_problem();
        let spec = GridSpec { depths: vec![1, 2], widths: vec![4], seeds_per_cell: 1 };
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        let plan = GridPlan::new(&train, &test, spec, cfg, OptimizerConfig::default(), &Rng::new(0)).unwrap();
        let runs = plan.runs();
        // Precomputed parameters: a long training run for the depth-1 cell;
        // the depth-2 cell gets an untrained all-zero network.
        let arch = plan.architecture(&runs[0]).unwrap();
        let long = TrainConfig { epochs: 150, ..Default::default() };
        let good = fit(&train, &arch, &long, &OptimizerConfig::default(), &mut Rng::new(9)).unwrap().params;
        let zero = NetworkParameters::zeros(&plan.architecture(&runs[1]).unwrap());
        let outcomes = vec![plan.score(&runs[0], Ok(good)), plan.score(&runs[1], Ok(zero))];
        let result = plan.finish(outcomes);
        assert_eq!(result.best().unwrap().depth, 1);
    }

    #[test]
    fn divergent_run_is_flagged() {
        let (train, test) = small_problem();
        let spec = GridSpec { depths: vec![1], widths: vec![2], seeds_per_cell: 1 };
        let plan = GridPlan::new(&train, &test, spec, TrainConfig::default(), OptimizerConfig::default(), &Rng::new(0)).unwrap();
        let run = plan.runs()[0];
        let out = plan.score(&run, Err(crate::Error::Diverged { epoch: 3, step: 7 }));
        assert_eq!(out.status, RunStatus::Diverged);
        let result = plan.finish(vec![out]);
        assert_eq!(result.best_cell, None);
    }

    #[test]
    fn ties_prefer_smaller_networks() {
        let (train, test) = small_problem();
        let spec = GridSpec { depths: vec![2, 1], widths: vec![4, 2], seeds_per_cell: 1 };
        let plan = GridPlan::new(&train, &test, spec, TrainConfig::default(), OptimizerConfig::default(), &Rng::new(0)).unwrap();
        let outcomes = plan
            .runs()
            .iter()
            .map(|r| RunOutcome {
                run: *r,
                kl: Some(0.25),
                status: RunStatus::Ok,
                message: None,
                seconds: None,
                params: None,
            })
            .collect();
        let best = plan.finish(outcomes);
        let b = best.best().unwrap();
        assert_eq!((b.depth, b.width), (1, 2));
    }
}
