//! Randomized properties of the loss, the KL score, the optimizer and
//! training.

use pnn_core::math::Rng;
use pnn_core::modelsel::{group_replicates, kl_gaussian, score_predictor};
use pnn_core::nn::{forward, init_parameters, Architecture, GaussianPrediction, Pnn, DEFAULT_VARIANCE_FLOOR};
use pnn_core::train::{
    batch_gradient, fit, mse_loss, nll, nll_grad, rmsprop_step, LossKind, OptimizerConfig, OptimizerState,
    TrainConfig,
};
use pnn_core::{Dataset, Matrix, Provenance, Vector};
use proptest::prelude::*;

#[test]
fn kl_nonnegative_on_random_pairs() {
    let mut rng = Rng::new(2024);
    for _ in 0..100_000 {
        let m0 = rng.uniform_range(-10.0, 10.0);
        let m1 = rng.uniform_range(-10.0, 10.0);
        let v0 = (rng.uniform_range(-6.0, 6.0)).exp();
        let v1 = (rng.uniform_range(-6.0, 6.0)).exp();
        let kl = kl_gaussian((m0, v0), (m1, v1)).unwrap();
        assert!(kl >= 0.0, "KL({m0},{v0} || {m1},{v1}) = {kl}");
    }
}

proptest! {
    #[test]
    fn kl_zero_only_for_identical_moments(
        m in -50.0f64..50.0,
        log_v in -8.0f64..8.0,
        dm in prop_oneof![Just(0.0), -1.0f64..1.0],
        dlog_v in prop_oneof![Just(0.0), -1.0f64..1.0],
    ) {
        let v = log_v.exp();
        let kl = kl_gaussian((m, v), (m + dm, v * dlog_v.exp())).unwrap();
        if dm == 0.0 && dlog_v == 0.0 {
            prop_assert!(kl.abs() <= 1e-12);
        } else {
            prop_assert!(kl > 0.0);
        }
    }

    #[test]
    fn variance_head_respects_floor(seed in any::<u64>(), scale in 0.1f64..50.0) {
        let arch = Architecture::new(2, 3, 5).unwrap();
        let mut rng = Rng::new(seed);
        let mut params = init_parameters(&arch, &mut rng);
        params.scale(scale);
        for _ in 0..20 {
            let x = [rng.uniform_range(-5.0, 5.0), rng.uniform_range(-5.0, 5.0)];
            let p = forward(&params, &arch, &x).unwrap();
            prop_assert!(p.variance >= DEFAULT_VARIANCE_FLOOR);
        }
    }

    #[test]
    fn rmsprop_state_stays_nonnegative(seed in any::<u64>()) {
        let arch = Architecture::new(1, 1, 3).unwrap();
        let mut rng = Rng::new(seed);
        let mut params = init_parameters(&arch, &mut rng);
        let mut state = OptimizerState::new(&params);
        let mut grads = params.zeros_like();
        for _ in 0..50 {
            let g: Vec<f64> = (0..grads.parameter_count()).map(|_| 100.0 * rng.standard_normal()).collect();
            grads.set_flat(&g).unwrap();
            rmsprop_step(&mut state, &mut params, &grads, &OptimizerConfig::default()).unwrap();
            prop_assert!(state.mean_square.to_flat().iter().all(|s| *s >= 0.0));
        }
    }

    #[test]
    fn mean_gradient_shrinks_with_variance(r in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0], v in 0.01f64..10.0) {
        let lo = nll_grad(GaussianPrediction::new(0.0, v), r).unwrap().0.abs();
        let hi = nll_grad(GaussianPrediction::new(0.0, v * 1.5), r).unwrap().0.abs();
        prop_assert!(hi < lo);
    }
}

#[test]
fn kl_is_asymmetric() {
    let a = (0.0, 1.0);
    let b = (0.0, 2.0);
    let ab = kl_gaussian(a, b).unwrap();
    let ba = kl_gaussian(b, a).unwrap();
    assert!((ab - (0.5 * 2f64.ln() + 0.25 - 0.5)).abs() < 1e-12);
    assert!((ba - (-0.5 * 2f64.ln() + 1.0 - 0.5)).abs() < 1e-12);
    assert!((ab - ba).abs() > 0.05);
}

struct Oracle(Vec<(Vec<f64>, GaussianPrediction)>);

impl pnn_core::Predictor for Oracle {
    fn input_dim(&self) -> usize {
        self.0[0].0.len()
    }

    fn predict(&self, x: &[f64]) -> pnn_core::Result<GaussianPrediction> {
        Ok(self.0.iter().find(|(k, _)| k.as_slice() == x).unwrap().1)
    }
}

#[test]
fn empirical_oracle_scores_exactly_zero() {
    let test = pnn_core::bench::gen_ishigami(&pnn_core::IshigamiSpec::test_protocol(4)).unwrap();
    let emp = group_replicates(&test).unwrap();
    let oracle = Oracle(
        emp.groups
            .iter()
            .map(|g| (g.input.clone(), GaussianPrediction::new(g.mean, g.variance)))
            .collect(),
    );
    assert_eq!(score_predictor(&oracle, &emp).unwrap(), 0.0);
}

#[test]
fn batch_gradient_is_sum_of_single_rows() {
    let arch = Architecture::new(2, 2, 6).unwrap();
    let mut rng = Rng::new(31);
    let params = init_parameters(&arch, &mut rng);
    let xs: Vec<f64> = (0..16).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let ys: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
    let data = Dataset::from_exact_inputs(Matrix::new(8, 2, xs).unwrap(), Vector::new(ys), Provenance::Csv).unwrap();
    let rows: Vec<usize> = (0..8).collect();
    let (_, batch) = batch_gradient(&params, &arch, &data, &rows, LossKind::HeteroscedasticNll).unwrap();
    let mut total = vec![0.0; params.parameter_count()];
    for r in 0..8 {
        let (_, g) = batch_gradient(&params, &arch, &data, &[r], LossKind::HeteroscedasticNll).unwrap();
        for (t, v) in total.iter_mut().zip(g.to_flat()) {
            *t += v / 8.0;
        }
    }
    for (a, b) in batch.to_flat().iter().zip(&total) {
        assert!((a - b).abs() < 1e-12);
    }
}

/// With the variance fixed, ranking candidate networks by NLL and by MSE
/// agrees.
#[test]
fn homoscedastic_nll_orders_like_mse() {
    let arch = Architecture::new(1, 2, 4).unwrap();
    let mut rng = Rng::new(12);
    let xs: Vec<f64> = (0..40).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x * x + 0.1 * rng.standard_normal()).collect();
    for sigma2 in [0.01, 0.3, 4.0] {
        let mut scored: Vec<(f64, f64)> = (0..30)
            .map(|_| {
                let params = init_parameters(&arch, &mut rng);
                let preds: Vec<GaussianPrediction> = xs
                    .iter()
                    .map(|x| GaussianPrediction::new(forward(&params, &arch, &[*x]).unwrap().mean, sigma2))
                    .collect();
                let total_nll: f64 = preds.iter().zip(&ys).map(|(p, y)| nll(*p, *y).unwrap()).sum();
                (total_nll, mse_loss(&preds, &ys).unwrap())
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(scored.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

#[test]
fn learns_constant_output_moments() {
    let (c, sigma2): (f64, f64) = (1.5, 0.04);
    let mut rng = Rng::new(99);
    let n = 1000;
    let xs: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| c + sigma2.sqrt() * rng.standard_normal()).collect();
    let data = Dataset::from_exact_inputs(Matrix::new(n, 1, xs.clone()).unwrap(), Vector::new(ys), Provenance::Csv).unwrap();
    let arch = Architecture::new(1, 2, 8).unwrap();
    let cfg = TrainConfig { shuffle_seed: 5, ..TrainConfig::default() };
    let out = fit(&data, &arch, &cfg, &OptimizerConfig::default(), &mut Rng::new(6)).unwrap();
    let model = Pnn::new(arch, out.params).unwrap();
    for x in xs.iter().step_by(50) {
        let p = pnn_core::Predictor::predict(&model, &[*x]).unwrap();
        assert!((p.mean - c).abs() < 0.05, "mean {} at {x}", p.mean);
        assert!((p.variance / sigma2 - 1.0).abs() < 0.3, "variance {} at {x}", p.variance);
    }
}
