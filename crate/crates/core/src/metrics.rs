//! Point and interval evaluation against replicated test outputs.

use alloc::vec::Vec;

use crate::error::{domain_err, shape_err};
use crate::modelsel::{kl_gaussian, EmpiricalStats};
use crate::nn::{GaussianPrediction, Predictor};
use crate::Result;

/// Upper 5% quantile of the standard normal.
pub const Z_95: f64 = 1.6448536269514722;

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if !(ss_tot > 0.0) {
        return Err(domain_err!("R^2 is undefined for constant actual values"));
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(domain_err!("correlation is undefined for a constant sequence"));
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(shape_err!("sequences of lengths {} and {}", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(domain_err!("need at least 2 pairs, got {}", a.len()));
    }
    Ok(())
}

/// Central 90% interval of the predicted Gaussian.
pub fn interval_90(pred: GaussianPrediction) -> Result<(f64, f64)> {
    if !(pred.variance >= 0.0) {
        return Err(domain_err!("variance {} is negative", pred.variance));
    }
    let half = Z_95 * libm::sqrt(pred.variance);
    Ok((pred.mean - half, pred.mean + half))
}

pub fn interval_width_90(variance: f64) -> f64 {
    2.0 * Z_95 * libm::sqrt(variance)
}

/// Predicted 90% width against the empirical replicate range of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalPair {
    pub predicted: f64,
    pub empirical: f64,
}

/// Everything known about one test group, for plotting.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScatterRow {
    pub key: u64,
    pub emp_mean: f64,
    pub pred_mean: f64,
    pub emp_variance: f64,
    pub pred_variance: f64,
    pub interval: IntervalPair,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    /// Over group means, every group included.
    pub r_squared: f64,
    /// Pearson correlation of empirical ranges and predicted 90% widths over
    /// non-degenerate groups.
    pub interval_correlation: f64,
    /// Mean `KL(empirical || predicted)` over non-degenerate groups.
    pub mean_kl: f64,
    pub groups: usize,
    pub degenerate_groups: usize,
    pub rows: Vec<ScatterRow>,
}

/// `preds[i]` is the prediction for `emp.groups[i]`.
pub fn evaluate(preds: &[GaussianPrediction], emp: &EmpiricalStats) -> Result<EvalReport> {
    if preds.len() != emp.len() {
        return Err(shape_err!("{} predictions for {} groups", preds.len(), emp.len()));
    }
    if emp.len() < 2 {
        return Err(domain_err!("evaluation needs at least 2 groups, got {}", emp.len()));
    }
    let rows: Vec<ScatterRow> = emp
        .groups
        .iter()
        .zip(preds)
        .map(|(g, p)| ScatterRow {
            key: g.key,
            emp_mean: g.mean,
            pred_mean: p.mean,
            emp_variance: g.variance,
            pred_variance: p.variance,
            interval: IntervalPair {
                predicted: interval_width_90(p.variance.max(0.0)),
                empirical: g.range(),
            },
            degenerate: g.is_degenerate(),
        })
        .collect();

    let emp_means: Vec<f64> = rows.iter().map(|r| r.emp_mean).collect();
    let pred_means: Vec<f64> = rows.iter().map(|r| r.pred_mean).collect();
    let r2 = r_squared(&emp_means, &pred_means)?;

    let valid: Vec<&ScatterRow> = rows.iter().filter(|r| !r.degenerate).collect();
    let emp_widths: Vec<f64> = valid.iter().map(|r| r.interval.empirical).collect();
    let pred_widths: Vec<f64> = valid.iter().map(|r| r.interval.predicted).collect();
    let corr = pearson(&emp_widths, &pred_widths)?;

    let mut kl_total = 0.0;
    for r in &valid {
        kl_total += kl_gaussian((r.emp_mean, r.emp_variance), (r.pred_mean, r.pred_variance))?;
    }

    Ok(EvalReport {
        r_squared: r2,
        interval_correlation: corr,
        mean_kl: kl_total / valid.len() as f64,
        groups: rows.len(),
        degenerate_groups: rows.len() - valid.len(),
        rows,
    })
}

pub fn evaluate_predictor<P: Predictor + ?Sized>(model: &P, emp: &EmpiricalStats) -> Result<EvalReport> {
    let preds = emp.predict_all(model)?;
    evaluate(&preds, emp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_cubic, CubicSpec};
    use crate::math::Rng;
    use crate::modelsel::group_replicates;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn r_squared_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        assert_eq!(r_squared(&a, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!(close(r_squared(&a, &[1.0, 2.0, 4.0]).unwrap(), 0.5, 1e-15));
        assert!(r_squared(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_cases() {
        let a = [1.0, 2.0, 3.0];
        assert!(close(pearson(&a, &a).unwrap(), 1.0, 1e-15));
        assert!(close(pearson(&a, &[-1.0, -2.0, -3.0]).unwrap(), -1.0, 1e-15));
        // Direct formula: deviations (-1, 0, 1) and (-5/6, 1/6, 4/6).
        let b = [1.0, 2.0, 2.5];
        let mb = 5.5 / 3.0;
        let db: Vec<f64> = b.iter().map(|v| v - mb).collect();
        let oracle = (-db[0] + db[2]) / libm::sqrt(2.0 * db.iter().map(|d| d * d).sum::<f64>());
        assert!(close(pearson(&a, &b).unwrap(), oracle, 1e-12));
        assert!(pearson(&a, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn pearson_affine_invariance() {
        let mut rng = Rng::new(6);
        let a: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
        let b: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
        let scaled: Vec<f64> = b.iter().map(|v| 3.5 * v - 2.0).collect();
        assert!(close(pearson(&a, &b).unwrap(), pearson(&a, &scaled).unwrap(), 1e-12));
    }

    #[test]
    fn interval_cases() {
        let (lo, hi) = interval_90(GaussianPrediction::new(0.0, 1.0)).unwrap();
        assert!(close(lo, -1.6448536, 1e-7) && close(hi, 1.6448536, 1e-7));
        let (lo, hi) = interval_90(GaussianPrediction::new(3.0, 4.0)).unwrap();
        assert!(close(hi - lo, 6.579415, 1e-6));
        assert!(interval_90(GaussianPrediction::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn interval_width_monotone_and_mean_free() {
        let mut last = 0.0;
        for k in 1..100 {
            let v = k as f64 * 0.1;
            let (lo, hi) = interval_90(GaussianPrediction::new(k as f64, v)).unwrap();
            let (lo0, hi0) = interval_90(GaussianPrediction::new(0.0, v)).unwrap();
            assert!(close(hi - lo, hi0 - lo0, 1e-12));
            assert!(hi0 - lo0 > last);
            last = hi0 - lo0;
        }
    }

    #[test]
    fn interval_coverage() {
        let mut rng = Rng::new(90);
        let inside = (0..100_000)
            .filter(|_| libm::fabs(rng.standard_normal()) <= Z_95)
            .count();
        let frac = inside as f64 / 100_000.0;
        assert!(close(frac, 0.9, 0.005), "{frac}");
    }

    #[test]
    fn oracle_evaluation() {
        let emp = group_replicates(&gen_cubic(&CubicSpec::test_protocol(5)).unwrap()).unwrap();
        let preds: Vec<_> = emp
            .groups
            .iter()
            .map(|g| GaussianPrediction::new(g.mean, g.variance))
            .collect();
        let report = evaluate(&preds, &emp).unwrap();
        assert_eq!(report.r_squared, 1.0);
        assert_eq!(report.mean_kl, 0.0);
        let ranges: Vec<f64> = emp.groups.iter().map(|g| g.range()).collect();
        let widths: Vec<f64> = emp.groups.iter().map(|g| 2.0 * Z_95 * libm::sqrt(g.variance)).collect();
        assert!(close(report.interval_correlation, pearson(&ranges, &widths).unwrap(), 1e-12));
        assert_eq!(report.rows.len(), 50);
    }

    #[test]
    fn evaluation_needs_two_groups() {
        let emp = group_replicates(&gen_cubic(&CubicSpec { n_unique: 1, replicates: 3, seed: 0 }).unwrap()).unwrap();
        assert!(evaluate(&[GaussianPrediction::new(0.0, 1.0)], &emp).is_err());
        assert!(evaluate(&[], &emp).is_err());
    }
}
