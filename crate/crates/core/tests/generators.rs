//! Monte Carlo checks of the benchmark generators against their known moments.

use pnn_core::bench::{gen_cubic, gen_ishigami, ishigami, split, CubicSpec, IshigamiSpec};
use pnn_core::modelsel::group_replicates;

#[test]
fn cubic_group_moments_converge() {
    let data = gen_cubic(&CubicSpec { n_unique: 6, replicates: 100_000, seed: 12 }).unwrap();
    for g in group_replicates(&data).unwrap().groups {
        let x = g.input[0];
        assert_eq!(g.count, 100_000);
        assert!((g.mean - x * x * x).abs() < 0.01, "mean {} at x={x}", g.mean);
        let sd = 0.1 * (2.0 + x);
        assert!((g.variance.sqrt() / sd - 1.0).abs() < 0.03, "sd {} at x={x}", g.variance.sqrt());
    }
}

#[test]
fn ishigami_group_variance_converges() {
    let spec = IshigamiSpec { n_unique: 6, replicates: 100_000, ..IshigamiSpec::train_protocol(8) };
    let data = gen_ishigami(&spec).unwrap();
    for g in group_replicates(&data).unwrap().groups {
        let f = ishigami(&g.input, 7.0, 0.1);
        let want = 0.2 * f.abs();
        assert!((g.variance / want - 1.0).abs() < 0.03, "variance {} vs {want}", g.variance);
    }
}

#[test]
fn split_keeps_groups_whole() {
    let data = gen_ishigami(&IshigamiSpec::train_protocol(3)).unwrap();
    for seed in 0..5 {
        let (train, test) = split(&data, 0.2, seed).unwrap();
        let train_keys = train.unique_keys();
        let test_keys = test.unique_keys();
        assert_eq!(test_keys.len(), 60);
        assert_eq!(train_keys.len(), 240);
        assert!(test_keys.iter().all(|k| !train_keys.contains(k)));
        assert_eq!(train.len() + test.len(), data.len());
    }
}
