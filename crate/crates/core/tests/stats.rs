use medshare::cli::{stats_experiment, StatsConfig};
use medshare::perturb::NoiseSpec;

#[test]
fn errors_shrink_with_n() {
    let cfg = StatsConfig::default();
    assert_eq!(cfg.sizes, [100, 1_000, 10_000]);
    assert_eq!(cfg.repetitions, 10);
    let rows = stats_experiment(&cfg, 2024).unwrap();
    for spec in &cfg.specs {
        let cells: Vec<_> = rows
            .iter()
            .filter(|r| r.family == spec.family() && r.parameter == spec.parameter())
            .collect();
        assert_eq!(cells.len(), 3);
        if spec.is_zero() {
            assert!(cells.iter().all(|r| r.mean_abs_error == 0.0 && r.variance_abs_error == 0.0));
            continue;
        }
        for w in cells.windows(2) {
            assert!(w[1].mean_abs_error < w[0].mean_abs_error, "{spec:?} {w:?}");
            assert!(w[1].variance_abs_error < w[0].variance_abs_error, "{spec:?} {w:?}");
        }
    }
}

#[test]
fn large_sample_mean_within_bound() {
    let cfg = StatsConfig {
        sizes: vec![10_000],
        specs: vec![NoiseSpec::uniform(10.0).unwrap()],
        repetitions: 5,
        ..StatsConfig::default()
    };
    let rows = stats_experiment(&cfg, 7).unwrap();
    assert!(rows[0].mean_abs_error <= 0.25);
}

#[test]
fn deterministic_under_seed() {
    let cfg = StatsConfig {
        sizes: vec![100, 200],
        ..StatsConfig::default()
    };
    assert_eq!(stats_experiment(&cfg, 1).unwrap(), stats_experiment(&cfg, 1).unwrap());
    assert_ne!(stats_experiment(&cfg, 1).unwrap(), stats_experiment(&cfg, 2).unwrap());
}
