use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datastore::{Cell, Column, ColumnKind, Schema, Table};
use crate::perturb::{estimate_moments, perturb_table, NoiseSpec, PerturbationPolicy};
use crate::seed::rng_for;

use super::config::StatsConfig;
use super::CliError;

/// Mean absolute errors for one `(n, noise)` cell of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub n: usize,
    pub family: String,
    pub parameter: f64,
    pub mean_abs_error: f64,
    pub variance_abs_error: f64,
}

/// `n` values with sample mean exactly `mean`: Gaussian deviations drawn
/// for half the rows and mirrored for the other half.
pub fn centered_column<R: Rng + ?Sized>(n: usize, mean: f64, std_dev: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, std_dev).expect("finite std_dev");
    let half: Vec<f64> = (0..n / 2).map(|_| normal.sample(rng)).collect();
    let mut out: Vec<f64> = half.iter().map(|d| mean + d).collect();
    out.extend(half.iter().map(|d| mean - d));
    if n % 2 == 1 {
        out.push(mean);
    }
    out
}

/// Errors of the recovered mean and variance against the column's own
/// sample moments, for one perturbed draw.
pub fn recovery_error(values: &[f64], spec: &NoiseSpec, seed: u64, label: &str) -> Result<(f64, f64), CliError> {
    let schema = Schema::new(vec![Column::new("x", ColumnKind::Numeric)])?;
    let rows = values.iter().map(|&v| vec![Cell::Number(v)]).collect();
    let table = Table::new(schema, rows)?;
    let mut policy = PerturbationPolicy::default();
    policy.perturb.insert("x".into(), *spec);
    let mut rng = rng_for(seed, &format!("{label}/noise"));
    let perturbed = perturb_table(&table, &policy, &mut rng)?;
    let est = estimate_moments(&perturbed.numeric_column("x")?, spec)?;
    let truth = estimate_moments(values, &NoiseSpec::Uniform { alpha: 0.0 })?;
    Ok((
        (est.est_mean - truth.est_mean).abs(),
        (est.est_variance - truth.est_variance).abs(),
    ))
}

/// Moment-recovery error over the grid in `cfg`, averaged over
/// repetitions. Deterministic in `seed`.
pub fn stats_experiment(cfg: &StatsConfig, seed: u64) -> Result<Vec<StatsRow>, CliError> {
    if cfg.repetitions == 0 || cfg.sizes.iter().any(|&n| n < 2) {
        return Err(CliError::Config("stats needs repetitions ≥ 1 and sizes ≥ 2".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for spec in &cfg.specs {
            let (mut me, mut ve) = (0.0, 0.0);
            for rep in 0..cfg.repetitions {
                let label = format!("stats/{n}/{}/{}/{rep}", spec.family(), spec.parameter());
                let values = centered_column(n, cfg.true_mean, cfg.true_std_dev, &mut rng_for(seed, &label));
                let (m, v) = recovery_error(&values, spec, seed, &label)?;
                me += m;
                ve += v;
            }
            let r = cfg.repetitions as f64;
            rows.push(StatsRow {
                n,
                family: spec.family().to_string(),
                parameter: spec.parameter(),
                mean_abs_error: me / r,
                variance_abs_error: ve / r,
            });
        }
    }
    Ok(rows)
}

pub fn write_stats_csv<W: Write>(rows: &[StatsRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}
