//! Additive mean-zero noise perturbation and moment recovery.
//!
//! Each sensitive value `x` is released as `z = x + y` where `y` is drawn
//! independently from a uniform distribution on `[-alpha, alpha]` or a
//! Gaussian with mean zero and standard deviation `sigma`. Individual values
//! are distorted, but the column mean and variance can still be estimated
//! from the released data because the noise distribution is public.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datastore::{Cell, Schema, Table};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PerturbError {
    #[error("noise parameter must be finite and non-negative, got {0}")]
    InvalidParameter(f64),
    #[error("policy does not fit schema: {0}")]
    PolicySchemaMismatch(String),
    #[error("cannot estimate moments of an empty column")]
    EmptyColumn,
}

/// Mean-zero noise distribution for one column.
///
/// Serialized as `{"family":"uniform","alpha":…}` or
/// `{"family":"gaussian","sigma":…}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", try_from = "RawNoiseSpec")]
pub enum NoiseSpec {
    /// Uniform on `[-alpha, alpha]`.
    Uniform { alpha: f64 },
    /// Normal with mean 0 and standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum RawNoiseSpec {
    Uniform { alpha: f64 },
    Gaussian { sigma: f64 },
}

impl TryFrom<RawNoiseSpec> for NoiseSpec {
    type Error = PerturbError;

    fn try_from(raw: RawNoiseSpec) -> Result<Self, Self::Error> {
        match raw {
            RawNoiseSpec::Uniform { alpha } => NoiseSpec::uniform(alpha),
            RawNoiseSpec::Gaussian { sigma } => NoiseSpec::gaussian(sigma),
        }
    }
}

fn check_param(v: f64) -> Result<f64, PerturbError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(PerturbError::InvalidParameter(v))
    }
}

impl NoiseSpec {
    pub fn uniform(alpha: f64) -> Result<Self, PerturbError> {
        Ok(NoiseSpec::Uniform {
            alpha: check_param(alpha)?,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self, PerturbError> {
        Ok(NoiseSpec::Gaussian {
            sigma: check_param(sigma)?,
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            NoiseSpec::Uniform { .. } => "uniform",
            NoiseSpec::Gaussian { .. } => "gaussian",
        }
    }

    /// `alpha` for uniform noise, `sigma` for Gaussian noise.
    pub fn parameter(&self) -> f64 {
        match *self {
            NoiseSpec::Uniform { alpha } => alpha,
            NoiseSpec::Gaussian { sigma } => sigma,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parameter() == 0.0
    }
}

/// Variance of the noise: `alpha²/3` for uniform, `sigma²` for Gaussian.
pub fn noise_variance(spec: &NoiseSpec) -> f64 {
    match *spec {
        NoiseSpec::Uniform { alpha } => alpha * alpha / 3.0,
        NoiseSpec::Gaussian { sigma } => sigma * sigma,
    }
}

/// One independent noise draw.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> f64 {
    match *spec {
        NoiseSpec::Uniform { alpha: 0.0 } => 0.0,
        NoiseSpec::Uniform { alpha } => rng.gen_range(-alpha..=alpha),
        NoiseSpec::Gaussian { sigma: 0.0 } => 0.0,
        NoiseSpec::Gaussian { sigma } => Normal::new(0.0, sigma)
            .expect("sigma validated")
            .sample(rng),
    }
}

/// Inclusive bounds applied to perturbed values when clamping is enabled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClampRange {
    pub min: f64,
    pub max: f64,
}

/// Which columns receive noise and which are removed before release.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPolicy {
    #[serde(default)]
    pub perturb: BTreeMap<String, NoiseSpec>,
    #[serde(default)]
    pub suppress: BTreeSet<String>,
    /// Round perturbed values to integers. Biases estimates; display only.
    #[serde(default)]
    pub round_output: bool,
    /// Clamp perturbed values. Off by default since clamping biases the mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<ClampRange>,
}

impl PerturbationPolicy {
    /// Noise on `age` (uniform, half-width `alpha` years), `personid` removed,
    /// every other column released as is.
    pub fn hospital(alpha: f64) -> Result<Self, PerturbError> {
        let mut perturb = BTreeMap::new();
        perturb.insert("age".to_string(), NoiseSpec::uniform(alpha)?);
        Ok(Self {
            perturb,
            suppress: BTreeSet::from(["personid".to_string()]),
            round_output: false,
            clamp: None,
        })
    }

    pub fn validate(&self, schema: &Schema) -> Result<(), PerturbError> {
        for name in self.perturb.keys() {
            let col = schema.column(name).ok_or_else(|| {
                PerturbError::PolicySchemaMismatch(format!("no column {name}"))
            })?;
            if !col.kind.is_numeric() {
                return Err(PerturbError::PolicySchemaMismatch(format!(
                    "{name} is not numeric"
                )));
            }
            if self.suppress.contains(name) {
                return Err(PerturbError::PolicySchemaMismatch(format!(
                    "{name} is both perturbed and suppressed"
                )));
            }
        }
        if let Some(name) = self.suppress.iter().find(|n| schema.index_of(n).is_none()) {
            return Err(PerturbError::PolicySchemaMismatch(format!("no column {name}")));
        }
        if let Some(c) = self.clamp {
            if !c.min.partial_cmp(&c.max).is_some_and(|o| o.is_le()) {
                return Err(PerturbError::PolicySchemaMismatch(format!(
                    "clamp min {} exceeds max {}",
                    c.min, c.max
                )));
            }
        }
        Ok(())
    }

    /// The same policy with references to columns outside `schema` dropped.
    /// Providers use this on projected query results.
    pub fn restricted_to(&self, schema: &Schema) -> Self {
        Self {
            perturb: self
                .perturb
                .iter()
                .filter(|(n, _)| schema.index_of(n).is_some())
                .map(|(n, s)| (n.clone(), *s))
                .collect(),
            suppress: self
                .suppress
                .iter()
                .filter(|n| schema.index_of(n).is_some())
                .cloned()
                .collect(),
            round_output: self.round_output,
            clamp: self.clamp,
        }
    }
}

/// Release a perturbed copy of `table`: suppressed columns dropped, each
/// policy cell replaced by `x + y` with a fresh draw `y`, everything else
/// copied verbatim. Draws are taken row-major in schema order.
pub fn perturb_table<R: Rng + ?Sized>(
    table: &Table,
    policy: &PerturbationPolicy,
    rng: &mut R,
) -> Result<Table, PerturbError> {
    let schema = table.schema();
    policy.validate(schema)?;

    let kept: Vec<&str> = schema
        .names()
        .filter(|n| !policy.suppress.contains(*n))
        .collect();
    let noise: Vec<Option<NoiseSpec>> = kept
        .iter()
        .map(|n| policy.perturb.get(*n).copied())
        .collect();
    let projected = table
        .project(&kept)
        .map_err(|e| PerturbError::PolicySchemaMismatch(e.to_string()))?;

    let out_schema = projected.schema().clone();
    let mut rows = projected.into_rows();
    for row in &mut rows {
        for (cell, spec) in row.iter_mut().zip(&noise) {
            let Some(spec) = spec else { continue };
            let x = cell.as_number().expect("perturbed columns are numeric");
            let mut z = x + sample_noise(spec, rng);
            if let Some(c) = policy.clamp {
                z = z.clamp(c.min, c.max);
            }
            if policy.round_output {
                z = z.round();
            }
            *cell = Cell::Number(z);
        }
    }
    Ok(Table::new(out_schema, rows).expect("shape preserved"))
}

/// Recovered first and second moments of the original column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub est_mean: f64,
    pub est_variance: f64,
    pub sample_count: usize,
}

/// Mean is the plain sample mean of the perturbed values. Variance is the
/// unbiased sample variance minus the known noise variance, floored at 0.
/// A single value has no variance estimate and reports 0.
pub fn estimate_moments(perturbed: &[f64], spec: &NoiseSpec) -> Result<MomentEstimate, PerturbError> {
    let n = perturbed.len();
    if n == 0 {
        return Err(PerturbError::EmptyColumn);
    }
    let mean = perturbed.iter().sum::<f64>() / n as f64;
    let sample_var = if n > 1 {
        perturbed.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(MomentEstimate {
        est_mean: mean,
        est_variance: (sample_var - noise_variance(spec)).max(0.0),
        sample_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::{fixtures, gen_synthetic, ColumnDist, SyntheticSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn closed_form_variances() {
        assert!((noise_variance(&NoiseSpec::uniform(5.0).unwrap()) - 25.0 / 3.0).abs() < 1e-12);
        assert_eq!(noise_variance(&NoiseSpec::gaussian(2.0).unwrap()), 4.0);
        assert_eq!(noise_variance(&NoiseSpec::uniform(0.0).unwrap()), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(NoiseSpec::uniform(-1.0).is_err());
        assert!(NoiseSpec::gaussian(f64::NAN).is_err());
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"family":"uniform","alpha":-2}"#).is_err());
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"family":"uniform","sigma":2}"#).is_err());
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"family":"laplace","b":2}"#).is_err());
    }

    #[test]
    fn serde_shape() {
        let s = NoiseSpec::uniform(5.0).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"family":"uniform","alpha":5.0}"#);
        let g: NoiseSpec = serde_json::from_str(r#"{"family":"gaussian","sigma":3}"#).unwrap();
        assert_eq!(g, NoiseSpec::gaussian(3.0).unwrap());
    }

    #[test]
    fn degenerate_noise_is_zero() {
        let mut r = rng(1);
        for _ in 0..100 {
            assert_eq!(sample_noise(&NoiseSpec::uniform(0.0).unwrap(), &mut r), 0.0);
            assert_eq!(sample_noise(&NoiseSpec::gaussian(0.0).unwrap(), &mut r), 0.0);
        }
    }

    #[test]
    fn uniform_draws_stay_in_support_and_center() {
        let spec = NoiseSpec::uniform(5.0).unwrap();
        let mut r = rng(2);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let y = sample_noise(&spec, &mut r);
            assert!((-5.0..=5.0).contains(&y));
            sum += y;
        }
        assert!((sum / n as f64).abs() <= 0.05);
    }

    #[test]
    fn zero_alpha_leaves_age_untouched() {
        let src = fixtures::hospital_a();
        let out = perturb_table(&src, &PerturbationPolicy::hospital(0.0).unwrap(), &mut rng(3)).unwrap();
        assert_eq!(out.cell(0, "age"), Some(&Cell::Number(30.0)));
        assert_eq!(out, src.project(&["sno", "zipcode", "diseasename", "age", "medicine"]).unwrap());
    }

    #[test]
    fn uniform_ages_within_alpha() {
        let src = fixtures::hospital_a();
        let out = perturb_table(&src, &PerturbationPolicy::hospital(5.0).unwrap(), &mut rng(4)).unwrap();
        let before = src.numeric_column("age").unwrap();
        let after = out.numeric_column("age").unwrap();
        assert_eq!(before.len(), after.len());
        assert!(before.iter().zip(&after).all(|(x, z)| (z - x).abs() <= 5.0));
        assert_ne!(before, after);
        assert!(out.schema().index_of("personid").is_none());
        assert_eq!(out.cell(0, "diseasename"), src.cell(0, "diseasename"));
        assert_eq!(out.cell(0, "zipcode"), src.cell(0, "zipcode"));
    }

    #[test]
    fn same_seed_same_bytes() {
        let src = fixtures::hospital_b();
        let p = PerturbationPolicy::hospital(5.0).unwrap();
        let a = perturb_table(&src, &p, &mut rng(5)).unwrap().to_csv_bytes();
        let b = perturb_table(&src, &p, &mut rng(5)).unwrap().to_csv_bytes();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_schema_mismatches() {
        let src = fixtures::hospital_a();
        let mut p = PerturbationPolicy::default();
        p.perturb.insert("diseasename".into(), NoiseSpec::uniform(1.0).unwrap());
        assert!(matches!(perturb_table(&src, &p, &mut rng(0)), Err(PerturbError::PolicySchemaMismatch(_))));

        let mut p = PerturbationPolicy::default();
        p.perturb.insert("weight".into(), NoiseSpec::uniform(1.0).unwrap());
        assert!(perturb_table(&src, &p, &mut rng(0)).is_err());

        let mut p = PerturbationPolicy::hospital(1.0).unwrap();
        p.suppress.insert("age".into());
        assert!(perturb_table(&src, &p, &mut rng(0)).is_err());
    }

    #[test]
    fn clamp_and_round_options() {
        let src = fixtures::hospital_a();
        let mut p = PerturbationPolicy::hospital(50.0).unwrap();
        p.clamp = Some(ClampRange { min: 0.0, max: 120.0 });
        p.round_output = true;
        let out = perturb_table(&src, &p, &mut rng(6)).unwrap();
        for z in out.numeric_column("age").unwrap() {
            assert!((0.0..=120.0).contains(&z));
            assert_eq!(z, z.round());
        }
    }

    #[test]
    fn restriction_drops_missing_columns() {
        let p = PerturbationPolicy::hospital(5.0).unwrap();
        let schema = Schema::hospital().project(&["diseasename", "medicine"]).unwrap();
        let r = p.restricted_to(&schema);
        assert!(r.perturb.is_empty() && r.suppress.is_empty());
        assert!(r.validate(&schema).is_ok());
    }

    #[test]
    fn fixture_age_mean() {
        let ages = fixtures::hospital_a().numeric_column("age").unwrap();
        // 30+40+45+38+67+56+23+78+34+65 = 476
        let est = estimate_moments(&ages, &NoiseSpec::uniform(0.0).unwrap()).unwrap();
        assert!((est.est_mean - 47.6).abs() < 1e-12);
        assert_eq!(est.sample_count, 10);
    }

    #[test]
    fn zero_sigma_gives_plain_statistics() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let est = estimate_moments(&v, &NoiseSpec::gaussian(0.0).unwrap()).unwrap();
        assert_eq!(est.est_mean, 2.5);
        assert!((est.est_variance - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_singleton_columns() {
        let spec = NoiseSpec::gaussian(1.0).unwrap();
        assert_eq!(estimate_moments(&[], &spec), Err(PerturbError::EmptyColumn));
        let e = estimate_moments(&[7.0], &spec).unwrap();
        assert_eq!((e.est_mean, e.est_variance), (7.0, 0.0));
    }

    #[test]
    fn variance_floor_at_zero() {
        let e = estimate_moments(&[1.0, 1.1], &NoiseSpec::gaussian(10.0).unwrap()).unwrap();
        assert_eq!(e.est_variance, 0.0);
    }

    #[test]
    fn constant_column_gaussian_mean() {
        let schema = Schema::hospital();
        let spec = SyntheticSpec::hospital().with("age", ColumnDist::Constant { value: 50.0 });
        let t = gen_synthetic(10_000, 8, &schema, &spec).unwrap();
        let mut p = PerturbationPolicy::hospital(0.0).unwrap();
        let noise = NoiseSpec::gaussian(3.0).unwrap();
        p.perturb.insert("age".into(), noise);
        let out = perturb_table(&t, &p, &mut rng(8)).unwrap();
        let est = estimate_moments(&out.numeric_column("age").unwrap(), &noise).unwrap();
        assert!((49.88..=50.12).contains(&est.est_mean), "{}", est.est_mean);
    }
}
