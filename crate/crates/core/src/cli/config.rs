use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datastore::{Query, Schema, SyntheticSpec};
use crate::perturb::{NoiseSpec, PerturbationPolicy};
use crate::roles::Timeouts;
use crate::transport::SimConfig;

use super::CliError;

/// Where a provider's table comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSource {
    pub identity: String,
    /// CSV file in the shared schema. Relative paths resolve against the
    /// config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub n: usize,
    pub seed: u64,
    /// Defaults to hospital-shaped records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub base_latency_us: u64,
    pub jitter_us: u64,
    pub step_cap: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            base_latency_us: d.base_latency_us,
            jitter_us: d.jitter_us,
            step_cap: d.step_cap,
        }
    }
}

/// Grid for the moment-recovery experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub sizes: Vec<usize>,
    pub specs: Vec<NoiseSpec>,
    pub true_mean: f64,
    pub true_std_dev: f64,
    pub repetitions: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 1_000, 10_000],
            specs: vec![
                NoiseSpec::Uniform { alpha: 0.0 },
                NoiseSpec::Uniform { alpha: 5.0 },
                NoiseSpec::Uniform { alpha: 10.0 },
                NoiseSpec::Gaussian { sigma: 3.0 },
            ],
            true_mean: 50.0,
            true_std_dev: 10.0,
            repetitions: 10,
        }
    }
}

fn default_m() -> usize {
    8
}

fn default_policy() -> PerturbationPolicy {
    PerturbationPolicy::hospital(5.0).expect("valid default")
}

fn default_query() -> Query {
    Query::any("diseasename")
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything one reproducible run needs. Loaded from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub providers: Vec<ProviderSource>,
    #[serde(default = "default_policy")]
    pub policy: PerturbationPolicy,
    #[serde(default = "default_query")]
    pub query: Query,
    #[serde(default)]
    pub timeouts: Timeouts,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub stats: StatsConfig,
}

impl RunConfig {
    /// A config with defaults everywhere except the seed and providers.
    pub fn new(seed: u64, providers: Vec<ProviderSource>) -> Self {
        Self {
            seed,
            m: default_m(),
            providers,
            policy: default_policy(),
            query: default_query(),
            timeouts: Timeouts::default(),
            network: NetworkConfig::default(),
            out_dir: default_out(),
            stats: StatsConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parse and resolve relative CSV paths against the file's directory.
    /// `out_dir` stays relative to the working directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut cfg.providers {
            if let Some(csv) = &p.csv {
                if csv.is_relative() {
                    p.csv = Some(base.join(csv));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if self.providers.is_empty() {
            return bad("at least one provider is required".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.providers {
            if p.identity.is_empty() || !seen.insert(&p.identity) {
                return bad(format!("provider identity {:?} is empty or repeated", p.identity));
            }
            if p.csv.is_some() == p.synthetic.is_some() {
                return bad(format!("provider {} needs exactly one of csv or synthetic", p.identity));
            }
        }
        let schema = Schema::hospital();
        self.policy
            .validate(&schema)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.query
            .validate(&schema)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            seed: u64::from_be_bytes(crate::seed::derive(self.seed, "network")[..8].try_into().expect("8 bytes")),
            step_cap: self.network.step_cap,
            base_latency_us: self.network.base_latency_us,
            jitter_us: self.network.jitter_us,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_json(r#"{"seed":7,"providers":[{"identity":"h","csv":"a.csv"}]}"#).unwrap();
        assert_eq!(cfg.m, 8);
        assert_eq!(cfg.query, Query::any("diseasename"));
        assert_eq!(cfg.timeouts.ack_deadline_ms, 2_000);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn seed_is_required() {
        assert!(RunConfig::from_json(r#"{"providers":[]}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = RunConfig::new(1, vec![]);
        assert!(cfg.validate().is_err());
        cfg.providers.push(ProviderSource {
            identity: "h".into(),
            csv: Some("a.csv".into()),
            synthetic: None,
        });
        cfg.m = 1;
        assert!(cfg.validate().is_err());
        cfg.m = 2;
        assert!(cfg.validate().is_ok());
        cfg.providers.push(cfg.providers[0].clone());
        assert!(cfg.validate().is_err());
        cfg.providers.pop();
        cfg.providers[0].synthetic = Some(SyntheticSource { n: 1, seed: 1, spec: None });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"seed":1,"mm":3}"#).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"seed":1,"providers":[{"identity":"h","csv":"data/a.csv"}]}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.providers[0].csv.as_ref().unwrap(), &dir.path().join("data/a.csv"));
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }
}
