#![allow(dead_code)]

use medshare::cli::{ProviderSource, RunConfig, SyntheticSource};

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn csv_provider(identity: &str, file: &str) -> ProviderSource {
    ProviderSource {
        identity: identity.into(),
        csv: Some(fixture(file)),
        synthetic: None,
    }
}

pub fn synthetic_provider(identity: &str, n: usize, seed: u64) -> ProviderSource {
    ProviderSource {
        identity: identity.into(),
        csv: None,
        synthetic: Some(SyntheticSource { n, seed, spec: None }),
    }
}

/// Two fixture hospitals plus one synthetic clinic.
pub fn golden_config(seed: u64) -> RunConfig {
    RunConfig::new(
        seed,
        vec![
            csv_provider("hospital-a", "hospital_a.csv"),
            csv_provider("hospital-b", "hospital_b.csv"),
            synthetic_provider("clinic-c", 25, 7),
        ],
    )
}

/// `k` synthetic providers with distinct data.
pub fn synthetic_config(seed: u64, k: usize, m: usize) -> RunConfig {
    let mut cfg = RunConfig::new(
        seed,
        (0..k)
            .map(|i| synthetic_provider(&format!("site-{i}"), 12 + i, seed * 31 + i as u64))
            .collect(),
    );
    cfg.m = m;
    cfg
}
