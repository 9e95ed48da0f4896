//! Command layer behind the `medshare` binary: run configs, end-to-end
//! runs in the simulator, transcript audits, the moment-recovery
//! experiment and small demos. Everything here is usable as a library.

pub mod audit;
pub mod config;
pub mod demo;
pub mod run;
pub mod stats;

use std::path::{Path, PathBuf};

use crate::datastore::DataError;
use crate::transport::{SimError, TranscriptError};

pub use audit::{audit, audit_file, source_anonymity, AuditReport, CheckResult};
pub use config::{NetworkConfig, ProviderSource, RunConfig, StatsConfig, SyntheticSource};
pub use demo::{gen_data, gen_data_to, keys_demo};
pub use run::{load_source, run_end_to_end, run_session, RunReport, SessionRun};
pub use stats::{stats_experiment, write_stats_csv, StatsRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no provider holds matching data")]
    NoProviders,
    #[error("partial provider failure: {0}")]
    PartialProviderFailure(String),
    #[error("decryption failed: {0}")]
    DecryptFailure(String),
    #[error("audit failed: {0}")]
    AuditFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Perturb(#[from] crate::perturb::PerturbError),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Perturb(_) => 2,
            Self::NoProviders => 3,
            Self::PartialProviderFailure(_) | Self::Sim(_) => 4,
            Self::DecryptFailure(_) => 5,
            Self::AuditFailed(_) => 6,
            Self::Io { .. } | Self::Data(_) | Self::Transcript(_) => 1,
        }
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
