use std::path::PathBuf;

/// Failures that stop a run before or while writing results.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Scenario(#[from] phasecoop_core::Error),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("scheme: {0}")]
    Scheme(String),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}
