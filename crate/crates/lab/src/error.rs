use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] spde_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("{excluded} of {requested} replications blew up (more than 1%)")]
    TooManyExclusions { excluded: usize, requested: usize },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    /// Stable tag for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Core(e) => e.kind(),
            LabError::Io { .. } => "io",
            LabError::Json(_) => "json",
            LabError::Toml(_) => "toml",
            LabError::Plan(_) => "invalid_plan",
            LabError::TooManyExclusions { .. } => "too_many_exclusions",
            LabError::Pool(_) => "thread_pool",
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
