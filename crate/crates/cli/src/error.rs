use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] multinorm::Error),
    #[error("{0}: {1}")]
    File(PathBuf, std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("check failed: {0}")]
    Check(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
