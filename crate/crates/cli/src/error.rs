use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        source: kronsample::Error,
    },
    #[error(transparent)]
    Model(#[from] kronsample::Error),
    #[error("{0}")]
    Threshold(String),
}

impl CliError {
    /// 2 configuration, 3 data, 4 comparison threshold, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Data { .. } => 3,
            CliError::Model(e) => match e {
                kronsample::Error::Config(_) => 2,
                kronsample::Error::Parse { .. }
                | kronsample::Error::EmptyData
                | kronsample::Error::DimensionMismatch(_) => 3,
                _ => 1,
            },
            CliError::Threshold(_) => 4,
        }
    }
}
