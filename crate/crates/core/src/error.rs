use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the clustering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("missing values present in rows {rows:?}")]
    MissingValues { rows: Vec<usize> },
    #[error("no comparable features between rows {i} and {j}")]
    NoComparableFeatures { i: usize, j: usize },
    #[error("affinity graph is disconnected; isolated rows: {rows:?}")]
    Disconnected { rows: Vec<usize> },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("eigen-decomposition failed: {0}")]
    Linalg(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
