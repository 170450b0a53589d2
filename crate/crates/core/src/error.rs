use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no C-alpha atoms found for chain '{chain}'")]
    EmptyDomain { chain: char },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbit table built for {table} but counting requested {requested}")]
    ConfigMismatch { table: String, requested: String },

    #[error("stream has {events} events, brute-force oracle accepts at most {limit}")]
    OracleRefused { events: usize, limit: usize },

    #[error("stratification: {0}")]
    Stratification(String),

    #[error("targets contain a single class; binary training needs both")]
    DegenerateTargets,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical: {0}")]
    Numerical(String),

    #[error("incomplete predictions: {0}")]
    Incomplete(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
