use thiserror::Error;

/// Errors surfaced by representation, coupling, and feature operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("decomposition incomplete: {residual} of {dim} dimensions unaccounted for")]
    DecompositionIncomplete { dim: usize, residual: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing coupling table: {0}")]
    MissingTable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
