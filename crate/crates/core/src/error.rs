use thiserror::Error;

/// Errors surfaced by the laboratory.
#[derive(Debug, Error)]
pub enum QexError {
    #[error("invalid group construction: {0}")]
    InvalidGroup(String),

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("representation error: {0}")]
    Representation(String),

    #[error("product mapping error: {0}")]
    ProductMapping(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical method failed: {0}")]
    Numerical(String),

    #[error("invalid channel expression: {0}")]
    Channel(String),

    #[error("reduction parameters infeasible: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
