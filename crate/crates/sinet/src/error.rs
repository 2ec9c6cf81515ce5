use thiserror::Error;

/// Errors surfaced by construction, evaluation, and parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input length {got} does not match network input dimension {expected}")]
    InputShape { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("stacked networks have unequal depths ({0} vs {1}); pad or use stack_padded")]
    UnequalDepths(usize, usize),

    #[error("parse error{}: {msg}", .layer.map(|l| format!(" at layer {l}")).unwrap_or_default())]
    Parse { layer: Option<usize>, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity exceeded: {samples} samples, limit N^2*L = {limit}")]
    Capacity { samples: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, Error>;
