use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (dimensions, ranges, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine produced a non-finite value or failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("modified prior undefined: {0}")]
    ModifiedPriorUndefined(String),

    #[error("marginal undefined: {0}")]
    MarginalUndefined(String),

    #[error("posterior mass escapes grid: boundary density ratio {ratio:e} exceeds {limit:e}")]
    MassEscapesGrid { ratio: f64, limit: f64 },

    #[error("non-normalizable posterior: {0}")]
    NonNormalizable(String),

    #[error("all importance weights are zero")]
    AllWeightsZero,

    #[error("normalizer vanished")]
    NormalizerVanished,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
