use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("state dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("dimension {requested} exceeds the configured cap of {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("Gram matrices differ (max entry deviation {0:.3e})")]
    GramMismatch(f64),

    #[error("state family is rank deficient (smallest Gram eigenvalue {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("effect expectation {0:.3e} lies outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid ontic model at {field}: {reason}")]
    InvalidModel { field: String, reason: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
