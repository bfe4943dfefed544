use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("design error: {0}")]
    Design(String),
    #[error("separation detected: {0}")]
    Separation(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("shape error: expected {expected} features, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("state error: {0}")]
    State(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unstable bootstrap: {0}")]
    Instability(String),
    #[error("fold {fold} has a single-class training set; use stratified folds")]
    StratificationRequired { fold: usize },
    #[error("generator spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse grouping used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration, schema or encoding mismatch.
    Config,
    /// Data violates integrity or labelling constraints.
    Data,
    /// Numerical failure or non-convergence.
    Numeric,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Schema(_)
            | Error::Encoding(_)
            | Error::Config(_)
            | Error::Shape { .. }
            | Error::State(_)
            | Error::Spec(_)
            | Error::Json(_) => ErrorCategory::Config,
            Error::Integrity(_)
            | Error::Label(_)
            | Error::Design(_)
            | Error::DegenerateSample(_)
            | Error::Domain(_)
            | Error::StratificationRequired { .. } => ErrorCategory::Data,
            Error::Separation(_)
            | Error::Numeric(_)
            | Error::Convergence(_)
            | Error::Instability(_) => ErrorCategory::Numeric,
            Error::Io(_) | Error::Csv(_) => ErrorCategory::Io,
        }
    }
}
