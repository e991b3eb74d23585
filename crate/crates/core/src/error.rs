use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid target: position {position} holds {value}, expected a value in 1..={n}")]
    InvalidTarget {
        position: usize,
        value: i64,
        n: usize,
    },
    #[error("length mismatch: header declares {expected} targets, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty domain")]
    EmptyDomain,
    #[error("invalid token {0:?}")]
    InvalidToken(String),
    #[error("enumeration too large: n = {n} exceeds the ceiling {ceiling}")]
    EnumerationTooLarge { n: usize, ceiling: usize },
    #[error("partition enumeration too large: m = {m} exceeds the ceiling {ceiling}")]
    PartitionTooLarge { m: usize, ceiling: usize },
    #[error("exact mode too large: n = {n} exceeds the ceiling {ceiling}")]
    ExactModeTooLarge { n: usize, ceiling: usize },
    #[error("series degree {degree} is below the requested index {n}")]
    DegreeTooSmall { degree: usize, n: usize },
    #[error("experiment too large: {0}")]
    ExperimentTooLarge(String),
    #[error("invalid series: coefficient {index} is {value}")]
    InvalidSeries { index: usize, value: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("tolerance error: {0} is outside (1e-12, 1e-3)")]
    Tolerance(f64),
    #[error("saddle bracket failure for n = {0}")]
    SaddleBracket(usize),
    #[error("maximizer bracket failure for n = {n}, eps = {eps}")]
    MaximizerBracket { n: usize, eps: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors raised because a request exceeds a configured ceiling.
    pub fn is_ceiling(&self) -> bool {
        matches!(
            self,
            Error::EnumerationTooLarge { .. }
                | Error::PartitionTooLarge { .. }
                | Error::ExactModeTooLarge { .. }
                | Error::DegreeTooSmall { .. }
                | Error::ExperimentTooLarge(_)
        )
    }

    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidTarget { .. }
                | Error::LengthMismatch { .. }
                | Error::EmptyDomain
                | Error::InvalidToken(_)
                | Error::InvalidSeries { .. }
                | Error::Domain(_)
                | Error::Tolerance(_)
        )
    }
}
