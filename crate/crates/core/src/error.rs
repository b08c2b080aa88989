use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("center set is empty")]
    EmptyCenters,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} centers from {available} points")]
    TooManyCenters { requested: usize, available: usize },

    #[error("no feasible guess: every Opt guess discarded too many points")]
    NoFeasibleGuess,

    #[error("sample empty, z too large (sampled {size} points, need {k})")]
    SampleTooSmall { size: usize, k: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("oracle search space too large ({0} combinations)")]
    OracleTooLarge(u128),

    #[error("deadline exceeded")]
    Timeout,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Timeout => 3,
            Error::NoFeasibleGuess | Error::SampleTooSmall { .. } => 4,
            _ => 2,
        }
    }
}
