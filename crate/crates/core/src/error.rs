use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what} = {value} is out of range ({expected})")]
    OutOfRange {
        what: &'static str,
        value: String,
        expected: String,
    },

    #[error("invalid cycle type: sum of k*a_k is {sum}, expected {n}")]
    InvalidCycleType { sum: usize, n: usize },

    #[error("permutation is not a derangement")]
    NotADerangement,

    #[error("empirical measure has no samples")]
    EmptyMeasure,

    #[error("goodness-of-fit test needs at least 2 bins after merging, got {0}")]
    TooFewBins(usize),

    #[error("degenerate least-squares design: {0}")]
    DegenerateFit(String),

    #[error("internal consistency failure: {0}")]
    Inconsistency(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        expected: impl Into<String>,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            expected: expected.into(),
        }
    }

    /// Process exit code: 2 for internal consistency failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Inconsistency(_) => 2,
            _ => 1,
        }
    }
}
