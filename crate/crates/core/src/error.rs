use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant does not hold; the message names it.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid reward matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("operation `{op}` is not supported for the `{family}` family")]
    UnsupportedFamily { op: &'static str, family: &'static str },

    #[error("empty sample")]
    EmptySample,

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("gain vector for prompt {prompt} has horizon {horizon}, budget is {budget}")]
    HorizonTooShort {
        prompt: usize,
        horizon: usize,
        budget: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("comparison budget N={n} outside 1..={width}")]
    InvalidComparisonBudget { n: usize, width: usize },

    #[error("matrix width {width} is smaller than the required {required}")]
    WidthTooSmall { width: usize, required: usize },

    #[error("reward pool for prompt `{prompt}` has {available} entries, {required} required")]
    PoolExhausted {
        prompt: String,
        available: usize,
        required: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate prompt id `{0}`")]
    DuplicatePrompt(String),

    #[error("unknown prompt id `{0}`")]
    UnknownPrompt(String),

    #[error("universe of {available} prompts cannot fill a batch of {required}")]
    UniverseTooSmall { available: usize, required: usize },

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
