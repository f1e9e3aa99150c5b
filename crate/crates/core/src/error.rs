use thiserror::Error;

/// Errors produced by the oracle, data generators, numeric kernels and training loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{0}` appears in more than one group")]
    OverlappingGroups(String),

    #[error("variable group is empty")]
    EmptyGroup,

    #[error("table over {vars} variables exceeds the enumerable limit of {max}")]
    Capacity { vars: usize, max: usize },

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (divergence, non-finite values) as
    /// opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
