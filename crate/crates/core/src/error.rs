use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element id {id} out of range for a carrier of size {n}")]
    OutOfRange { id: usize, n: usize },

    #[error("cover relation contains a cycle: {0:?}")]
    Cycle(Vec<usize>),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unbound constant `#{0}`")]
    UnboundConstant(String),

    #[error("no value for variable `{0}`")]
    MissingVariable(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("malformed encoding: {0}")]
    Encoding(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse { pos, msg: msg.into() }
    }

    /// Budget refusals are not mathematical failures; callers that map errors
    /// to exit codes need to tell the two apart.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_))
    }

    pub fn is_verification(&self) -> bool {
        matches!(self, Error::Verification(_))
    }
}
