use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("CFL violation at step {step}: dt = {dt:e} exceeds admissible {admissible:e}")]
    CflViolation { step: usize, dt: f64, admissible: f64 },

    #[error("solution diverged at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },

    #[error("infeasible cover: {bound} violated ({detail})")]
    InfeasibleCover { bound: &'static str, detail: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("cutoff construction failed for cover element {index}: {source}")]
    CutoffElement {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
