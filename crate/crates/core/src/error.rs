use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite state at step {step}")]
    BlowUp { step: usize },

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },

    #[error("rollout chunk {chunk}: {source}")]
    Chunk { chunk: usize, source: Box<Error> },

    #[error("degenerate feature {feature}: {reason}")]
    DegenerateFeature { feature: usize, reason: &'static str },

    #[error("relative squared error undefined for constant target")]
    ZeroVariance,

    #[error("training diverged at epoch {epoch} ({stage})")]
    Divergence { stage: &'static str, epoch: usize },

    #[error("state mismatch: {0}")]
    State(String),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Shape {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
