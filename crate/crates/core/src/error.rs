use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants map one-to-one onto the failure classes the CLI turns into
/// exit codes, so library callers and the front end agree on what went wrong.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("semantic error: {0}")]
    Semantic(String),

    /// The request exceeds what the dense algorithms are configured to handle.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("impossible outcome `{label}`: probability {probability:e}")]
    ImpossibleOutcome { label: String, probability: f64 },

    #[error("not a symmetry: {0}")]
    NotASymmetry(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
