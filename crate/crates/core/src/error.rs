use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("numeric instability: {0}")]
    NumericInstability(String),
    #[error("iteration diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by size or memory guards.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericInstability(_) | Error::Diverged { .. } | Error::Indeterminate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
