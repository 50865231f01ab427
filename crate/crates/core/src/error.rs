use thiserror::Error;

/// Errors produced by the integration framework.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid method configuration: {0}")]
    Config(String),

    #[error("Krylov projection did not converge within dimension {dimension} (residual estimate {residual:e})")]
    Convergence { dimension: usize, residual: f64 },

    #[error("{} diverged at step {step}", method.as_deref().unwrap_or("integration"))]
    Divergence { step: usize, method: Option<String> },

    #[error("invalid state: {0}")]
    State(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach a method name to a divergence error.
    pub fn with_method(self, name: &str) -> Self {
        match self {
            Error::Divergence { step, .. } => Error::Divergence {
                step,
                method: Some(name.to_string()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
