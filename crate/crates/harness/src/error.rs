use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] epbm_core::Error),

    #[error("determinism failure: {0}")]
    Determinism(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status: 2 configuration, 3 divergence, 4 determinism.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(epbm_core::Error::Config(_) | epbm_core::Error::Parameter(_)) => 2,
            HarnessError::Core(epbm_core::Error::Divergence { .. }) => 3,
            HarnessError::Determinism(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
