//! Experiment drivers for the `epbm` command: convergence studies,
//! stability exports, thread scaling, coefficient dumps and single runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
