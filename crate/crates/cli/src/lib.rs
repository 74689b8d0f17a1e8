//! Command-line pipeline: generate data, train the explicit model, compute
//! kernel Gram matrices, fit SVMs and summarise over seeds.

pub mod config;
pub mod pipeline;

use thiserror::Error;

pub use config::{BackendChoice, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}
