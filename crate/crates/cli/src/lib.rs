//! Batch runner behind the `dyncirc` binary: equivalence checks, CNOT and
//! GHZ sweeps, error budgets and crossover maps, written as CSV with a JSON
//! sidecar.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Noise(#[from] dyncirc::noise::NoiseError),
    #[error(transparent)]
    Circuit(#[from] dyncirc::circuits::CircuitError),
    #[error(transparent)]
    Certify(#[from] dyncirc::certify::CertifyError),
    #[error(transparent)]
    Dense(#[from] dyncirc::dense_sim::DenseError),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type CliResult<T> = Result<T, CliError>;
