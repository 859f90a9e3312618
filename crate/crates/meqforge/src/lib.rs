//! Batch front end for `meqforge-core`: JSON run configurations, parameter
//! sweeps, and CSV / JSON / Matrix Market exports.

use std::path::PathBuf;

pub mod config;
pub mod export;
pub mod run;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use run::{run, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration; `path` locates the offending entry, e.g.
    /// `baths[0].T`.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {1}", path = .0.display())]
    Io(PathBuf, std::io::Error),

    #[error(transparent)]
    Core(#[from] meqforge_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}
