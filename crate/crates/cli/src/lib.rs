//! Experiment harness: seeded parameter sweeps written as CSV or JSON tables.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

pub use commands::{cmd_bounds, cmd_erm, cmd_junta, cmd_swap_risk};
pub use config::Config;
pub use output::Format;
pub use verify::{cmd_verify, cmd_verify_with, FidelityFn};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "LINOPT_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Library(#[from] linopt::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Library(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

/// Where and how a command writes its table.
#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    /// Output file; stdout when absent.
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Runs `f` on a rayon pool with `workers` threads (global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--workers must be ≥ 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
