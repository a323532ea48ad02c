//! Experiment commands: data generation, training, evaluation, gradient checks and
//! plot export.

pub mod app;
pub mod config;
mod error;
pub mod gradcheck;
pub mod plot;

pub use app::{run, Cli};
pub use config::{ExperimentConfig, ModelChoice};
pub use error::{CliError, Result};

/// Caps the global thread pool at `COMPOL_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("COMPOL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("COMPOL_THREADS={raw} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}
