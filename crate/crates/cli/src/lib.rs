//! Experiment driver for `isac-ee`: seeded Monte-Carlo sweeps, tradeoff
//! curves, CSV/SVG output and the acceptance checks behind `isac-ee verify`.

pub mod csvio;
pub mod plot;
pub mod sweep;
pub mod verify;

pub use sweep::{run_pareto, run_sweep, Algorithm, SummaryRow, SweepResult, SweepSpec, SweptParam, ThresholdScale, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] isac_ee::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
