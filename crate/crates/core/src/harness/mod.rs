//! Seeded Monte Carlo experiments over channel draws, with CSV and SVG
//! output.

use thiserror::Error;

pub mod config;
pub mod output;
pub mod runs;
pub mod svg;

pub use config::{ExperimentConfig, Method};
pub use output::{write_convergence_csv, write_probability_csv, write_sweep_csv, SWEEP_HEADER};
pub use runs::{
    run_convergence, run_probability, run_sweep, solve_trial, trial_seed, ConvergenceRun, ProbabilityRow,
    SweepResult, SweepRow, TrialOutcome,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl HarnessError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
