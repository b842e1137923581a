//! Minorization-maximization over the convexified sum-rate problem.

mod driver;
pub mod minorant;
mod state;
pub mod subproblem;

use thiserror::Error;

use crate::conic::ProgramError;
use crate::model::ModelError;

pub use driver::{
    run, run_from, step, IterationRecord, MmaConfig, MmaTrace, StepOutcome, Variant,
};
pub use minorant::{bilinear_convex_upper, minorant_quadratic};
pub use state::{init_state, init_state_for, initial_powers, initial_precoders, MmaState};
pub use subproblem::{build_subproblem, groups, Subproblem, SubproblemPoint, VarLayout};

#[derive(Debug, Error, PartialEq)]
pub enum MmaError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
