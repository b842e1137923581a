//! The minorization-maximization loop.

use std::time::{Duration, Instant};

use super::subproblem::{build_subproblem, SubproblemPoint};
use super::{init_state_for, MmaError, MmaState};
use crate::conic::{self, SolveStatus, SolverSettings};
use crate::model::{self, ChannelSet, PrecoderSet, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Every decoder of message `k` must support its rate.
    Cnoma,
    /// Only the intended user's SINR is kept.
    Anoma,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Cnoma => "cnoma",
            Variant::Anoma => "anoma",
        }
    }

    /// The sum rate this variant optimizes.
    pub fn sum_rate(
        self,
        channels: &ChannelSet,
        precoders: &PrecoderSet,
        sigma: f64,
    ) -> Result<f64, MmaError> {
        Ok(match self {
            Variant::Cnoma => model::sum_rate_cnoma(channels, precoders, sigma)?,
            Variant::Anoma => model::sum_rate_anoma(channels, precoders, sigma)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmaConfig {
    pub variant: Variant,
    /// Stop once successive sum rates differ by at most this (bits/s/Hz).
    pub convergence_delta: f64,
    pub max_iterations: usize,
    pub solver: SolverSettings,
}

impl MmaConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            convergence_delta: 1e-2,
            max_iterations: 100,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), MmaError> {
        if !(self.convergence_delta > 0.0) {
            return Err(MmaError::Config("convergence delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// `sum_k log2 r_k` at the accepted state; equals the variant's sum rate.
    pub objective: f64,
    /// Optimal value of the subproblem (geometric mean of `r`).
    pub subproblem_value: f64,
    /// Sum rate of the variant being optimized.
    pub sum_rate: f64,
    /// Sum rate under the complete formulation.
    pub sum_rate_cnoma: f64,
    pub status: SolveStatus,
    pub solver_iterations: usize,
    pub accepted: bool,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MmaTrace {
    pub initial_sum_rate: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Set when an iteration failed before convergence.
    pub failed: bool,
    /// Iteration (0 for the initial point) whose precoders were returned.
    pub best_iteration: usize,
}

impl MmaTrace {
    /// Number of subproblems solved successfully.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    pub fn final_sum_rate(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.sum_rate)
            .fold(self.initial_sum_rate, f64::max)
    }

    /// Iterations needed until the sum rate changed by at most `delta`.
    pub fn iterations_to(&self, delta: f64) -> Option<usize> {
        let mut prev = self.initial_sum_rate;
        for rec in self.records.iter().filter(|r| r.accepted) {
            if (rec.sum_rate - prev).abs() <= delta {
                return Some(rec.iteration);
            }
            prev = rec.sum_rate;
        }
        None
    }
}

/// Outcome of a single iteration, including the raw subproblem point.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: MmaState,
    pub record: IterationRecord,
    pub point: Option<SubproblemPoint>,
}

/// Solves one subproblem and returns the next state, tight at the new
/// precoders. On solver failure the previous state is returned unchanged and
/// the record is marked as not accepted.
pub fn step(
    state: &MmaState,
    channels: &ChannelSet,
    params: &SystemParams,
    config: &MmaConfig,
) -> Result<StepOutcome, MmaError> {
    step_numbered(state, channels, params, config, 1)
}

fn step_numbered(
    state: &MmaState,
    channels: &ChannelSet,
    params: &SystemParams,
    config: &MmaConfig,
    iteration: usize,
) -> Result<StepOutcome, MmaError> {
    let start = Instant::now();
    let sub = build_subproblem(state, channels, params, config.variant)?;
    let sol = conic::solve(&sub.program, &config.solver);
    let mut record = IterationRecord {
        iteration,
        objective: state.log_objective(),
        subproblem_value: sol.objective_value,
        sum_rate: config.variant.sum_rate(channels, &state.precoders, params.sigma)?,
        sum_rate_cnoma: model::sum_rate_cnoma(channels, &state.precoders, params.sigma)?,
        status: sol.status,
        solver_iterations: sol.iterations,
        accepted: false,
        wall_time: Duration::ZERO,
    };
    if sol.status != SolveStatus::Optimal {
        record.wall_time = start.elapsed();
        return Ok(StepOutcome {
            state: state.clone(),
            record,
            point: None,
        });
    }
    let point = sub.layout.extract(&sol.x);
    let mut precoders = point.precoders.clone();
    let total = precoders.total_power();
    if total > params.power {
        precoders = precoders.scaled((params.power / total).sqrt().into());
    }
    let next = MmaState::tight(channels, precoders, params.sigma, config.variant)?;
    record.objective = next.log_objective();
    record.sum_rate = config.variant.sum_rate(channels, &next.precoders, params.sigma)?;
    record.sum_rate_cnoma = model::sum_rate_cnoma(channels, &next.precoders, params.sigma)?;
    record.accepted = true;
    record.wall_time = start.elapsed();
    Ok(StepOutcome {
        state: next,
        record,
        point: Some(point),
    })
}

/// Runs from [`init_state`](super::init_state) until the sum rate settles or
/// the iteration cap is reached, returning the best precoders seen.
pub fn run(
    channels: &ChannelSet,
    params: &SystemParams,
    config: &MmaConfig,
    seed: u64,
) -> Result<(PrecoderSet, MmaTrace), MmaError> {
    let state = init_state_for(channels, params, seed, config.variant)?;
    run_from(state, channels, params, config)
}

/// As [`run`] from a given starting state.
pub fn run_from(
    mut state: MmaState,
    channels: &ChannelSet,
    params: &SystemParams,
    config: &MmaConfig,
) -> Result<(PrecoderSet, MmaTrace), MmaError> {
    config.validate()?;
    let initial = config.variant.sum_rate(channels, &state.precoders, params.sigma)?;
    let mut trace = MmaTrace {
        initial_sum_rate: initial,
        ..MmaTrace::default()
    };
    let mut best = (initial, state.precoders.clone(), 0);
    let mut prev = initial;
    for it in 1..=config.max_iterations {
        let out = step_numbered(&state, channels, params, config, it)?;
        let accepted = out.record.accepted;
        let rate = out.record.sum_rate;
        trace.records.push(out.record);
        if !accepted {
            trace.failed = true;
            break;
        }
        state = out.state;
        if rate > best.0 {
            best = (rate, state.precoders.clone(), it);
        }
        if (rate - prev).abs() <= config.convergence_delta {
            trace.converged = true;
            break;
        }
        prev = rate;
    }
    trace.best_iteration = best.2;
    Ok((best.1, trace))
}
