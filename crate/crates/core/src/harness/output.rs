//! CSV emission.

use std::io::Write;

use super::{ConvergenceRun, ProbabilityRow, SweepResult};

pub const SWEEP_HEADER: &str = "scenario,variant,tx_snr_db,mean_sum_rate,std_err,mean_iters,failures,trials,seed";

pub fn write_sweep_csv<W: Write>(res: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &res.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            res.scenario,
            r.variant.name(),
            r.tx_snr_db,
            r.mean_sum_rate,
            r.std_err,
            r.mean_iters,
            r.failures,
            r.trials,
            res.seed
        )?;
    }
    Ok(())
}

/// One row per iteration; iteration 0 is the starting point.
pub fn write_convergence_csv<W: Write>(scenario: &str, runs: &[ConvergenceRun], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "scenario,variant,tx_snr_db,trial,iteration,sum_rate,delta,objective,solver_status,solver_iterations"
    )?;
    for run in runs {
        let t = &run.trace;
        writeln!(
            w,
            "{scenario},{},{},{},0,{},,,,",
            run.variant.name(),
            run.tx_snr_db,
            run.trial,
            t.initial_sum_rate
        )?;
        let mut prev = t.initial_sum_rate;
        for rec in &t.records {
            let delta = if rec.accepted { rec.sum_rate - prev } else { f64::NAN };
            writeln!(
                w,
                "{scenario},{},{},{},{},{},{},{},{:?},{}",
                run.variant.name(),
                run.tx_snr_db,
                run.trial,
                rec.iteration,
                rec.sum_rate,
                delta,
                rec.objective,
                rec.status,
                rec.solver_iterations
            )?;
            if rec.accepted {
                prev = rec.sum_rate;
            }
        }
    }
    Ok(())
}

pub fn write_probability_csv<W: Write>(scenario: &str, rows: &[ProbabilityRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scenario,sigma2,distance,closed_form,closed_form_raw,approx,mc,mc_se")?;
    for r in rows {
        writeln!(
            w,
            "{scenario},{},{},{},{},{},{},{}",
            r.sigma2, r.distance, r.closed_form, r.closed_form_raw, r.approx, r.mc, r.mc_se
        )?;
    }
    Ok(())
}
