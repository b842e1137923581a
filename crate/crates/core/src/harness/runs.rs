//! Experiment drivers.

use super::{ExperimentConfig, HarnessError, Method};
use crate::analysis::{mc_prob_decoding_order, prob_decoding_order, prob_decoding_order_approx, ProbParams};
use crate::baseline::{select_users, zf_precoders};
use crate::mma::{run, MmaConfig, MmaTrace, Variant};
use crate::model::{sample_channels, user_distances, ChannelSet, SystemParams};

/// One step of the splitmix64 generator.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for trial `trial` of a run with master seed `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master) ^ (trial as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

fn variant_of(m: Method) -> Option<Variant> {
    match m {
        Method::Cnoma => Some(Variant::Cnoma),
        Method::Anoma => Some(Variant::Anoma),
        Method::Zf => None,
    }
}

fn channels_for(cfg: &ExperimentConfig, seed: u64) -> Result<(SystemParams, ChannelSet), HarnessError> {
    let params = cfg.system_params(cfg.tx_snr_db[0])?;
    let d = user_distances(cfg.users, cfg.max_distance).map_err(|e| HarnessError::Config(e.to_string()))?;
    let ch = sample_channels(&params, &d, seed).map_err(|e| HarnessError::Failed(e.to_string()))?;
    Ok((params, ch))
}

/// Result of solving one channel draw with one method.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Sum rate of the returned precoders (`None` if nothing usable came out).
    pub sum_rate: Option<f64>,
    pub iterations: usize,
    pub failed: bool,
    pub trace: Option<MmaTrace>,
}

/// Solves one channel draw. Zero forcing serves a random subset of
/// `antennas` users when the cell is overloaded.
pub fn solve_trial(
    method: Method,
    channels: &ChannelSet,
    params: &SystemParams,
    cfg: &ExperimentConfig,
    seed: u64,
) -> TrialOutcome {
    match variant_of(method) {
        Some(v) => {
            let mut mc = MmaConfig::new(v);
            mc.convergence_delta = cfg.convergence_delta;
            mc.max_iterations = cfg.max_iterations;
            match run(channels, params, &mc, seed) {
                Ok((_, trace)) => TrialOutcome {
                    sum_rate: Some(trace.final_sum_rate()),
                    iterations: trace.iterations(),
                    failed: trace.failed,
                    trace: Some(trace),
                },
                Err(_) => TrialOutcome {
                    sum_rate: None,
                    iterations: 0,
                    failed: true,
                    trace: None,
                },
            }
        }
        None => {
            let zf = if channels.users() > channels.antennas() {
                select_users(channels, channels.antennas(), splitmix64(seed))
                    .ok()
                    .and_then(|idx| channels.subset(&idx).ok())
                    .and_then(|sub| zf_precoders(&sub, params.power, params.sigma).ok())
            } else {
                zf_precoders(channels, params.power, params.sigma).ok()
            };
            TrialOutcome {
                sum_rate: zf.as_ref().map(|z| z.sum_rate),
                iterations: 0,
                failed: zf.is_none(),
                trace: None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: Method,
    pub tx_snr_db: f64,
    pub mean_sum_rate: f64,
    pub std_err: f64,
    pub mean_iters: f64,
    pub failures: usize,
    pub trials: usize,
    /// Per-trial rates (`NaN` where the trial produced no precoders).
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, variant: Method, tx_snr_db: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.tx_snr_db == tx_snr_db)
    }
}

fn mean_and_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Average sum rate over `trials` channel draws at fixed distances, for each
/// method and transmit SNR. The same draws are reused across the SNR grid.
/// A trial whose optimizer hit a solver failure still contributes its best
/// feasible iterate but is counted in `failures`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    let draws: Vec<(u64, ChannelSet)> = (0..cfg.trials)
        .map(|t| {
            let seed = trial_seed(cfg.seed, t);
            channels_for(cfg, seed).map(|(_, ch)| (seed, ch))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &method in &cfg.variants {
        for &snr in &cfg.tx_snr_db {
            let params = cfg.system_params(snr)?;
            let mut rates = Vec::with_capacity(cfg.trials);
            let mut iters = Vec::new();
            let mut failures = 0;
            for (seed, ch) in &draws {
                let out = solve_trial(method, ch, &params, cfg, *seed);
                failures += out.failed as usize;
                rates.push(out.sum_rate.unwrap_or(f64::NAN));
                if out.sum_rate.is_some() {
                    iters.push(out.iterations as f64);
                }
            }
            let ok: Vec<f64> = rates.iter().copied().filter(|r| r.is_finite()).collect();
            let (mean, err) = mean_and_err(&ok);
            rows.push(SweepRow {
                variant: method,
                tx_snr_db: snr,
                mean_sum_rate: mean,
                std_err: err,
                mean_iters: mean_and_err(&iters).0,
                failures,
                trials: cfg.trials,
                rates,
            });
        }
    }
    Ok(SweepResult {
        scenario: cfg.scenario.clone(),
        seed: cfg.seed,
        rows,
    })
}

/// One optimizer trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub variant: Method,
    pub tx_snr_db: f64,
    pub trial: usize,
    pub trace: MmaTrace,
}

/// Full optimizer traces for every optimizing method, SNR point and trial.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRun>, HarnessError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &method in cfg.variants.iter().filter(|m| **m != Method::Zf) {
        let variant = variant_of(method).expect("optimizing method");
        for &snr in &cfg.tx_snr_db {
            let params = cfg.system_params(snr)?;
            for trial in 0..cfg.trials {
                let seed = trial_seed(cfg.seed, trial);
                let (_, ch) = channels_for(cfg, seed)?;
                let mut mc = MmaConfig::new(variant);
                mc.convergence_delta = cfg.convergence_delta;
                mc.max_iterations = cfg.max_iterations;
                let (_, trace) = run(&ch, &params, &mc, seed).map_err(|e| HarnessError::Failed(e.to_string()))?;
                out.push(ConvergenceRun {
                    variant: method,
                    tx_snr_db: snr,
                    trial,
                    trace,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub sigma2: f64,
    /// Distance of the swept user.
    pub distance: f64,
    pub closed_form: f64,
    pub closed_form_raw: f64,
    pub approx: f64,
    pub mc: f64,
    pub mc_se: f64,
}

/// `Pr(SINR_i^k > SINR_j^k)` with user `i` at `prob_d_fixed` and user `j`
/// swept over `prob_distances`, for each noise power; `trials` Monte Carlo
/// draws per point.
pub fn run_probability(cfg: &ExperimentConfig) -> Result<Vec<ProbabilityRow>, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point = 0usize;
    for &s2 in &cfg.prob_sigma2 {
        for &d in &cfg.prob_distances {
            let p = ProbParams::from_distances(cfg.prob_d_fixed, d, cfg.gamma, cfg.users, cfg.prob_k, s2);
            let cfe = |e: crate::analysis::AnalysisError| HarnessError::Config(e.to_string());
            let exact = prob_decoding_order(&p).map_err(cfe)?;
            let approx = prob_decoding_order_approx(&p).map_err(cfe)?;
            let (mc, mc_se) =
                mc_prob_decoding_order(&p, cfg.antennas, cfg.trials, trial_seed(cfg.seed, point)).map_err(cfe)?;
            point += 1;
            rows.push(ProbabilityRow {
                sigma2: s2,
                distance: d,
                closed_form: exact.value,
                closed_form_raw: exact.raw,
                approx: approx.value,
                mc,
                mc_se,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|t| trial_seed(42, t)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    #[test]
    fn standard_error_of_constant_is_zero() {
        assert_eq!(mean_and_err(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, e) = mean_and_err(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((e - 1.0).abs() < 1e-15);
    }
}
