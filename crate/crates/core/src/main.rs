use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noma_mma::analysis::complexity_estimate;
use noma_mma::harness::svg::{line_plot, Series};
use noma_mma::harness::{
    run_convergence, run_probability, run_sweep, solve_trial, trial_seed, write_convergence_csv,
    write_probability_csv, write_sweep_csv, ExperimentConfig, HarnessError, Method,
};
use noma_mma::mma::{build_subproblem, groups, init_state_for, Variant};
use noma_mma::model::{sample_channels, user_distances, SystemParams};

#[derive(Parser)]
#[command(name = "noma-mma", version, about = "NOMA MISO sum-rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average sum rate against transmit SNR.
    Sweep(Common),
    /// Per-iteration optimizer traces.
    Converge(Common),
    /// Decoding-order probability: closed form, approximation and simulation.
    Prob(Common),
    /// Subproblem size estimates next to measured block counts.
    Complexity(Common),
    /// Solve a single channel draw and print the trace.
    SolveOne(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (`key = value` lines), or a preset name such as fig3.
    #[arg(long)]
    config: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Restrict to one method: cnoma, anoma or zf.
    #[arg(long)]
    variant: Option<String>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

impl Common {
    fn load(&self, default_preset: &str) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            None => ExperimentConfig::preset(default_preset)?,
            Some(s) if Path::new(s).is_file() => ExperimentConfig::load(Path::new(s))?,
            Some(s) => ExperimentConfig::preset(s)
                .map_err(|_| HarnessError::Config(format!("`{s}` is neither a file nor a preset")))?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(v) = &self.variant {
            cfg.variants = vec![Method::parse(v)?];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
        let dir = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_svg(path: &Path, body: &str) -> Result<(), HarnessError> {
    std::fs::write(path, body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.load("fig3")?;
    let dir = c.out_dir(&cfg)?;
    let res = run_sweep(&cfg)?;
    let path = dir.join(format!("{}_sweep.csv", cfg.scenario));
    let mut w = create(&path)?;
    write_sweep_csv(&res, &mut w)?;
    w.flush()?;
    write_sweep_csv(&res, std::io::stdout().lock())?;
    println!("wrote {}", path.display());
    if c.svg {
        let series: Vec<Series> = cfg
            .variants
            .iter()
            .map(|&m| Series {
                label: m.name().to_string(),
                points: res
                    .rows
                    .iter()
                    .filter(|r| r.variant == m)
                    .map(|r| (r.tx_snr_db, r.mean_sum_rate))
                    .collect(),
            })
            .collect();
        let svg = line_plot(&cfg.scenario, "TX-SNR (dB)", "sum rate (bits/s/Hz)", &series);
        write_svg(&dir.join(format!("{}_sweep.svg", cfg.scenario)), &svg)?;
    }
    let failures: usize = res.rows.iter().map(|r| r.failures).sum();
    if failures > 0 {
        eprintln!("{failures} trial failures recorded");
    }
    Ok(())
}

fn converge(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.load("fig6")?;
    let dir = c.out_dir(&cfg)?;
    let runs = run_convergence(&cfg)?;
    let path = dir.join(format!("{}_converge.csv", cfg.scenario));
    let mut w = create(&path)?;
    write_convergence_csv(&cfg.scenario, &runs, &mut w)?;
    w.flush()?;
    for r in &runs {
        println!(
            "{} snr={} trial={} iterations={} to_delta={:?} final={:.4} converged={} failed={}",
            r.variant.name(),
            r.tx_snr_db,
            r.trial,
            r.trace.iterations(),
            r.trace.iterations_to(cfg.convergence_delta),
            r.trace.final_sum_rate(),
            r.trace.converged,
            r.trace.failed
        );
    }
    println!("wrote {}", path.display());
    if c.svg {
        let series: Vec<Series> = runs
            .iter()
            .filter(|r| r.trial == 0)
            .map(|r| {
                let mut pts = vec![(0.0, r.trace.initial_sum_rate)];
                pts.extend(
                    r.trace
                        .records
                        .iter()
                        .filter(|x| x.accepted)
                        .map(|x| (x.iteration as f64, x.sum_rate)),
                );
                Series {
                    label: format!("{} {} dB", r.variant.name(), r.tx_snr_db),
                    points: pts,
                }
            })
            .collect();
        let svg = line_plot(&cfg.scenario, "iteration", "sum rate (bits/s/Hz)", &series);
        write_svg(&dir.join(format!("{}_converge.svg", cfg.scenario)), &svg)?;
    }
    if runs.iter().any(|r| r.trace.failed) {
        return Err(HarnessError::Failed("at least one run hit a solver failure".into()));
    }
    Ok(())
}

fn prob(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.load("fig2")?;
    let dir = c.out_dir(&cfg)?;
    let rows = run_probability(&cfg)?;
    let path = dir.join(format!("{}_prob.csv", cfg.scenario));
    let mut w = create(&path)?;
    write_probability_csv(&cfg.scenario, &rows, &mut w)?;
    w.flush()?;
    write_probability_csv(&cfg.scenario, &rows, std::io::stdout().lock())?;
    println!("wrote {}", path.display());
    if c.svg {
        let mut series = Vec::new();
        for &s2 in &cfg.prob_sigma2 {
            let pick = |f: fn(&noma_mma::harness::ProbabilityRow) -> f64| -> Vec<(f64, f64)> {
                rows.iter().filter(|r| r.sigma2 == s2).map(|r| (r.distance, f(r))).collect()
            };
            series.push(Series { label: format!("closed form s2={s2}"), points: pick(|r| r.closed_form) });
            series.push(Series { label: format!("simulated s2={s2}"), points: pick(|r| r.mc) });
        }
        let svg = line_plot(&cfg.scenario, "distance of swept user (m)", "probability", &series);
        write_svg(&dir.join(format!("{}_prob.svg", cfg.scenario)), &svg)?;
    }
    Ok(())
}

fn complexity(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.load("fig3")?;
    let dir = c.out_dir(&cfg)?;
    let path = dir.join(format!("{}_complexity.csv", cfg.scenario));
    let mut w = create(&path)?;
    writeln!(
        w,
        "users,antennas,variant,geomean_blocks,constraints,measured_blocks,variables,soc_dimension,iteration_bound,flops"
    )?;
    let mut mismatch = false;
    for users in 2..=8usize {
        for antennas in [4usize, 8] {
            for v in [Variant::Cnoma, Variant::Anoma] {
                if !cfg.variants.iter().any(|m| m.name() == v.name()) {
                    continue;
                }
                let params = SystemParams::new(antennas, users, cfg.gamma, cfg.max_distance, cfg.sigma, 1.0)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let d = user_distances(users, cfg.max_distance).map_err(|e| HarnessError::Config(e.to_string()))?;
                let ch = sample_channels(&params, &d, cfg.seed).map_err(|e| HarnessError::Failed(e.to_string()))?;
                let st = init_state_for(&ch, &params, cfg.seed, v).map_err(|e| HarnessError::Failed(e.to_string()))?;
                let sub = build_subproblem(&st, &ch, &params, v).map_err(|e| HarnessError::Failed(e.to_string()))?;
                let stats = sub.program.stats();
                let geo = stats.group_count(groups::GEOMEAN);
                let est = complexity_estimate(users, antennas, geo, v);
                mismatch |= est.constraint_count != stats.blocks as u64;
                let line = format!(
                    "{users},{antennas},{},{geo},{},{},{},{},{},{}",
                    v.name(),
                    est.constraint_count,
                    stats.blocks,
                    est.variable_count,
                    est.soc_dimension_total,
                    est.iteration_bound,
                    est.flops()
                );
                writeln!(w, "{line}")?;
                println!("{line}");
            }
        }
    }
    w.flush()?;
    println!("wrote {}", path.display());
    if mismatch {
        return Err(HarnessError::Failed("measured block counts differ from the formulas".into()));
    }
    Ok(())
}

fn solve_one(c: &Common) -> Result<(), HarnessError> {
    let mut cfg = c.load("fig3")?;
    if c.variant.is_none() {
        cfg.variants = vec![Method::Cnoma];
    }
    let seed = trial_seed(cfg.seed, 0);
    for &snr in &cfg.tx_snr_db {
        let params = cfg.system_params(snr)?;
        let d = user_distances(cfg.users, cfg.max_distance).map_err(|e| HarnessError::Config(e.to_string()))?;
        let ch = sample_channels(&params, &d, seed).map_err(|e| HarnessError::Failed(e.to_string()))?;
        for &m in &cfg.variants {
            let out = solve_trial(m, &ch, &params, &cfg, seed);
            if let Some(t) = &out.trace {
                for r in &t.records {
                    println!(
                        "  {} snr={snr} it={} rate={:.6} status={:?} ipm_iters={}",
                        m.name(),
                        r.iteration,
                        r.sum_rate,
                        r.status,
                        r.solver_iterations
                    );
                }
            }
            match out.sum_rate {
                Some(rate) => println!("{} snr={snr} sum_rate={rate:.6} iterations={}", m.name(), out.iterations),
                None => return Err(HarnessError::Failed(format!("{} failed at {snr} dB", m.name()))),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Converge(c) => converge(c),
        Command::Prob(c) => prob(c),
        Command::Complexity(c) => complexity(c),
        Command::SolveOne(c) => solve_one(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
