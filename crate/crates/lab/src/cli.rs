//! The `spde` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use spde_core::estimator::{augmented_mle_with, EstimateReport};
use spde_core::kernels::asymptotic_variance_sigma;
use spde_core::simulator::{simulate_linear_exact, simulate_semilinear_fd, Scheme, TrajectoryRecorder};

use crate::error::Result;
use crate::experiments::{coverage_table, qq_table, rates_table, run_plan, simulate_and_measure, Cell};
use crate::fft::FftSineTransform;
use crate::io::{config_hash, read_series, write_json, write_plan_outputs, write_series, write_trajectory};
use crate::plan::{Equation, ExperimentPlan, PlanMode};

#[derive(Debug, Parser)]
#[command(name = "spde", version, about = "Simulate semilinear stochastic heat equations and estimate the diffusivity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory, optionally dumping the field.
    Simulate(SimulateArgs),
    /// Simulate, measure and estimate once (or estimate from a stored series).
    Estimate(EstimateArgs),
    /// Run the plan in the mode given by the config.
    Mc(PlanArgs),
    /// RMSE against δ with log-log slope fits.
    Rates(PlanArgs),
    /// Normal Q-Q data of the normalised errors.
    Qq(PlanArgs),
    /// Empirical coverage of the confidence intervals.
    Coverage(PlanArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PlanArgs {
    /// JSON or TOML plan file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// linear, allen_cahn or burgers.
    #[arg(long)]
    pub equation: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Comma-separated resolutions.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Option<Vec<f64>>,
    /// Comma-separated kernel centres.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Number of grid intervals M.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of time steps N.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// N = 10⁵ steps and 5000 replications (flags still override).
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Write the field as CSV with a JSON sidecar.
    #[arg(long)]
    pub dump: bool,
    /// Keep every k-th time step.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Estimate from a stored series (CSV with its JSON metadata) instead of simulating.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl PlanArgs {
    /// Config file (or defaults), then `--paper-scale`, then individual flags.
    pub fn resolve(&self) -> Result<ExperimentPlan> {
        let mut plan = match &self.config {
            Some(path) => ExperimentPlan::from_path(path)?,
            None => ExperimentPlan::default(),
        };
        if self.paper_scale {
            plan = plan.paper_scale();
        }
        if let Some(e) = &self.equation {
            plan.equation = Equation::parse(e)?;
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = &self.$flag {
                    plan.$field = v.clone();
                }
            )*};
        }
        set!(theta => theta, sigma => sigma, gamma => gamma, delta => deltas, x0 => x0s,
             grid => intervals, steps => time_steps, reps => replications, seed => base_seed);
        if let Some(out) = &self.out {
            plan.out = Some(out.to_string_lossy().into_owned());
        }
        Ok(plan)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn out_dir(plan: &ExperimentPlan) -> PathBuf {
    PathBuf::from(plan.out.clone().unwrap_or_else(|| "spde-out".to_string()))
}

pub fn run(cli: Cli) -> Result<Value> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Estimate(args) => estimate(&args),
        Command::Mc(args) => monte_carlo(&args, None),
        Command::Rates(args) => monte_carlo(&args, Some(PlanMode::Rates)),
        Command::Qq(args) => monte_carlo(&args, Some(PlanMode::Qq)),
        Command::Coverage(args) => monte_carlo(&args, Some(PlanMode::Coverage)),
    }
}

fn simulate(args: &SimulateArgs) -> Result<Value> {
    let plan = args.plan.resolve()?;
    plan.validate()?;
    let spec = plan.kernel_spec()?;
    let seed = Cell::new(&plan, &spec, 0, 0)?.seed(&plan, 0);
    let mut config = plan.sim_config(seed)?;
    config.stride = args.stride.max(1);
    let grid = config.grid()?;
    let mut recorder = TrajectoryRecorder::with_transform(grid, config.stride, seed, FftSineTransform::new(grid));
    match config.scheme {
        Scheme::SpectralExact => simulate_linear_exact(&config, config.mode_count(), &mut recorder)?,
        Scheme::SemiImplicitFd => simulate_semilinear_fd(&config, &mut FftSineTransform::new(grid), &mut recorder)?,
    }
    let field = recorder.finish();
    let last = field.row(field.rows() - 1);
    let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut summary = json!({
        "command": "simulate",
        "equation": plan.equation.name(),
        "scheme": config.scheme,
        "seed": seed,
        "stored_rows": field.rows(),
        "intervals": field.intervals,
        "final_min": lo,
        "final_max": hi,
    });
    if args.dump {
        let dir = out_dir(&plan);
        let path = write_trajectory(&field, &config, &dir, "trajectory")?;
        summary["trajectory"] = json!(path);
    }
    Ok(summary)
}

fn estimate(args: &EstimateArgs) -> Result<Value> {
    let mut plan = args.plan.resolve()?;
    if let Some(a) = args.alpha {
        plan.alpha = a;
    }
    plan.mode = PlanMode::Single;
    let spec = plan.kernel_spec()?;
    let theta_sigma = asymptotic_variance_sigma(&spec, plan.theta, plan.horizon).ok();
    let series = match &args.series {
        Some(path) => read_series(path)?,
        None => {
            plan.validate()?;
            let cell = Cell::new(&plan, &spec, 0, 0)?;
            let config = plan.sim_config(cell.seed(&plan, 0))?;
            simulate_and_measure(&config, &cell.kernel, Some(cell.b_norm_sq), false)?
        }
    };
    let source = if series.b_norm_sq_spectral.is_some() { Some(plan.b_norm) } else { None };
    let mut report: EstimateReport = augmented_mle_with(&series, source, plan.alpha)?;
    if let Some(ts) = theta_sigma {
        report = report.with_plugin_variance(ts / plan.theta);
    }
    let mut summary = json!({ "command": "estimate", "report": report });
    if let Some(dir) = plan.out.as_ref().map(PathBuf::from) {
        if args.series.is_none() {
            write_series(&series, &dir.join("series.csv"))?;
        }
        write_json(&dir.join("report.json"), &report)?;
        summary["out"] = json!(dir);
    }
    Ok(summary)
}

fn monte_carlo(args: &PlanArgs, mode: Option<PlanMode>) -> Result<Value> {
    let mut plan = args.resolve()?;
    if let Some(m) = mode {
        plan.mode = m;
    }
    plan.validate()?;
    let workers = args.workers();
    let estimate = plan.estimated_seconds() / workers as f64;
    let _ = writeln!(
        std::io::stderr(),
        "spde: {} replications on {workers} worker(s), estimated {:.0} s",
        plan.replications * plan.deltas.len() * plan.x0s.len(),
        estimate
    );
    let result = run_plan(&plan, workers)?;
    let dir = out_dir(&plan);
    let manifest = write_plan_outputs(&result, &dir)?;
    let cells: Vec<Value> = result
        .cells
        .iter()
        .map(|c| {
            json!({
                "delta": c.delta, "x0": c.x0, "completed": c.completed(), "excluded": c.excluded(),
                "rmse": c.rmse, "mean_error": c.mean_error, "coverage": c.coverage,
                "fisher_scaled_mean": c.fisher_scaled_mean,
            })
        })
        .collect();
    let mut summary = json!({
        "command": "mc",
        "mode": plan.mode,
        "equation": plan.equation.name(),
        "config_hash": config_hash(&plan)?,
        "theta_sigma": result.theta_sigma,
        "requested": manifest.requested,
        "completed": manifest.completed,
        "excluded": manifest.excluded,
        "elapsed_seconds": result.elapsed_seconds,
        "out": dir,
        "cells": cells,
    });
    match plan.mode {
        PlanMode::Rates => summary["rates"] = serde_json::to_value(rates_table(&result)?)?,
        PlanMode::Qq => {
            let gaps: Vec<Value> = qq_table(&result)?
                .iter()
                .map(|(d, x, q)| json!({"delta": d, "x0": x, "max_gap_5_95": q.max_gap_in(0.05, 0.95), "max_gap": q.max_gap()}))
                .collect();
            summary["qq"] = json!(gaps);
        }
        PlanMode::Coverage => summary["coverage"] = serde_json::to_value(coverage_table(&result))?,
        PlanMode::Single => {}
    }
    Ok(summary)
}

/// Machine-readable error report.
pub fn error_json(kind: &str, message: &str) -> Value {
    json!({ "error": kind, "message": message })
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = writeln!(stderr, "{}", error_json("usage", e.to_string().trim()));
            return 2;
        }
    };
    match run(cli) {
        Ok(summary) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}
