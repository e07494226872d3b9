//! Monte-Carlo orchestration: replication fan-out over `(δ, x₀)` cells,
//! aggregation, rate fits, Q-Q data and coverage.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spde_core::estimator::{augmented_mle_with, reaction_term};
use spde_core::kernels::{asymptotic_variance_sigma, b_star_norm_sq, scale_kernel_with, KernelSpec, ScaledKernel};
use spde_core::measurements::{MeasurementRecorder, MeasurementSeries, SpectralMeasurementRecorder};
use spde_core::seed::replication_seed;
use spde_core::simulator::{simulate_linear_exact, simulate_semilinear_fd, Scheme, SimConfig};
use spde_core::stats::{linear_fit, mean, qq_data, QqData};
use spde_core::{Error, SpectralBasis};

use crate::error::{LabError, Result};
use crate::fft::FftSineTransform;
use crate::plan::ExperimentPlan;

/// Largest tolerated share of blown-up replications.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

/// Kernel and noise norm shared by all replications of one `(δ, x₀)` cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub delta_index: usize,
    pub x0_index: usize,
    pub kernel: ScaledKernel,
    pub b_norm_sq: f64,
    pub truncation_warning: bool,
}

impl Cell {
    pub fn new(plan: &ExperimentPlan, spec: &KernelSpec, delta_index: usize, x0_index: usize) -> Result<Self> {
        let config = plan.sim_config(0)?;
        let grid = config.grid()?;
        let (delta, x0) = (plan.deltas[delta_index], plan.x0s[x0_index]);
        let kernel = scale_kernel_with(spec, delta, x0, grid, plan.laplacian)?;
        let basis = SpectralBasis::new(config.mode_count(), x0)?;
        let norm = b_star_norm_sq(&kernel, &config.noise, &basis)?;
        Ok(Cell { delta_index, x0_index, kernel, b_norm_sq: norm.value, truncation_warning: norm.truncation_warning })
    }

    pub fn seed(&self, plan: &ExperimentPlan, replication: usize) -> u64 {
        replication_seed(plan.base_seed, replication as u64, self.delta_index as u64, self.x0_index as u64)
    }
}

/// Simulates with `config` and measures against `kernel` online.
pub fn simulate_and_measure(
    config: &SimConfig,
    kernel: &ScaledKernel,
    b_norm_sq: Option<f64>,
    instrument: bool,
) -> spde_core::Result<MeasurementSeries> {
    let steps = config.time_steps + 1;
    match config.scheme {
        Scheme::SpectralExact => {
            let modes = config.mode_count();
            let mut rec = SpectralMeasurementRecorder::new(kernel, modes)?.with_capacity(steps);
            simulate_linear_exact(config, modes, &mut rec)?;
            rec.finish(b_norm_sq, Some(config.seed))
        }
        Scheme::SemiImplicitFd => {
            let rec = if instrument { MeasurementRecorder::instrumented(kernel) } else { MeasurementRecorder::new(kernel) };
            let mut rec = rec.with_capacity(steps);
            let mut transform = FftSineTransform::new(config.grid()?);
            simulate_semilinear_fd(config, &mut transform, &mut rec)?;
            rec.finish(b_norm_sq, Some(config.seed))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub theta_hat: f64,
    pub fisher_obs: f64,
    pub b_norm_sq: f64,
    pub b_norm_sq_qv: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `I_δ⁻¹ R_δ`, instrumented finite-difference runs only.
    pub reaction_term: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed(Replication),
    Excluded(Exclusion),
}

pub fn run_replication(plan: &ExperimentPlan, cell: &Cell, index: usize) -> Result<Outcome> {
    let seed = cell.seed(plan, index);
    let config = plan.sim_config(seed)?;
    let series = match simulate_and_measure(&config, &cell.kernel, Some(cell.b_norm_sq), plan.instrument) {
        Ok(s) => s,
        Err(e @ Error::BlowUp { .. }) => {
            return Ok(Outcome::Excluded(Exclusion { index, seed, reason: e.to_string() }));
        }
        Err(e) => return Err(e.into()),
    };
    let report = augmented_mle_with(&series, Some(plan.b_norm), plan.alpha)?;
    let reaction = if plan.instrument && config.scheme == Scheme::SemiImplicitFd {
        Some(reaction_term(&series)?)
    } else {
        None
    };
    Ok(Outcome::Completed(Replication {
        index,
        seed,
        theta_hat: report.theta_hat,
        fisher_obs: report.fisher_obs,
        b_norm_sq: report.b_norm_sq,
        b_norm_sq_qv: series.b_norm_sq_qv,
        ci_low: report.ci_low,
        ci_high: report.ci_high,
        reaction_term: reaction,
    }))
}

/// Aggregated replications of one `(δ, x₀)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub delta: f64,
    pub x0: f64,
    pub center: f64,
    pub clamped: bool,
    pub requested: usize,
    pub theta: f64,
    /// `θΣ` used to normalise errors.
    pub theta_sigma: f64,
    pub b_norm_sq: f64,
    pub truncation_warning: bool,
    pub replications: Vec<Replication>,
    pub exclusions: Vec<Exclusion>,
    /// `θ̂_i - θ`.
    pub errors: Vec<f64>,
    /// `(θΣ)^{-1/2} δ⁻¹ (θ̂_i - θ)`.
    pub normalized_errors: Vec<f64>,
    pub rmse: f64,
    pub mean_error: f64,
    pub coverage: f64,
    /// `δ² · mean(I_δ)`.
    pub fisher_scaled_mean: f64,
    pub mean_b_norm_sq_qv: f64,
}

impl McResult {
    fn aggregate(plan: &ExperimentPlan, cell: &Cell, theta_sigma: f64, outcomes: Vec<Outcome>) -> Self {
        let mut replications = Vec::new();
        let mut exclusions = Vec::new();
        for o in outcomes {
            match o {
                Outcome::Completed(r) => replications.push(r),
                Outcome::Excluded(e) => exclusions.push(e),
            }
        }
        let delta = cell.kernel.delta;
        let theta = plan.theta;
        let errors: Vec<f64> = replications.iter().map(|r| r.theta_hat - theta).collect();
        let scale = 1.0 / (delta * theta_sigma.sqrt());
        let normalized_errors = errors.iter().map(|e| e * scale).collect();
        let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let covered = replications.iter().filter(|r| r.ci_low <= theta && theta <= r.ci_high).count();
        let n = replications.len().max(1) as f64;
        let fisher: Vec<f64> = replications.iter().map(|r| r.fisher_obs).collect();
        let qv: Vec<f64> = replications.iter().map(|r| r.b_norm_sq_qv).collect();
        McResult {
            delta,
            x0: cell.kernel.requested_x0,
            center: cell.kernel.center,
            clamped: cell.kernel.clamped,
            requested: plan.replications,
            theta,
            theta_sigma,
            b_norm_sq: cell.b_norm_sq,
            truncation_warning: cell.truncation_warning,
            rmse: mean(&squares).sqrt(),
            mean_error: mean(&errors),
            coverage: covered as f64 / n,
            fisher_scaled_mean: delta * delta * mean(&fisher),
            mean_b_norm_sq_qv: mean(&qv),
            replications,
            exclusions,
            errors,
            normalized_errors,
        }
    }

    pub fn completed(&self) -> usize {
        self.replications.len()
    }

    pub fn excluded(&self) -> usize {
        self.exclusions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub plan: ExperimentPlan,
    pub theta_sigma: f64,
    pub cells: Vec<McResult>,
    /// `(δ, x₀)` pairs dropped because the kernel had to be clamped.
    pub skipped_cells: Vec<(f64, f64)>,
    pub workers: usize,
    pub elapsed_seconds: f64,
}

impl PlanResult {
    pub fn requested(&self) -> usize {
        self.cells.iter().map(|c| c.requested).sum()
    }

    pub fn completed(&self) -> usize {
        self.cells.iter().map(McResult::completed).sum()
    }

    pub fn excluded(&self) -> usize {
        self.cells.iter().map(McResult::excluded).sum()
    }

    pub fn cell(&self, delta: f64, x0: f64) -> Option<&McResult> {
        self.cells.iter().find(|c| c.delta == delta && c.x0 == x0)
    }
}

/// Runs every replication of every cell on a pool of `workers` threads.
///
/// Results are reduced in replication order, so they do not depend on the
/// worker count or the schedule.
pub fn run_plan(plan: &ExperimentPlan, workers: usize) -> Result<PlanResult> {
    plan.validate()?;
    let start = Instant::now();
    let spec = plan.kernel_spec()?;
    let theta_sigma = asymptotic_variance_sigma(&spec, plan.theta, plan.horizon)?;
    let mut cells = Vec::new();
    let mut skipped_cells = Vec::new();
    for d in 0..plan.deltas.len() {
        for x in 0..plan.x0s.len() {
            let cell = Cell::new(plan, &spec, d, x)?;
            if plan.exclude_clamped && cell.kernel.clamped {
                skipped_cells.push((plan.deltas[d], plan.x0s[x]));
            } else {
                cells.push(cell);
            }
        }
    }
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..plan.replications).map(move |r| (c, r))).collect();
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))?;
    let outcomes: Vec<Outcome> =
        pool.install(|| jobs.par_iter().map(|&(c, r)| run_replication(plan, &cells[c], r)).collect::<Result<_>>())?;

    let mut outcomes = outcomes.into_iter();
    let results: Vec<McResult> = cells
        .iter()
        .map(|cell| {
            let chunk: Vec<Outcome> = outcomes.by_ref().take(plan.replications).collect();
            McResult::aggregate(plan, cell, theta_sigma, chunk)
        })
        .collect();
    let result = PlanResult {
        plan: plan.clone(),
        theta_sigma,
        cells: results,
        skipped_cells,
        workers,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    let (excluded, requested) = (result.excluded(), result.requested());
    if excluded as f64 > MAX_EXCLUDED_FRACTION * requested as f64 {
        return Err(LabError::TooManyExclusions { excluded, requested });
    }
    Ok(result)
}

/// Least-squares fit of `log₁₀ RMSE` against `log₁₀ δ` at one `x₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub equation: String,
    pub x0: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub deltas: Vec<f64>,
    pub rmse: Vec<f64>,
}

/// One fit per `x₀` present in `result`.
pub fn rates_table(result: &PlanResult) -> Result<Vec<RateFit>> {
    let mut x0s: Vec<f64> = result.cells.iter().map(|c| c.x0).collect();
    x0s.dedup();
    x0s.sort_by(f64::total_cmp);
    x0s.dedup();
    x0s.iter()
        .map(|&x0| {
            let cells: Vec<&McResult> = result.cells.iter().filter(|c| c.x0 == x0).collect();
            let deltas: Vec<f64> = cells.iter().map(|c| c.delta).collect();
            let rmse: Vec<f64> = cells.iter().map(|c| c.rmse).collect();
            fit_rate(result.plan.equation.name(), x0, deltas, rmse)
        })
        .collect()
}

pub fn fit_rate(equation: &str, x0: f64, deltas: Vec<f64>, rmse: Vec<f64>) -> Result<RateFit> {
    if deltas.len() < 3 {
        return Err(LabError::Plan(format!("rate fit at x0 = {x0} needs at least 3 deltas")));
    }
    if rmse.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Degenerate("RMSE must be positive and finite for a log-log fit").into());
    }
    if rmse.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::Degenerate("constant RMSE across deltas").into());
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.log10()).collect();
    let ly: Vec<f64> = rmse.iter().map(|r| r.log10()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(RateFit {
        equation: equation.to_string(),
        x0,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        deltas,
        rmse,
    })
}

/// Q-Q data of the normalised errors, one entry per cell.
pub fn qq_table(result: &PlanResult) -> Result<Vec<(f64, f64, QqData)>> {
    result
        .cells
        .iter()
        .map(|c| Ok((c.delta, c.x0, qq_data(&c.normalized_errors)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub delta: f64,
    pub x0: f64,
    pub alpha: f64,
    pub covered: usize,
    pub completed: usize,
    pub coverage: f64,
    /// Binomial standard error at the nominal level.
    pub nominal_se: f64,
}

pub fn coverage_table(result: &PlanResult) -> Vec<CoverageRow> {
    let alpha = result.plan.alpha;
    result
        .cells
        .iter()
        .map(|c| {
            let n = c.completed();
            CoverageRow {
                delta: c.delta,
                x0: c.x0,
                alpha,
                covered: (c.coverage * n as f64).round() as usize,
                completed: n,
                coverage: c.coverage,
                nominal_se: (alpha * (1.0 - alpha) / n.max(1) as f64).sqrt(),
            }
        })
        .collect()
}
