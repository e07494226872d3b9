//! File formats: result CSVs with fixed column order, JSON sidecars and the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spde_core::measurements::MeasurementSeries;
use spde_core::simulator::{SimConfig, TrajectoryField};

use crate::error::{LabError, Result};
use crate::experiments::{coverage_table, qq_table, rates_table, PlanResult};
use crate::plan::{ExperimentPlan, Format, PlanMode};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of the plan's canonical JSON.
pub fn config_hash(plan: &ExperimentPlan) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(plan)?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    LabError::io(path, std::io::Error::other(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

#[derive(Serialize)]
struct ReplicationRow {
    delta: f64,
    x0: f64,
    center: f64,
    clamped: bool,
    replication: usize,
    seed: u64,
    theta_hat: f64,
    error: f64,
    normalized_error: f64,
    fisher_obs: f64,
    b_norm_sq: f64,
    b_norm_sq_qv: f64,
    ci_low: f64,
    ci_high: f64,
    covered: bool,
    reaction_term: Option<f64>,
}

pub const REPLICATION_COLUMNS: [&str; 16] = [
    "delta", "x0", "center", "clamped", "replication", "seed", "theta_hat", "error", "normalized_error",
    "fisher_obs", "b_norm_sq", "b_norm_sq_qv", "ci_low", "ci_high", "covered", "reaction_term",
];

#[derive(Serialize)]
struct SummaryRow {
    delta: f64,
    x0: f64,
    center: f64,
    clamped: bool,
    requested: usize,
    completed: usize,
    excluded: usize,
    theta: f64,
    theta_sigma: f64,
    b_norm_sq: f64,
    mean_error: f64,
    rmse: f64,
    coverage: f64,
    fisher_scaled_mean: f64,
    mean_b_norm_sq_qv: f64,
}

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "delta", "x0", "center", "clamped", "requested", "completed", "excluded", "theta", "theta_sigma", "b_norm_sq",
    "mean_error", "rmse", "coverage", "fisher_scaled_mean", "mean_b_norm_sq_qv",
];

pub const EXCLUSION_COLUMNS: [&str; 5] = ["delta", "x0", "replication", "seed", "reason"];
pub const RATE_COLUMNS: [&str; 6] = ["equation", "x0", "slope", "intercept", "residual", "points"];
pub const RATE_POINT_COLUMNS: [&str; 6] = ["equation", "x0", "delta", "rmse", "log10_delta", "log10_rmse"];
pub const QQ_COLUMNS: [&str; 5] = ["delta", "x0", "probability", "theoretical", "sample"];
pub const COVERAGE_COLUMNS: [&str; 7] = ["delta", "x0", "alpha", "covered", "completed", "coverage", "nominal_se"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub plan: ExperimentPlan,
    pub requested: usize,
    pub completed: usize,
    pub excluded: usize,
    pub workers: usize,
    pub elapsed_seconds: f64,
    pub files: Vec<FileDigest>,
}

/// Writes the CSVs for the plan's mode plus `manifest.json`; returns the manifest.
pub fn write_plan_outputs(result: &PlanResult, dir: &Path) -> Result<Manifest> {
    ensure_dir(dir)?;
    let plan = &result.plan;
    let mut written: Vec<PathBuf> = Vec::new();

    if plan.writes(Format::Csv) {
        let path = dir.join("replications.csv");
        let rows = result.cells.iter().flat_map(|c| {
            c.replications.iter().zip(&c.errors).zip(&c.normalized_errors).map(move |((r, &e), &z)| ReplicationRow {
                delta: c.delta,
                x0: c.x0,
                center: c.center,
                clamped: c.clamped,
                replication: r.index,
                seed: r.seed,
                theta_hat: r.theta_hat,
                error: e,
                normalized_error: z,
                fisher_obs: r.fisher_obs,
                b_norm_sq: r.b_norm_sq,
                b_norm_sq_qv: r.b_norm_sq_qv,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
                covered: r.ci_low <= c.theta && c.theta <= r.ci_high,
                reaction_term: r.reaction_term,
            })
        });
        write_csv(&path, rows, &REPLICATION_COLUMNS)?;
        written.push(path);

        let path = dir.join("summary.csv");
        let rows = result.cells.iter().map(|c| SummaryRow {
            delta: c.delta,
            x0: c.x0,
            center: c.center,
            clamped: c.clamped,
            requested: c.requested,
            completed: c.completed(),
            excluded: c.excluded(),
            theta: c.theta,
            theta_sigma: c.theta_sigma,
            b_norm_sq: c.b_norm_sq,
            mean_error: c.mean_error,
            rmse: c.rmse,
            coverage: c.coverage,
            fisher_scaled_mean: c.fisher_scaled_mean,
            mean_b_norm_sq_qv: c.mean_b_norm_sq_qv,
        });
        write_csv(&path, rows, &SUMMARY_COLUMNS)?;
        written.push(path);

        let path = dir.join("exclusions.csv");
        let rows = result
            .cells
            .iter()
            .flat_map(|c| c.exclusions.iter().map(move |e| (c.delta, c.x0, e.index, e.seed, e.reason.clone())));
        write_csv(&path, rows, &EXCLUSION_COLUMNS)?;
        written.push(path);

        match plan.mode {
            PlanMode::Rates => {
                let fits = rates_table(result)?;
                let path = dir.join("rates.csv");
                let rows = fits.iter().map(|f| (&f.equation, f.x0, f.slope, f.intercept, f.residual, f.deltas.len()));
                write_csv(&path, rows, &RATE_COLUMNS)?;
                written.push(path);
                let path = dir.join("rates_points.csv");
                let rows = fits.iter().flat_map(|f| {
                    f.deltas
                        .iter()
                        .zip(&f.rmse)
                        .map(move |(&d, &r)| (&f.equation, f.x0, d, r, d.log10(), r.log10()))
                });
                write_csv(&path, rows, &RATE_POINT_COLUMNS)?;
                written.push(path);
            }
            PlanMode::Qq => {
                let table = qq_table(result)?;
                let path = dir.join("qq.csv");
                let rows = table.iter().flat_map(|(d, x, q)| {
                    q.probabilities
                        .iter()
                        .zip(&q.theoretical)
                        .zip(&q.sample)
                        .map(move |((&p, &t), &s)| (*d, *x, p, t, s))
                });
                write_csv(&path, rows, &QQ_COLUMNS)?;
                written.push(path);
            }
            PlanMode::Coverage => {
                let path = dir.join("coverage.csv");
                write_csv(&path, coverage_table(result), &COVERAGE_COLUMNS)?;
                written.push(path);
            }
            PlanMode::Single => {}
        }
    }
    if plan.writes(Format::Json) {
        let path = dir.join("results.json");
        write_json(&path, result)?;
        written.push(path);
    }

    let files = written
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| LabError::io(p, e))?;
            Ok(FileDigest {
                name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(plan)?,
        plan: plan.clone(),
        requested: result.requested(),
        completed: result.completed(),
        excluded: result.excluded(),
        workers: result.workers,
        elapsed_seconds: result.elapsed_seconds,
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Serialize)]
struct TrajectorySidecar<'a> {
    config: &'a SimConfig,
    rows: usize,
    columns: usize,
    stride: usize,
    layout: &'static str,
}

/// `<stem>.csv` (one row per stored time: `t, X(t, y_0), …, X(t, y_M)`) and
/// `<stem>.json` echoing the configuration.
pub fn write_trajectory(field: &TrajectoryField, config: &SimConfig, dir: &Path, stem: &str) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let grid = field.grid();
    let mut header = vec!["t".to_string()];
    header.extend(grid.nodes().iter().map(|y| format!("y={y}")));
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(&header).map_err(|e| csv_error(&path, e))?;
    for (t, row) in field.times.iter().zip(field.iter_rows()) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(t.to_string());
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| LabError::io(&path, e))?;
    let sidecar = TrajectorySidecar {
        config,
        rows: field.rows(),
        columns: field.row_len() + 1,
        stride: field.stride,
        layout: "rows are times, first column t, then grid nodes y_j = j/M",
    };
    write_json(&dir.join(format!("{stem}.json")), &sidecar)?;
    Ok(path)
}

/// Everything in a [`MeasurementSeries`] except the sampled columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub delta: f64,
    pub x0: f64,
    pub requested_x0: f64,
    pub clamped: bool,
    pub kernel: String,
    pub b_norm_sq_spectral: Option<f64>,
    pub b_norm_sq_qv: f64,
    pub seed: Option<u64>,
    pub samples: usize,
    pub columns: Vec<String>,
}

pub const SERIES_COLUMNS: [&str; 3] = ["t", "x_delta", "xdelta_delta"];

/// `path` gets the `(t, X_δ, X^Δ_δ)` columns, `path` with extension `.json` the metadata.
pub fn write_series(series: &MeasurementSeries, path: &Path) -> Result<PathBuf> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let rows = series
        .times
        .iter()
        .zip(&series.x_series)
        .zip(&series.xdelta_series)
        .map(|((t, x), xd)| (*t, *x, *xd));
    write_csv(path, rows, &SERIES_COLUMNS)?;
    let meta = SeriesMetadata {
        delta: series.delta,
        x0: series.x0,
        requested_x0: series.requested_x0,
        clamped: series.clamped,
        kernel: series.kernel.clone(),
        b_norm_sq_spectral: series.b_norm_sq_spectral,
        b_norm_sq_qv: series.b_norm_sq_qv,
        seed: series.seed,
        samples: series.len(),
        columns: SERIES_COLUMNS.iter().map(|s| s.to_string()).collect(),
    };
    let meta_path = path.with_extension("json");
    write_json(&meta_path, &meta)?;
    Ok(meta_path)
}

/// Reads a series written by [`write_series`]; the quadratic variation is recomputed.
pub fn read_series(path: &Path) -> Result<MeasurementSeries> {
    let meta_path = path.with_extension("json");
    let text = fs::read_to_string(&meta_path).map_err(|e| LabError::io(&meta_path, e))?;
    let meta: SeriesMetadata = serde_json::from_str(&text)?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let (mut times, mut x, mut xd) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.deserialize::<(f64, f64, f64)>() {
        let (t, a, b) = row.map_err(|e| csv_error(path, e))?;
        times.push(t);
        x.push(a);
        xd.push(b);
    }
    let qv = spde_core::quadratic_variation(&x)?;
    let horizon = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if !(horizon > 0.0) {
        return Err(LabError::Plan(format!("{}: time column must increase", path.display())));
    }
    Ok(MeasurementSeries {
        times,
        x_series: x,
        xdelta_series: xd,
        delta: meta.delta,
        x0: meta.x0,
        requested_x0: meta.requested_x0,
        clamped: meta.clamped,
        kernel: meta.kernel,
        b_norm_sq_spectral: meta.b_norm_sq_spectral,
        b_norm_sq_qv: qv / horizon,
        reaction_pairing: None,
        noise_pairing: None,
        seed: meta.seed,
    })
}
