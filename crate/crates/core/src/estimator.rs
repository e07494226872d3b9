//! Augmented maximum-likelihood estimator of the diffusivity.
//!
//! `θ̂ = Σ X^Δ_n (X_{n+1} - X_n) / Σ (X^Δ_n)² Δt`, with the observed Fisher
//! information `I_δ = Σ (X^Δ_n)² Δt / ‖B*K_δ‖²`.

use alloc::string::String;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::MeasurementSeries;
use crate::stats::normal_quantile;

/// Denominators below this are treated as degenerate.
pub const DENOMINATOR_FLOOR: f64 = 1e-30;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BNormSource {
    /// From the noise model's spectral sum.
    Spectral,
    /// From the realised quadratic variation of `X_δ`.
    QuadraticVariation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theta_hat: f64,
    pub fisher_obs: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub b_norm_sq: f64,
    pub b_norm_source: BNormSource,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Plug-in asymptotic variance `θ̂ Σ(K)`, when supplied.
    pub sigma_plugin: Option<f64>,
    pub delta: f64,
    pub x0: f64,
    pub requested_x0: f64,
    pub clamped: bool,
    pub kernel: String,
    pub seed: Option<u64>,
}

impl EstimateReport {
    /// `I_δ^{1/2}(θ̂ - θ)`, asymptotically `N(0, 1)`.
    pub fn normalized_error(&self, theta: f64) -> f64 {
        self.fisher_obs.sqrt() * (self.theta_hat - theta)
    }

    /// `δ^{-1}(θ̂ - θ)`, asymptotically `N(0, θΣ)`.
    pub fn scaled_error(&self, theta: f64) -> f64 {
        (self.theta_hat - theta) / self.delta
    }

    pub fn covers(&self, theta: f64) -> bool {
        self.ci_low <= theta && theta <= self.ci_high
    }

    /// Attaches `θ̂ Σ` given `Σ` for unit diffusivity.
    pub fn with_plugin_variance(mut self, sigma: f64) -> Self {
        self.sigma_plugin = Some(self.theta_hat * sigma);
        self
    }
}

/// Estimates using the spectral `‖B*K_δ‖²` when present, the quadratic
/// variation otherwise, with a 95% interval.
pub fn augmented_mle(series: &MeasurementSeries) -> Result<EstimateReport> {
    augmented_mle_with(series, None, DEFAULT_ALPHA)
}

pub fn augmented_mle_with(
    series: &MeasurementSeries,
    source: Option<BNormSource>,
    alpha: f64,
) -> Result<EstimateReport> {
    let n = series.len();
    if n < 2 || series.x_series.len() != n || series.xdelta_series.len() != n {
        return Err(Error::InsufficientData { needed: 2, found: n.min(series.x_series.len()) });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n - 1 {
        let dt = series.times[i + 1] - series.times[i];
        let xd = series.xdelta_series[i];
        num += xd * (series.x_series[i + 1] - series.x_series[i]);
        den += xd * xd * dt;
    }
    if !(den > DENOMINATOR_FLOOR) || !num.is_finite() {
        return Err(Error::DegenerateDenominator(den));
    }
    let source = source.unwrap_or(if series.b_norm_sq_spectral.is_some() {
        BNormSource::Spectral
    } else {
        BNormSource::QuadraticVariation
    });
    let b_norm_sq = match source {
        BNormSource::Spectral => series
            .b_norm_sq_spectral
            .ok_or(Error::Unsupported("no spectral noise norm attached to the series"))?,
        BNormSource::QuadraticVariation => series.b_norm_sq_qv,
    };
    if !(b_norm_sq > 0.0) || !b_norm_sq.is_finite() {
        return Err(Error::Degenerate("noise norm of the kernel is not positive"));
    }
    let mut report = EstimateReport {
        theta_hat: num / den,
        fisher_obs: den / b_norm_sq,
        numerator: num,
        denominator: den,
        b_norm_sq,
        b_norm_source: source,
        alpha,
        ci_low: f64::NAN,
        ci_high: f64::NAN,
        sigma_plugin: None,
        delta: series.delta,
        x0: series.x0,
        requested_x0: series.requested_x0,
        clamped: series.clamped,
        kernel: series.kernel.clone(),
        seed: series.seed,
    };
    let (lo, hi) = confidence_interval(&report, alpha)?;
    report.ci_low = lo;
    report.ci_high = hi;
    Ok(report)
}

/// Two-sided `1 - α` interval `θ̂ ± q_{1-α/2} I_δ^{-1/2}`; `α = 1` gives the
/// zero-width interval at `θ̂`.
pub fn confidence_interval(report: &EstimateReport, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", "must lie in (0, 1]"));
    }
    if !(report.fisher_obs > 0.0) {
        return Err(Error::DegenerateDenominator(report.fisher_obs));
    }
    let half = normal_quantile(1.0 - alpha / 2.0) / report.fisher_obs.sqrt();
    Ok((report.theta_hat - half, report.theta_hat + half))
}

/// Error split `θ̂ = θ + I_δ^{-1} R_δ + I_δ^{-1} M_δ`, all terms already divided by `I_δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub theta_hat: f64,
    pub fisher_obs: f64,
    /// `I_δ^{-1} R_δ` (reaction contribution).
    pub reaction_term: f64,
    /// `θ̂ - θ - I_δ^{-1} R_δ`.
    pub martingale_term: f64,
    /// `I_δ^{-1} M_δ` computed from the recorded noise increments, when available.
    pub martingale_from_noise: Option<f64>,
}

/// `R_δ / I_δ = Σ X^Δ_n ⟨F(X_n), K_δ⟩ Δt / Σ (X^Δ_n)² Δt`.
pub fn reaction_term(series: &MeasurementSeries) -> Result<f64> {
    let f = series.reaction_pairing.as_ref().ok_or(Error::NotInstrumented)?;
    let n = series.len();
    if f.len() < n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, found: f.len() });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n - 1 {
        let dt = series.times[i + 1] - series.times[i];
        let xd = series.xdelta_series[i];
        num += xd * f[i] * dt;
        den += xd * xd * dt;
    }
    if !(den > DENOMINATOR_FLOOR) {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(num / den)
}

pub fn decomposition_diagnostics(series: &MeasurementSeries, theta: f64) -> Result<Decomposition> {
    let report = augmented_mle(series)?;
    let reaction = reaction_term(series)?;
    let from_noise = match &series.noise_pairing {
        Some(w) if w.len() + 1 >= series.len() => {
            let num: f64 = series.xdelta_series.iter().zip(w).map(|(a, b)| a * b).sum();
            Some(num / report.denominator)
        }
        _ => None,
    };
    Ok(Decomposition {
        theta_hat: report.theta_hat,
        fisher_obs: report.fisher_obs,
        reaction_term: reaction,
        martingale_term: report.theta_hat - theta - reaction,
        martingale_from_noise: from_noise,
    })
}
