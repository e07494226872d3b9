//! Local measurements `X_{δ,x₀}(t) = ⟨X(t), K_{δ,x₀}⟩`,
//! `X^Δ_{δ,x₀}(t) = ⟨X(t), ΔK_{δ,x₀}⟩` and their quadratic variation.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ScaledKernel;
use crate::simulator::{FieldObserver, ModeObserver, StepView, TrajectoryField};
use crate::stats::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub times: Vec<f64>,
    pub x_series: Vec<f64>,
    pub xdelta_series: Vec<f64>,
    pub delta: f64,
    /// Kernel centre actually used (after clamping).
    pub x0: f64,
    pub requested_x0: f64,
    pub clamped: bool,
    pub kernel: String,
    /// `‖B*K_{δ,x₀}‖²` from the noise model, when known.
    pub b_norm_sq_spectral: Option<f64>,
    /// Realised quadratic variation of `x_series` divided by `T`.
    pub b_norm_sq_qv: f64,
    /// `⟨F(X(t_n)), K_{δ,x₀}⟩`, instrumented runs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction_pairing: Option<Vec<f64>>,
    /// `⟨ΔW_n, K_{δ,x₀}⟩` for the increment driving `t_n → t_{n+1}`, instrumented runs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_pairing: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl MeasurementSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Multiplies both observation processes by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.x_series.iter_mut().for_each(|v| *v *= c);
        out.xdelta_series.iter_mut().for_each(|v| *v *= c);
        out.b_norm_sq_qv *= c * c;
        out.b_norm_sq_spectral = out.b_norm_sq_spectral.map(|b| b * c * c);
        out
    }
}

/// `Σ_n (x_{n+1} - x_n)²`.
pub fn quadratic_variation(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: series.len() });
    }
    Ok(series.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum())
}

/// Online recorder pairing each slice with the kernel over its support window.
#[derive(Debug, Clone)]
pub struct MeasurementRecorder<'k> {
    kernel: &'k ScaledKernel,
    instrumented: bool,
    times: Vec<f64>,
    x: Vec<f64>,
    xdelta: Vec<f64>,
    reaction: Vec<f64>,
    noise: Vec<f64>,
}

impl<'k> MeasurementRecorder<'k> {
    pub fn new(kernel: &'k ScaledKernel) -> Self {
        MeasurementRecorder {
            kernel,
            instrumented: false,
            times: Vec::new(),
            x: Vec::new(),
            xdelta: Vec::new(),
            reaction: Vec::new(),
            noise: Vec::new(),
        }
    }

    /// Also records reaction and noise pairings (for the error decomposition).
    pub fn instrumented(kernel: &'k ScaledKernel) -> Self {
        MeasurementRecorder { instrumented: true, ..Self::new(kernel) }
    }

    pub fn with_capacity(mut self, steps: usize) -> Self {
        self.times.reserve(steps);
        self.x.reserve(steps);
        self.xdelta.reserve(steps);
        self
    }

    pub fn finish(self, b_norm_sq_spectral: Option<f64>, seed: Option<u64>) -> Result<MeasurementSeries> {
        let (reaction, noise) = if self.instrumented {
            (Some(self.reaction), Some(self.noise))
        } else {
            (None, None)
        };
        assemble(self.kernel, self.times, self.x, self.xdelta, reaction, noise, b_norm_sq_spectral, seed)
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    kernel: &ScaledKernel,
    times: Vec<f64>,
    x: Vec<f64>,
    xdelta: Vec<f64>,
    reaction: Option<Vec<f64>>,
    noise: Option<Vec<f64>>,
    b_norm_sq_spectral: Option<f64>,
    seed: Option<u64>,
) -> Result<MeasurementSeries> {
    let qv = quadratic_variation(&x)?;
    let horizon = times[times.len() - 1] - times[0];
    Ok(MeasurementSeries {
        times,
        x_series: x,
        xdelta_series: xdelta,
        delta: kernel.delta,
        x0: kernel.center,
        requested_x0: kernel.requested_x0,
        clamped: kernel.clamped,
        kernel: kernel.label.clone(),
        b_norm_sq_spectral,
        b_norm_sq_qv: qv / horizon,
        reaction_pairing: reaction,
        noise_pairing: noise,
        seed,
    })
}

impl FieldObserver for MeasurementRecorder<'_> {
    fn observe(&mut self, view: &StepView<'_>) {
        self.times.push(view.time);
        self.x.push(self.kernel.pairing(view.field));
        self.xdelta.push(self.kernel.laplacian_pairing(view.field));
        if self.instrumented {
            self.reaction.push(view.reaction.map_or(0.0, |f| self.kernel.pairing(f)));
            if let Some(dw) = view.noise {
                self.noise.push(self.kernel.pairing(dw));
            }
        }
    }
}

/// Measures directly from sine coefficients: `X_δ = Σ_k c_k ⟨K_δ, Φ_k⟩_h`.
///
/// On the same grid this equals pairing the synthesised field with the sampled
/// kernel, at `O(M_s)` cost per step.
#[derive(Debug, Clone)]
pub struct SpectralMeasurementRecorder<'k> {
    kernel: &'k ScaledKernel,
    weights: Vec<f64>,
    laplacian_weights: Vec<f64>,
    times: Vec<f64>,
    x: Vec<f64>,
    xdelta: Vec<f64>,
}

impl<'k> SpectralMeasurementRecorder<'k> {
    pub fn new(kernel: &'k ScaledKernel, modes: usize) -> Result<Self> {
        let (weights, laplacian_weights) = kernel.mode_weights(modes)?;
        Ok(SpectralMeasurementRecorder {
            kernel,
            weights,
            laplacian_weights,
            times: Vec::new(),
            x: Vec::new(),
            xdelta: Vec::new(),
        })
    }

    pub fn with_capacity(mut self, steps: usize) -> Self {
        self.times.reserve(steps);
        self.x.reserve(steps);
        self.xdelta.reserve(steps);
        self
    }

    pub fn finish(self, b_norm_sq_spectral: Option<f64>, seed: Option<u64>) -> Result<MeasurementSeries> {
        assemble(self.kernel, self.times, self.x, self.xdelta, None, None, b_norm_sq_spectral, seed)
    }
}

impl ModeObserver for SpectralMeasurementRecorder<'_> {
    fn observe_modes(&mut self, _step: usize, time: f64, coeffs: &[f64]) {
        let (mut a, mut b) = (0.0, 0.0);
        for ((c, w), v) in coeffs.iter().zip(&self.weights).zip(&self.laplacian_weights) {
            a += c * w;
            b += c * v;
        }
        self.times.push(time);
        self.x.push(a);
        self.xdelta.push(b);
    }
}

/// Offline measurement of a stored trajectory.
pub fn measure(trajectory: &TrajectoryField, scaled: &ScaledKernel) -> Result<MeasurementSeries> {
    if trajectory.intervals != scaled.grid().intervals() {
        return Err(Error::DimensionMismatch {
            expected: scaled.grid().intervals(),
            found: trajectory.intervals,
        });
    }
    let mut rec = MeasurementRecorder::new(scaled).with_capacity(trajectory.rows());
    for (row, &time) in trajectory.iter_rows().zip(&trajectory.times) {
        rec.observe(&StepView { step: 0, time, field: row, reaction: None, noise: None });
    }
    rec.finish(None, Some(trajectory.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Slope of `log QV` against `log δ` (`≈ 4γ`).
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Identifies the noise smoothing order from `‖B*K_δ‖² ∝ δ^{4γ}`.
pub fn estimate_gamma_from_qv(deltas: &[f64], qvs: &[f64]) -> Result<GammaEstimate> {
    if deltas.len() != qvs.len() {
        return Err(Error::DimensionMismatch { expected: deltas.len(), found: qvs.len() });
    }
    let mut distinct: Vec<f64> = deltas.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: distinct.len() });
    }
    if deltas.iter().chain(qvs).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("qv", "deltas and quadratic variations must be positive"));
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = qvs.iter().map(|q| q.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(GammaEstimate { gamma: fit.slope / 4.0, slope: fit.slope, intercept: fit.intercept, residual: fit.residual })
}
