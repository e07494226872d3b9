//! Measurement kernels `K = Δ^{⌈γ⌉} K̃`, their `(δ, x₀)` rescalings and the
//! asymptotic variance of the augmented MLE.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::profile::BumpProfile;
use crate::quadrature::{composite_gauss_legendre, integrate};
use crate::spectral::{Grid1D, SpectralBasis};

/// `φ(x) = exp(-12 / (1 - x²))` for `|x| < 1`, zero otherwise.
pub fn bump_phi(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    (-12.0 / (1.0 - x * x)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub label: String,
    /// `K̃`.
    pub base: BumpProfile,
    /// Smoothing order of the noise the kernel is built for.
    pub gamma: f64,
    pub ceil_gamma: u32,
    /// `K = ∂ₓ^{2⌈γ⌉} K̃`.
    pub kernel: BumpProfile,
    /// `K''`, used for `ΔK_{δ,x₀}`.
    pub kernel_laplacian: BumpProfile,
    pub support_radius: f64,
    /// `‖K̃‖²_{L²(ℝ)}`.
    pub base_norm_sq: f64,
    /// `‖∂ₓK̃‖²_{L²(ℝ)}`.
    pub base_grad_norm_sq: f64,
}

impl KernelSpec {
    pub fn new(label: impl Into<String>, base: BumpProfile, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be finite and non-negative"));
        }
        let ceil_gamma = gamma.ceil() as u32;
        let kernel = base.nth_derivative(2 * ceil_gamma as usize);
        let kernel_laplacian = kernel.nth_derivative(2);
        let base_norm_sq = base.l2_norm_sq();
        let base_grad_norm_sq = base.derivative().l2_norm_sq();
        if !(base_norm_sq > 0.0 && base_grad_norm_sq > 0.0) {
            return Err(Error::Degenerate("kernel profile has zero L2 norm"));
        }
        Ok(KernelSpec {
            label: label.into(),
            support_radius: base.support_radius(),
            base,
            gamma,
            ceil_gamma,
            kernel,
            kernel_laplacian,
            base_norm_sq,
            base_grad_norm_sq,
        })
    }

    /// Same base profile, rebuilt for noise of smoothing order `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.label.clone(), self.base.clone(), gamma)
    }

    pub fn has_integer_gamma(&self) -> bool {
        self.gamma.fract() == 0.0
    }
}

/// `K = K̃ = φ'''` with `γ = 0`.
pub fn paper_kernel() -> KernelSpec {
    KernelSpec::new("phi3", BumpProfile::bump().nth_derivative(3), 0.0)
        .expect("φ''' is non-degenerate")
}

/// How `ΔK_{δ,x₀}` is sampled on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianSampling {
    /// `δ^{-5/2} K''((y - x₀)/δ)` from the closed-form derivative.
    #[default]
    Analytic,
    /// Second difference of the sampled `K_{δ,x₀}`.
    SecondDifference,
}

/// `K_{δ,x₀}(y) = δ^{-1/2} K((y - x₀)/δ)` and its Laplacian, sampled on the
/// grid nodes inside the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledKernel {
    pub label: String,
    pub delta: f64,
    pub requested_x0: f64,
    /// Centre after boundary clamping.
    pub center: f64,
    pub clamped: bool,
    pub support_radius: f64,
    pub laplacian_sampling: LaplacianSampling,
    grid: Grid1D,
    window_start: usize,
    values: Vec<f64>,
    laplacian: Vec<f64>,
}

impl ScaledKernel {
    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Node indices `[start, end)` covered by the samples.
    pub fn window(&self) -> core::ops::Range<usize> {
        self.window_start..self.window_start + self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn laplacian_values(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn full_values(&self) -> Vec<f64> {
        self.expand(&self.values)
    }

    pub fn full_laplacian(&self) -> Vec<f64> {
        self.expand(&self.laplacian)
    }

    fn expand(&self, window: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.grid.len()];
        out[self.window()].copy_from_slice(window);
        out
    }

    /// `⟨f, K_{δ,x₀}⟩` by the trapezoid rule over the support window.
    #[inline]
    pub fn pairing(&self, field: &[f64]) -> f64 {
        self.grid.step() * dot(&field[self.window()], &self.values)
    }

    /// `⟨f, ΔK_{δ,x₀}⟩`.
    #[inline]
    pub fn laplacian_pairing(&self, field: &[f64]) -> f64 {
        self.grid.step() * dot(&field[self.window()], &self.laplacian)
    }

    /// `‖K_{δ,x₀}‖²` by the trapezoid rule.
    pub fn norm_sq(&self) -> f64 {
        self.grid.step() * dot(&self.values, &self.values)
    }

    /// `⟨K_{δ,x₀}, Φ_k⟩` and `⟨ΔK_{δ,x₀}, Φ_k⟩` for `k = 1..=modes`.
    pub fn mode_weights(&self, modes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if modes > self.grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: self.grid.interior_len(), found: modes });
        }
        let h = self.grid.step();
        let mut plain = Vec::with_capacity(modes);
        let mut lap = Vec::with_capacity(modes);
        for k in 1..=modes {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, j) in self.window().enumerate() {
                let phi = SQRT_2 * (PI * k as f64 * self.grid.node(j)).sin();
                a += self.values[i] * phi;
                b += self.laplacian[i] * phi;
            }
            plain.push(h * a);
            lap.push(h * b);
        }
        Ok((plain, lap))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Samples `K_{δ,x₀}` and `ΔK_{δ,x₀}` on `grid`.
///
/// A centre closer than `δ·r` to an endpoint is moved to `δ·r` (resp. `1 - δ·r`),
/// `r` being the support radius of the profile.
pub fn scale_kernel(spec: &KernelSpec, delta: f64, x0: f64, grid: Grid1D) -> Result<ScaledKernel> {
    scale_kernel_with(spec, delta, x0, grid, LaplacianSampling::Analytic)
}

pub fn scale_kernel_with(
    spec: &KernelSpec,
    delta: f64,
    x0: f64,
    grid: Grid1D,
    laplacian_sampling: LaplacianSampling,
) -> Result<ScaledKernel> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::invalid("x0", "must lie in (0, 1)"));
    }
    let half_width = delta * spec.support_radius;
    if 2.0 * half_width >= 1.0 {
        return Err(Error::KernelDoesNotFit { delta, support_radius: spec.support_radius });
    }
    let center = x0.clamp(half_width, 1.0 - half_width);
    let m = grid.intervals() as f64;
    let start = (((center - half_width) * m).ceil().max(0.0) as usize).max(1);
    let end = ((((center + half_width) * m).floor()) as usize).min(grid.intervals() - 1);
    let norm = delta.powf(-0.5);
    let lap_norm = delta.powf(-2.5);
    let values: Vec<f64> =
        (start..=end).map(|j| norm * spec.kernel.eval((grid.node(j) - center) / delta)).collect();
    let laplacian: Vec<f64> = match laplacian_sampling {
        LaplacianSampling::Analytic => (start..=end)
            .map(|j| lap_norm * spec.kernel_laplacian.eval((grid.node(j) - center) / delta))
            .collect(),
        LaplacianSampling::SecondDifference => {
            let sample = |j: usize| norm * spec.kernel.eval((grid.node(j) - center) / delta);
            let inv_h2 = m * m;
            (start..=end).map(|j| (sample(j + 1) - 2.0 * sample(j) + sample(j - 1)) * inv_h2).collect()
        }
    };
    Ok(ScaledKernel {
        label: spec.label.to_string(),
        delta,
        requested_x0: x0,
        center,
        clamped: center != x0,
        support_radius: spec.support_radius,
        laplacian_sampling,
        grid,
        window_start: start,
        values,
        laplacian,
    })
}

/// `‖B* K_{δ,x₀}‖²` truncated to the modes of `basis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BStarNorm {
    pub value: f64,
    /// Contribution of the top tenth of the retained modes.
    pub tail_estimate: f64,
    /// Set when the tail exceeds `1e-6` of the sum.
    pub truncation_warning: bool,
}

pub fn b_star_norm_sq(scaled: &ScaledKernel, noise: &NoiseModel, basis: &SpectralBasis) -> Result<BStarNorm> {
    let modes = basis.mode_count();
    let (weights, _) = scaled.mode_weights(modes)?;
    let terms: Vec<f64> = weights
        .iter()
        .zip(basis.eigenvalues())
        .map(|(w, &l)| {
            let b = noise.multiplier(l);
            b * b * w * w
        })
        .collect();
    let value: f64 = terms.iter().sum();
    let tail_len = (modes / 10).max(1);
    let tail_estimate: f64 = terms[modes - tail_len..].iter().sum();
    Ok(BStarNorm { value, tail_estimate, truncation_warning: tail_estimate > 1e-6 * value })
}

/// Fourier-side description of a compactly supported profile on ℝ.
///
/// `f̂(ω) = ∫ f(x) e^{-iωx} dx` is evaluated with a composite Gauss-Legendre
/// rule over the support, fine enough for `ω·r` up to a few thousand.
pub struct FourierProfile {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
    radius: f64,
    mean: f64,
    abs_mass: f64,
}

impl FourierProfile {
    pub fn new(profile: &BumpProfile) -> Self {
        let radius = profile.support_radius();
        let (nodes, weights) = composite_gauss_legendre(-radius, radius, 192, 24);
        let weighted: Vec<f64> = nodes.iter().zip(&weights).map(|(&x, w)| w * profile.eval(x)).collect();
        let mean = weighted.iter().sum();
        let abs_mass = weighted.iter().map(|v| v.abs()).sum();
        FourierProfile { nodes, weighted, radius, mean, abs_mass }
    }

    /// `|f̂(ω)|²`.
    pub fn power_spectrum(&self, omega: f64) -> f64 {
        let (mut c, mut s) = (0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weighted) {
            let (sn, cs) = (omega * x).sin_cos();
            c += w * cs;
            s += w * sn;
        }
        c * c + s * s
    }

    /// `(1/π) ∫₀^∞ ω^p |f̂(ω)|² dω`, i.e. `‖(-Δ)^{p/4} f‖²_{L²(ℝ)}`.
    pub fn weighted_energy(&self, power: f64) -> Result<f64> {
        let has_mean = self.mean.abs() > 1e-10 * self.abs_mass;
        if self.abs_mass == 0.0 {
            return Ok(0.0);
        }
        if power <= -3.0 || (power <= -1.0 && has_mean) {
            return Err(Error::DivergentIntegral("negative power of the Laplacian on a profile with non-vanishing mean"));
        }
        let integrand = |w: f64| if w <= 0.0 { 0.0 } else { w.powf(power) * self.power_spectrum(w) };
        let mut upper = 8.0 / self.radius;
        let mut total = integrate(integrand, 0.0, upper, 0.0, 1e-12).value;
        let cap = 1e5 / self.radius;
        while upper < cap {
            let chunk = integrate(integrand, upper, 2.0 * upper, 1e-14 * total.abs(), 1e-12).value;
            total += chunk;
            upper *= 2.0;
            if chunk.abs() <= 1e-14 * total.abs() {
                break;
            }
        }
        Ok(total / PI)
    }
}

/// `Ψ((-Δ)^s z) = σ(x₀)² · ½ ‖(-Δ)^{s - 1/2} z‖²_{L²(ℝ)}` for the locally constant
/// noise limit `B*₀ = σ(x₀)·I`, with the heat-semigroup time integral done in closed form.
pub fn psi_functional(z: &BumpProfile, fractional_power: f64, sigma_at_x0: f64) -> Result<f64> {
    if z.is_zero() {
        return Ok(0.0);
    }
    let energy = FourierProfile::new(z).weighted_energy(4.0 * fractional_power - 2.0)?;
    Ok(0.5 * sigma_at_x0 * sigma_at_x0 * energy)
}

/// `θΣ = 2θ ‖K̃‖² / (T ‖∂ₓK̃‖²)` for integer `γ`; other `γ` use
/// [`asymptotic_variance_general`].
pub fn asymptotic_variance_sigma(spec: &KernelSpec, theta: f64, horizon: f64) -> Result<f64> {
    check_positive(theta, horizon)?;
    if spec.has_integer_gamma() {
        Ok(2.0 * theta * spec.base_norm_sq / (horizon * spec.base_grad_norm_sq))
    } else {
        asymptotic_variance_general(spec, theta, horizon)
    }
}

/// `θΣ = θ T⁻¹ ‖(-Δ)^{s}K̃‖² / Ψ((-Δ)^{s}ΔK̃)` with `s = ⌈γ⌉ - γ` and unit
/// noise level (σ cancels), all norms computed on the Fourier side.
pub fn asymptotic_variance_general(spec: &KernelSpec, theta: f64, horizon: f64) -> Result<f64> {
    check_positive(theta, horizon)?;
    let s = spec.ceil_gamma as f64 - spec.gamma;
    let numerator = FourierProfile::new(&spec.base).weighted_energy(4.0 * s)?;
    let psi = psi_functional(&spec.base.nth_derivative(2), s, 1.0)?;
    if psi <= 0.0 {
        return Err(Error::Degenerate("Ψ vanishes for this kernel"));
    }
    Ok(theta * numerator / (horizon * psi))
}

fn check_positive(theta: f64, horizon: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    Ok(())
}
