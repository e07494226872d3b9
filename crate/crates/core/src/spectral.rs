//! Dirichlet Laplacian on `(0, 1)`: eigenpairs `λ_k = π²k²`,
//! `Φ_k(y) = √2 sin(πky)`, fractional powers and discrete sine transforms.
//!
//! Coordinates are physical, `y ∈ (0, 1)`. The measurement location `x₀` is kept
//! as an explicit field of [`SpectralBasis`]; the shifted-domain evaluator
//! `Φ_k(x) = √2 sin(πk(x + x₀))` for `x ∈ (0,1) - x₀` describes the same basis.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::BumpProfile;

/// `λ_k = π² k²` for `k = 1..=mode_count`.
pub fn dirichlet_eigenvalues(mode_count: usize) -> Result<Vec<f64>> {
    if mode_count == 0 {
        return Err(Error::invalid("mode_count", "must be at least 1"));
    }
    Ok((1..=mode_count).map(eigenvalue).collect())
}

#[inline]
pub fn eigenvalue(k: usize) -> f64 {
    PI * PI * (k * k) as f64
}

/// Regular grid `y_j = j / M`, `j = 0..=M`, on the unit interval.
///
/// `intervals` is `M`; there are `M - 1` interior nodes and Dirichlet fields
/// carry zeros at `j = 0` and `j = M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    intervals: usize,
}

impl Grid1D {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::invalid("grid", "need at least 2 intervals"));
        }
        Ok(Grid1D { intervals })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of stored values, boundary included.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interior_len(&self) -> usize {
        self.intervals - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.intervals as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|j| self.node(j)).collect()
    }

    /// Trapezoid inner product of two Dirichlet fields (boundary terms vanish).
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.step() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Standard second difference with homogeneous Dirichlet rows.
    pub fn second_difference(&self, f: &[f64]) -> Vec<f64> {
        let inv_h2 = (self.intervals * self.intervals) as f64;
        let mut out = vec![0.0; f.len()];
        for j in 1..f.len().saturating_sub(1) {
            out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * inv_h2;
        }
        out
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out: Vec<f64> = (0..=self.intervals).map(|j| f(self.node(j))).collect();
        out[0] = 0.0;
        out[self.intervals] = 0.0;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    x0: f64,
    eigenvalues: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(mode_count: usize, x0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(Error::invalid("x0", "must lie in (0, 1)"));
        }
        Ok(SpectralBasis { x0, eigenvalues: dirichlet_eigenvalues(mode_count)? })
    }

    pub fn domain_length(&self) -> f64 {
        1.0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Φ_k(y) = √2 sin(πky)` in physical coordinates.
    pub fn eigenfunction(&self, k: usize, y: f64) -> f64 {
        SQRT_2 * (PI * k as f64 * y).sin()
    }

    /// `Φ_k` on the shifted domain `(0,1) - x₀`.
    pub fn eigenfunction_shifted(&self, k: usize, x: f64) -> f64 {
        self.eigenfunction(k, x + self.x0)
    }

    /// Multiplies coefficient `k` by `λ_k^power`.
    pub fn apply_fractional_laplacian(&self, coeffs: &[f64], power: f64) -> Result<Vec<f64>> {
        if coeffs.len() > self.mode_count() {
            return Err(Error::DimensionMismatch { expected: self.mode_count(), found: coeffs.len() });
        }
        Ok(apply_fractional_laplacian(coeffs, power))
    }
}

/// Multiplies coefficient `k` (1-based) by `λ_k^power`.
pub fn apply_fractional_laplacian(coeffs: &[f64], power: f64) -> Vec<f64> {
    if power == 0.0 {
        return coeffs.to_vec();
    }
    coeffs.iter().enumerate().map(|(i, c)| c * eigenvalue(i + 1).powf(power)).collect()
}

/// Forward/inverse expansion in `Φ_k` for Dirichlet grid fields.
///
/// `field` has `M + 1` entries (boundary included, boundary values ignored);
/// `coeffs` has at most `M - 1` entries. With `M - 1` modes the pair is an exact
/// inverse: `c_k = h Σ_j f_j Φ_k(y_j)` and `f_j = Σ_k c_k Φ_k(y_j)`.
pub trait SineTransform {
    fn forward(&mut self, field: &[f64], coeffs: &mut [f64]) -> Result<()>;
    fn inverse(&mut self, coeffs: &[f64], field: &mut [f64]) -> Result<()>;
}

pub(crate) fn check_dims(grid: Grid1D, field: usize, modes: usize) -> Result<()> {
    if field != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: field });
    }
    if modes > grid.interior_len() {
        return Err(Error::DimensionMismatch { expected: grid.interior_len(), found: modes });
    }
    Ok(())
}

/// Direct `O(M · M_s)` transform using a tabulated `sin(π n / M)`.
#[derive(Debug, Clone)]
pub struct NaiveSineTransform {
    grid: Grid1D,
    table: Vec<f64>,
}

impl NaiveSineTransform {
    pub fn new(grid: Grid1D) -> Self {
        let m = grid.intervals();
        let table = (0..2 * m).map(|n| SQRT_2 * (PI * n as f64 / m as f64).sin()).collect();
        NaiveSineTransform { grid, table }
    }

    /// `Φ_k(y_j)` from the table.
    #[inline]
    pub fn phi(&self, k: usize, j: usize) -> f64 {
        self.table[(k * j) % self.table.len()]
    }
}

impl SineTransform for NaiveSineTransform {
    fn forward(&mut self, field: &[f64], coeffs: &mut [f64]) -> Result<()> {
        check_dims(self.grid, field.len(), coeffs.len())?;
        let h = self.grid.step();
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = i + 1;
            let mut acc = 0.0;
            for (j, f) in field.iter().enumerate().take(self.grid.intervals()).skip(1) {
                acc += f * self.phi(k, j);
            }
            *c = h * acc;
        }
        Ok(())
    }

    fn inverse(&mut self, coeffs: &[f64], field: &mut [f64]) -> Result<()> {
        check_dims(self.grid, field.len(), coeffs.len())?;
        let m = self.grid.intervals();
        field[0] = 0.0;
        field[m] = 0.0;
        for (j, out) in field.iter_mut().enumerate().take(m).skip(1) {
            let mut acc = 0.0;
            for (i, c) in coeffs.iter().enumerate() {
                acc += c * self.phi(i + 1, j);
            }
            *out = acc;
        }
        Ok(())
    }
}

/// Coefficients of a grid field in the first `modes` eigenfunctions.
pub fn sine_transform(grid: Grid1D, field: &[f64], modes: usize) -> Result<Vec<f64>> {
    let mut coeffs = vec![0.0; modes];
    NaiveSineTransform::new(grid).forward(field, &mut coeffs)?;
    Ok(coeffs)
}

/// Grid samples of `Σ_k c_k Φ_k`.
pub fn inverse_sine_transform(grid: Grid1D, coeffs: &[f64]) -> Result<Vec<f64>> {
    let mut field = vec![0.0; grid.len()];
    NaiveSineTransform::new(grid).inverse(coeffs, &mut field)?;
    Ok(field)
}

/// Grid norm of `Δ_h(z_δ) - δ⁻² (z'')_δ`, with `z_δ(y) = δ^{-1/2} z((y - x₀)/δ)`.
///
/// The second term uses the exact second derivative of `z`, so the result is
/// the consistency error of the second difference on the rescaled profile and
/// decays like `h²` for fixed `δ`.
pub fn check_scaling_identity(z: &BumpProfile, delta: f64, x0: f64, grid: Grid1D) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let half_width = delta * z.support_radius();
    let (low, high) = (x0 - half_width, x0 + half_width);
    if low < 0.0 || high > 1.0 {
        return Err(Error::SupportViolation { low, high });
    }
    let norm = delta.powf(-0.5);
    let scaled = grid.sample(|y| norm * z.eval((y - x0) / delta));
    let discrete = grid.second_difference(&scaled);
    let zdd = z.nth_derivative(2);
    let h = grid.step();
    let sum: f64 = (1..grid.intervals())
        .map(|j| {
            let exact = delta.powi(-2) * norm * zdd.eval((grid.node(j) - x0) / delta);
            let d = discrete[j] - exact;
            d * d
        })
        .sum();
    Ok((h * sum).sqrt())
}
