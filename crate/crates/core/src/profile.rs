//! Compactly supported smooth profiles of the form
//! `p(t) (1 - t²)^{-m} exp(-a / (1 - t²))`, `t = x / r`, `|t| < 1`.
//!
//! Every derivative of such a function is again of this form, so derivatives of
//! any order are exact closed forms (polynomial arithmetic) instead of finite
//! differences. Values are evaluated in log space for the singular factor,
//! which keeps full relative accuracy right up to the edge of the support.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::quadrature::integrate;

/// Exponent of the standard bump `exp(-12 / (1 - x²))`.
pub const BUMP_EXPONENT: f64 = 12.0;

/// Dense polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Polynomial(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Polynomial(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let get = |p: &Self, i: usize| p.0.get(i).copied().unwrap_or(0.0);
        Polynomial((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial(self.0.iter().map(|c| c * s).collect())
    }
}

/// `scale · Q(x/r) · (1 - (x/r)²)^{-pole_order} · exp(-a / (1 - (x/r)²))` on `|x| < r`,
/// zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    numerator: Polynomial,
    pole_order: u32,
    radius: f64,
    scale: f64,
    exponent: f64,
}

impl BumpProfile {
    /// The bump `φ(x) = exp(-12 / (1 - x²))` on `(-1, 1)`.
    pub fn bump() -> Self {
        Self::polynomial_times_bump(Polynomial::constant(1.0), 1.0)
    }

    /// `p(x/r) · φ(x/r)` supported on `(-r, r)`.
    pub fn polynomial_times_bump(p: Polynomial, radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "support radius must be positive");
        BumpProfile { numerator: p, pole_order: 0, radius, scale: 1.0, exponent: BUMP_EXPONENT }
    }

    pub fn zero() -> Self {
        Self::polynomial_times_bump(Polynomial::zero(), 1.0)
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero() || self.scale == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BumpProfile { scale: self.scale * factor, ..self.clone() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x / self.radius;
        let u = 1.0 - t * t;
        if u <= 0.0 {
            return 0.0;
        }
        let q = self.numerator.eval(t);
        if q == 0.0 {
            return 0.0;
        }
        let log_singular = -self.exponent / u - self.pole_order as f64 * u.ln();
        self.scale * q * log_singular.exp()
    }

    /// Exact first derivative.
    pub fn derivative(&self) -> Self {
        // d/dt [Q u^{-m} e^{-a/u}] = e^{-a/u} u^{-(m+2)} [Q' u² + 2 m t Q u - 2 a t Q],  u = 1 - t²
        let q = &self.numerator;
        let m = self.pole_order as f64;
        let u = Polynomial(vec![1.0, 0.0, -1.0]);
        let t = Polynomial(vec![0.0, 1.0]);
        let term1 = q.derivative().mul(&u).mul(&u);
        let term2 = t.mul(q).mul(&u).scale(2.0 * m);
        let term3 = t.mul(q).scale(-2.0 * self.exponent);
        BumpProfile {
            numerator: term1.add(&term2).add(&term3),
            pole_order: self.pole_order + 2,
            radius: self.radius,
            scale: self.scale / self.radius,
            exponent: self.exponent,
        }
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    /// `∫ f` over the support, adaptive Gauss-Kronrod.
    pub fn integral(&self) -> f64 {
        integrate(|x| self.eval(x), -self.radius, self.radius, 1e-18, 1e-13).value
    }

    /// `∫ f²` over the support, adaptive Gauss-Kronrod.
    pub fn l2_norm_sq(&self) -> f64 {
        integrate(
            |x| {
                let v = self.eval(x);
                v * v
            },
            -self.radius,
            self.radius,
            1e-30,
            1e-13,
        )
        .value
    }
}
