//! Small statistics toolkit: normal quantiles, moments, least squares and Q-Q data.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error ≈ 1.15e-9) followed by one
/// Halley step against `erfc`, which brings the absolute error well below 1e-12
/// on `(1e-300, 1 - 1e-16)`. Returns `±∞` at 0 and 1.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Root mean square of `xs`.
pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual.
    pub residual: f64,
}

/// Ordinary least squares `y ≈ intercept + slope · x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(LinearFit { slope, intercept, residual })
}

/// Sorted sample against standard normal quantiles at `(i - 0.5)/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub probabilities: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub sample: Vec<f64>,
    /// All samples equal: the plot is a flat line.
    pub degenerate: bool,
}

pub const QQ_MIN_SAMPLES: usize = 100;

/// Probability range over which [`QqData::max_gap`] is taken by default. The
/// extreme order statistics of a sample of 1000 normals scatter by ±0.4 around
/// their expectation, so the screen is restricted to the central 90%.
pub const QQ_SCREEN_RANGE: (f64, f64) = (0.05, 0.95);

pub fn qq_data(samples: &[f64]) -> Result<QqData> {
    if samples.len() < QQ_MIN_SAMPLES {
        return Err(Error::InsufficientData { needed: QQ_MIN_SAMPLES, found: samples.len() });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite sample"));
    }
    let mut sample = samples.to_vec();
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let probabilities: Vec<f64> = (1..=sample.len()).map(|i| (i as f64 - 0.5) / n).collect();
    let theoretical = probabilities.iter().map(|&p| normal_quantile(p)).collect();
    let degenerate = sample.first() == sample.last();
    Ok(QqData { probabilities, theoretical, sample, degenerate })
}

impl QqData {
    /// `max |sample - theoretical|` over plotting positions in `[low, high]`.
    pub fn max_gap_in(&self, low: f64, high: f64) -> f64 {
        self.probabilities
            .iter()
            .zip(self.sample.iter().zip(&self.theoretical))
            .filter(|(p, _)| **p >= low && **p <= high)
            .map(|(_, (s, t))| (s - t).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_gap(&self) -> f64 {
        self.max_gap_in(QQ_SCREEN_RANGE.0, QQ_SCREEN_RANGE.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert_relative_eq!(normal_quantile(0.975), 1.959_963_984_540_054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.025), -1.959_963_984_540_054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.841_344_746_068_542_9), 1.0, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(1e-10), -6.361_340_902_404_056, epsilon = 1e-10);
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_line_fit() {
        let x: Vec<f64> = (0..5).map(|i| i as f64 * 0.3 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 * v + 0.25).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, 1.0, max_relative = 1e-14);
        assert!(fit.residual < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn qq_constant_input_is_flagged() {
        let qq = qq_data(&[0.3; 200]).unwrap();
        assert!(qq.degenerate);
        assert!(qq_data(&[0.0; 50]).is_err());
    }
}
