use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise operator `B = σ(-Δ)^{-γ}` acting as the spectral multiplier
/// `b_k = σ λ_k^{-γ}` on independent mode-wise Brownian motions.
///
/// `γ = 0` is space-time white noise scaled by `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gamma: f64,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be finite and non-negative"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        Ok(NoiseModel { gamma, sigma })
    }

    pub fn white(sigma: f64) -> Result<Self> {
        Self::new(0.0, sigma)
    }

    pub fn is_white(&self) -> bool {
        self.gamma == 0.0
    }

    /// `b_k = σ λ^{-γ}`.
    #[inline]
    pub fn multiplier(&self, eigenvalue: f64) -> f64 {
        if self.gamma == 0.0 {
            self.sigma
        } else {
            self.sigma * eigenvalue.powf(-self.gamma)
        }
    }

    pub fn multipliers(&self, eigenvalues: &[f64]) -> Vec<f64> {
        eigenvalues.iter().map(|&l| self.multiplier(l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dirichlet_eigenvalues;

    #[test]
    fn multipliers_positive_and_non_increasing() {
        let ev = dirichlet_eigenvalues(200).unwrap();
        for gamma in [0.0, 0.25, 0.5, 1.3] {
            let b = NoiseModel::new(gamma, 0.7).unwrap().multipliers(&ev);
            assert!(b.iter().all(|&x| x > 0.0));
            assert!(b.windows(2).all(|w| w[1] <= w[0]));
        }
        let white = NoiseModel::white(0.05).unwrap().multipliers(&ev);
        assert!(white.iter().all(|&x| x == 0.05));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NoiseModel::new(-0.1, 1.0).is_err());
        assert!(NoiseModel::new(0.0, f64::NAN).is_err());
    }
}
