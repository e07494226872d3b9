//! Fast sine transform through a length-`2M` complex FFT of the odd extension.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use spde_core::spectral::{Grid1D, SineTransform};
use spde_core::{Error, Result};

/// `O(M log M)` drop-in for [`spde_core::spectral::NaiveSineTransform`].
pub struct FftSineTransform {
    grid: Grid1D,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for FftSineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftSineTransform").field("grid", &self.grid).finish()
    }
}

impl Clone for FftSineTransform {
    fn clone(&self) -> Self {
        FftSineTransform {
            grid: self.grid,
            fft: Arc::clone(&self.fft),
            buffer: self.buffer.clone(),
            scratch: self.scratch.clone(),
        }
    }
}

impl FftSineTransform {
    pub fn new(grid: Grid1D) -> Self {
        let len = 2 * grid.intervals();
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        FftSineTransform { grid, fft, buffer: vec![Complex64::default(); len], scratch }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// `s_k = Σ_{j=1}^{M-1} v_j sin(π j k / M)` for `k = 1..=out.len()`.
    fn dst(&mut self, values: &[f64], out: &mut [f64]) {
        let m = self.grid.intervals();
        self.buffer.iter_mut().for_each(|c| *c = Complex64::default());
        for (j, &v) in values.iter().enumerate() {
            self.buffer[j + 1] = Complex64::new(v, 0.0);
            self.buffer[2 * m - j - 1] = Complex64::new(-v, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (k, o) in out.iter_mut().enumerate() {
            *o = -0.5 * self.buffer[k + 1].im;
        }
    }

    fn check(&self, field: usize, modes: usize) -> Result<()> {
        if field != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), found: field });
        }
        if modes > self.grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: self.grid.interior_len(), found: modes });
        }
        Ok(())
    }
}

impl SineTransform for FftSineTransform {
    fn forward(&mut self, field: &[f64], coeffs: &mut [f64]) -> Result<()> {
        self.check(field.len(), coeffs.len())?;
        let m = self.grid.intervals();
        self.dst(&field[1..m], coeffs);
        let scale = std::f64::consts::SQRT_2 * self.grid.step();
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    fn inverse(&mut self, coeffs: &[f64], field: &mut [f64]) -> Result<()> {
        self.check(field.len(), coeffs.len())?;
        let m = self.grid.intervals();
        field[0] = 0.0;
        field[m] = 0.0;
        self.dst(coeffs, &mut field[1..m]);
        field[1..m].iter_mut().for_each(|v| *v *= std::f64::consts::SQRT_2);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spde_core::spectral::NaiveSineTransform;

    fn field(grid: Grid1D, seed: u64) -> Vec<f64> {
        let mut s = seed;
        let mut f: Vec<f64> = (0..grid.len())
            .map(|_| {
                s = spde_core::seed::splitmix64(s);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        f[0] = 0.0;
        f[grid.intervals()] = 0.0;
        f
    }

    #[test]
    fn matches_naive_transform() {
        for m in [2, 3, 8, 100, 257, 500] {
            let grid = Grid1D::new(m).unwrap();
            let f = field(grid, m as u64);
            let modes = grid.interior_len();
            let (mut a, mut b) = (vec![0.0; modes], vec![0.0; modes]);
            FftSineTransform::new(grid).forward(&f, &mut a).unwrap();
            NaiveSineTransform::new(grid).forward(&f, &mut b).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "M={m}");
            }
            let few = &a[..modes.min(7)];
            let (mut g, mut h) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
            FftSineTransform::new(grid).inverse(few, &mut g).unwrap();
            NaiveSineTransform::new(grid).inverse(few, &mut h).unwrap();
            for (x, y) in g.iter().zip(&h) {
                assert!((x - y).abs() < 1e-12, "M={m}");
            }
        }
    }

    #[test]
    fn round_trip_at_large_grids() {
        for m in [512, 4096] {
            let grid = Grid1D::new(m).unwrap();
            let f = field(grid, 7);
            let mut t = FftSineTransform::new(grid);
            let mut c = vec![0.0; grid.interior_len()];
            let mut back = vec![0.0; grid.len()];
            t.forward(&f, &mut c).unwrap();
            t.inverse(&c, &mut back).unwrap();
            let err = f.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "M={m}: {err}");
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        let grid = Grid1D::new(10).unwrap();
        let mut t = FftSineTransform::new(grid);
        assert!(t.forward(&[0.0; 10], &mut [0.0; 3]).is_err());
        assert!(t.forward(&[0.0; 11], &mut [0.0; 10]).is_err());
    }
}
