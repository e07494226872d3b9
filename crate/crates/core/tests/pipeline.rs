use spde_core::estimator::{augmented_mle_with, decomposition_diagnostics};
use spde_core::kernels::b_star_norm_sq;
use spde_core::measurements::{MeasurementRecorder, SpectralMeasurementRecorder};
use spde_core::simulator::{simulate, simulate_linear_exact, simulate_semilinear_fd, InitialCondition};
use spde_core::spectral::NaiveSineTransform;
use spde_core::{
    measure, paper_kernel, scale_kernel, BNormSource, MeasurementSeries, NoiseModel, Nonlinearity, Scheme,
    SimConfig, SpectralBasis,
};

const THETA: f64 = 0.01;

fn config(scheme: Scheme, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(THETA, NoiseModel::white(0.05).unwrap());
    c.scheme = scheme;
    c.intervals = 200;
    c.time_steps = 4000;
    c.seed = seed;
    c
}

fn exact_series(seed: u64, delta: f64) -> MeasurementSeries {
    let c = config(Scheme::SpectralExact, seed);
    let grid = c.grid().unwrap();
    let kernel = scale_kernel(&paper_kernel(), delta, 0.4, grid).unwrap();
    let modes = c.mode_count();
    let b = b_star_norm_sq(&kernel, &c.noise, &SpectralBasis::new(modes, 0.4).unwrap()).unwrap();
    let mut rec = SpectralMeasurementRecorder::new(&kernel, modes).unwrap();
    simulate_linear_exact(&c, modes, &mut rec).unwrap();
    rec.finish(Some(b.value), Some(seed)).unwrap()
}

#[test]
fn online_and_offline_measurements_agree() {
    let c = config(Scheme::SemiImplicitFd, 5);
    let grid = c.grid().unwrap();
    let kernel = scale_kernel(&paper_kernel(), 0.1, 0.4, grid).unwrap();
    let offline = measure(&simulate(&c).unwrap(), &kernel).unwrap();
    let mut rec = MeasurementRecorder::new(&kernel);
    simulate_semilinear_fd(&c, &mut NaiveSineTransform::new(grid), &mut rec).unwrap();
    let online = rec.finish(None, Some(5)).unwrap();
    assert_eq!(offline.x_series, online.x_series);
    assert_eq!(offline.xdelta_series, online.xdelta_series);
}

#[test]
fn quadratic_variation_tracks_spectral_norm() {
    for seed in 0..4 {
        let s = exact_series(seed, 0.1);
        let spectral = s.b_norm_sq_spectral.unwrap();
        let rel = (s.b_norm_sq_qv / spectral - 1.0).abs();
        // relative sd of the realised QV is sqrt(2/N) ≈ 0.022
        assert!(rel < 0.09, "seed {seed}: qv {} vs {spectral}", s.b_norm_sq_qv);
    }
}

#[test]
fn estimate_does_not_depend_on_norm_source() {
    let s = exact_series(11, 0.1);
    let a = augmented_mle_with(&s, Some(BNormSource::Spectral), 0.05).unwrap();
    let b = augmented_mle_with(&s, Some(BNormSource::QuadraticVariation), 0.05).unwrap();
    assert_eq!(a.theta_hat, b.theta_hat);
    assert!((a.fisher_obs / b.fisher_obs - s.b_norm_sq_qv / s.b_norm_sq_spectral.unwrap()).abs() < 1e-12);
}

#[test]
fn left_point_sums_beat_right_point_sums() {
    // the Itô (left-point) sum is consistent; evaluating X^Δ at the right end
    // adds the quadratic variation and drags the estimate away from θ
    let (mut left_err, mut right_err) = (0.0, 0.0);
    for seed in 20..30 {
        let s = exact_series(seed, 0.1);
        let (mut num_l, mut num_r, mut den) = (0.0, 0.0, 0.0);
        for i in 0..s.len() - 1 {
            let dt = s.times[i + 1] - s.times[i];
            let dx = s.x_series[i + 1] - s.x_series[i];
            num_l += s.xdelta_series[i] * dx;
            num_r += s.xdelta_series[i + 1] * dx;
            den += s.xdelta_series[i] * s.xdelta_series[i] * dt;
        }
        left_err += (num_l / den - THETA).abs();
        right_err += (num_r / den - THETA).abs();
        assert_eq!(num_l / den, augmented_mle_with(&s, None, 0.05).unwrap().theta_hat);
    }
    assert!(right_err > 3.0 * left_err, "left {left_err}, right {right_err}");
}

#[test]
fn decomposition_reassembles_the_estimate() {
    let mut c = config(Scheme::SemiImplicitFd, 3);
    c.nonlinearity = Nonlinearity::AllenCahn;
    c.initial = InitialCondition::Plateau { eps: 0.05 };
    let grid = c.grid().unwrap();
    let kernel = scale_kernel(&paper_kernel(), 0.1, 0.4, grid).unwrap();
    let mut rec = MeasurementRecorder::instrumented(&kernel);
    simulate_semilinear_fd(&c, &mut NaiveSineTransform::new(grid), &mut rec).unwrap();
    let s = rec.finish(None, Some(3)).unwrap();
    let d = decomposition_diagnostics(&s, THETA).unwrap();
    assert!(d.reaction_term.is_finite() && d.reaction_term != 0.0);
    assert!((THETA + d.reaction_term + d.martingale_term - d.theta_hat).abs() < 1e-15);
    let noise = d.martingale_from_noise.unwrap();
    // the implicit step leaves an O(Δt) remainder between the two martingale forms
    assert!((noise - d.martingale_term).abs() < 0.3 * THETA, "{noise} vs {}", d.martingale_term);
}

#[test]
fn linear_runs_have_no_reaction_contribution() {
    let c = config(Scheme::SemiImplicitFd, 4);
    let grid = c.grid().unwrap();
    let kernel = scale_kernel(&paper_kernel(), 0.1, 0.4, grid).unwrap();
    let mut rec = MeasurementRecorder::instrumented(&kernel);
    simulate_semilinear_fd(&c, &mut NaiveSineTransform::new(grid), &mut rec).unwrap();
    let d = decomposition_diagnostics(&rec.finish(None, None).unwrap(), THETA).unwrap();
    assert_eq!(d.reaction_term, 0.0);
}

#[test]
fn quadratic_variation_ratio_at_fine_time_steps() {
    let mut c = config(Scheme::SpectralExact, 77);
    c.time_steps = 100_000;
    let grid = c.grid().unwrap();
    let kernel = scale_kernel(&paper_kernel(), 0.05, 0.4, grid).unwrap();
    let modes = c.mode_count();
    let b = b_star_norm_sq(&kernel, &c.noise, &SpectralBasis::new(modes, 0.4).unwrap()).unwrap();
    let mut rec = SpectralMeasurementRecorder::new(&kernel, modes).unwrap();
    simulate_linear_exact(&c, modes, &mut rec).unwrap();
    let s = rec.finish(Some(b.value), None).unwrap();
    let ratio = s.b_norm_sq_qv / b.value;
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
}
