//! Trajectory generation for `dX = (θΔX + F(X)) dt + B dW` on `(0, 1)` with
//! homogeneous Dirichlet conditions.
//!
//! Two schemes are available:
//!
//! * [`simulate_linear_exact`]: for `F = 0` each sine mode is an independent
//!   Ornstein-Uhlenbeck process and is advanced with its exact Gaussian
//!   transition, so the only error is mode truncation;
//! * [`simulate_semilinear_fd`]: semi-implicit Euler-Maruyama on the grid,
//!   `(I - Δt θ Δ_h) X^{n+1} = X^n + Δt F_h(X^n) + ΔW_h^n`, with the tridiagonal
//!   system solved exactly.
//!
//! Both stream the state to an observer at every time step; storing the field
//! is optional ([`TrajectoryRecorder`]).

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::profile::BumpProfile;
use crate::quadrature::integrate;
use crate::spectral::{eigenvalue, sine_transform, Grid1D, NaiveSineTransform, SineTransform};

/// `|X|` above this aborts the run.
pub const BLOW_UP_GUARD: f64 = 1e6;

/// Bounded smooth reaction terms `f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedReaction {
    /// `amplitude · tanh(u / width)`
    Tanh { amplitude: f64, width: f64 },
    /// `amplitude · sin(frequency · u)`
    Sine { amplitude: f64, frequency: f64 },
}

impl BoundedReaction {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            BoundedReaction::Tanh { amplitude, width } => amplitude * (u / width).tanh(),
            BoundedReaction::Sine { amplitude, frequency } => amplitude * (frequency * u).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    None,
    /// `10u(1 - u)(u - 0.5)`
    AllenCahn,
    /// `Σ a_i uⁱ`, coefficients ascending.
    Polynomial { coefficients: Vec<f64> },
    /// `-u ∂ₓu`, discretised in conservative form `-½ ∂ₓ(u²)`.
    Burgers,
    BoundedSmooth { reaction: BoundedReaction },
}

impl Nonlinearity {
    /// Allen-Cahn expanded: `-10u³ + 15u² - 5u`.
    pub fn allen_cahn_coefficients() -> Vec<f64> {
        vec![0.0, -5.0, 15.0, -10.0]
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::None)
    }

    /// Pointwise reaction `f(u)`; `None` for Burgers, which is not pointwise.
    pub fn reaction(&self, u: f64) -> Option<f64> {
        match self {
            Nonlinearity::None => Some(0.0),
            Nonlinearity::AllenCahn => Some(10.0 * u * (1.0 - u) * (u - 0.5)),
            Nonlinearity::Polynomial { coefficients } => {
                Some(coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c))
            }
            Nonlinearity::Burgers => None,
            Nonlinearity::BoundedSmooth { reaction } => Some(reaction.eval(u)),
        }
    }

    /// `F_h(X)` on the grid, zero at the boundary nodes.
    pub fn apply(&self, field: &[f64], grid: Grid1D, out: &mut [f64]) {
        let m = grid.intervals();
        out[0] = 0.0;
        out[m] = 0.0;
        match self {
            Nonlinearity::Burgers => burgers_drift_into(field, grid, out),
            _ => {
                for j in 1..m {
                    out[j] = self.reaction(field[j]).unwrap_or(0.0);
                }
            }
        }
    }
}

/// Conservative central difference of `-½ u²`:
/// `out_j = -(u_{j+1}² - u_{j-1}²) / (4h)`, zero on the boundary.
pub fn burgers_drift(field: &[f64], grid: Grid1D) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    burgers_drift_into(field, grid, &mut out);
    out
}

fn burgers_drift_into(field: &[f64], grid: Grid1D, out: &mut [f64]) {
    let m = grid.intervals();
    let scale = -0.25 * m as f64;
    out[0] = 0.0;
    out[m] = 0.0;
    for j in 1..m {
        out[j] = scale * (field[j + 1] * field[j + 1] - field[j - 1] * field[j - 1]);
    }
}

/// `S(s) = ∫_{-1}^{2s-1} φ / ∫_{-1}^{1} φ`, a C^∞ step from 0 to 1 on `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let phi = BumpProfile::bump();
    let total = integrate(|x| phi.eval(x), -1.0, 1.0, 1e-22, 1e-14).value;
    let upper = 2.0 * s - 1.0;
    // integrate the shorter tail for accuracy near both ends
    if upper <= 0.0 {
        integrate(|x| phi.eval(x), -1.0, upper, 1e-24, 1e-14).value / total
    } else {
        1.0 - integrate(|x| phi.eval(x), upper, 1.0, 1e-24, 1e-14).value / total
    }
}

/// Smooth plateau: 1 on `[0.3, 0.7]`, 0 outside `[0.3 - ε, 0.7 + ε]`, bump-mollified ramps.
pub fn initial_plateau(grid: Grid1D, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 0.3) {
        return Err(Error::invalid("eps", "must lie in (0, 0.3)"));
    }
    Ok(grid.sample(|y| {
        if (0.3..=0.7).contains(&y) {
            1.0
        } else if y < 0.3 {
            smoothstep((y - (0.3 - eps)) / eps)
        } else {
            smoothstep((0.7 + eps - y) / eps)
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    #[default]
    Zero,
    Plateau { eps: f64 },
    /// Sine coefficients `c_1, c_2, …`.
    Modes { coefficients: Vec<f64> },
    /// Grid values including both boundary nodes.
    Samples { values: Vec<f64> },
}

impl InitialCondition {
    pub fn samples(&self, grid: Grid1D) -> Result<Vec<f64>> {
        match self {
            InitialCondition::Zero => Ok(vec![0.0; grid.len()]),
            InitialCondition::Plateau { eps } => initial_plateau(grid, *eps),
            InitialCondition::Modes { coefficients } => {
                let n = coefficients.len().min(grid.interior_len());
                crate::spectral::inverse_sine_transform(grid, &coefficients[..n])
            }
            InitialCondition::Samples { values } => {
                if values.len() != grid.len() {
                    return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
                }
                let mut v = values.clone();
                v[0] = 0.0;
                v[grid.intervals()] = 0.0;
                Ok(v)
            }
        }
    }

    pub fn coefficients(&self, grid: Grid1D, modes: usize) -> Result<Vec<f64>> {
        match self {
            InitialCondition::Zero => Ok(vec![0.0; modes]),
            InitialCondition::Modes { coefficients } => {
                let mut c = vec![0.0; modes];
                for (dst, src) in c.iter_mut().zip(coefficients) {
                    *dst = *src;
                }
                Ok(c)
            }
            _ => sine_transform(grid, &self.samples(grid)?, modes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SpectralExact,
    #[default]
    SemiImplicitFd,
}

/// How the finite-difference scheme draws white noise (`γ = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSampling {
    /// `σ √(Δt/h) ξ_j` with iid `ξ_j` per interior node.
    #[default]
    Nodal,
    /// `Σ_k b_k √Δt ζ_k Φ_k(y_j)` over all `M - 1` modes, drawing `ζ_k` in the
    /// same order as the exact spectral simulator (equal in law to `Nodal`).
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub theta: f64,
    pub noise: NoiseModel,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    /// `M`: the grid is `y_j = j/M`.
    pub intervals: usize,
    /// `N`: the time grid is `t_n = nT/N`.
    pub time_steps: usize,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialCondition,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Keep every `stride`-th time step in a stored trajectory.
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub noise_sampling: NoiseSampling,
    /// Spectral truncation for the exact scheme; `M - 1` if absent.
    #[serde(default)]
    pub modes: Option<usize>,
}

fn one() -> usize {
    1
}

impl SimConfig {
    /// Linear equation on the `M = 500`, `N = 10⁴`, `T = 1` grid with zero initial value.
    pub fn new(theta: f64, noise: NoiseModel) -> Self {
        SimConfig {
            theta,
            noise,
            nonlinearity: Nonlinearity::None,
            intervals: 500,
            time_steps: 10_000,
            horizon: 1.0,
            initial: InitialCondition::Zero,
            seed: 0,
            scheme: Scheme::SemiImplicitFd,
            stride: 1,
            noise_sampling: NoiseSampling::Nodal,
            modes: None,
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.intervals)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.time_steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.horizon / self.time_steps as f64
    }

    pub fn mode_count(&self) -> usize {
        self.modes.unwrap_or(self.intervals.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid("theta", "must be positive"));
        }
        NoiseModel::new(self.noise.gamma, self.noise.sigma)?;
        self.grid()?;
        if self.time_steps == 0 {
            return Err(Error::invalid("time_steps", "must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        if self.scheme == Scheme::SpectralExact && !self.nonlinearity.is_linear() {
            return Err(Error::Unsupported("the exact spectral scheme requires a linear equation"));
        }
        let modes = self.mode_count();
        if modes == 0 || modes > self.intervals - 1 {
            return Err(Error::DimensionMismatch { expected: self.intervals - 1, found: modes });
        }
        Ok(())
    }
}

/// Solution samples `X(t_n, y_j)`; row `i` is time `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryField {
    pub times: Vec<f64>,
    /// Row-major `times.len() × (M + 1)`.
    pub values: Vec<f64>,
    pub intervals: usize,
    pub stride: usize,
    pub seed: u64,
}

impl TrajectoryField {
    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.intervals).expect("trajectory grid is valid")
    }

    pub fn row_len(&self) -> usize {
        self.intervals + 1
    }

    pub fn rows(&self) -> usize {
        self.times.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.row_len())
    }
}

/// One time slice handed to a [`FieldObserver`].
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub step: usize,
    pub time: f64,
    pub field: &'a [f64],
    /// `F_h(X^n)`, present for nonlinear equations.
    pub reaction: Option<&'a [f64]>,
    /// Noise increment driving the step `n → n+1`; absent at the last step.
    pub noise: Option<&'a [f64]>,
}

pub trait FieldObserver {
    fn observe(&mut self, view: &StepView<'_>);
}

pub trait ModeObserver {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]);
}

impl<T: FieldObserver + ?Sized> FieldObserver for &mut T {
    fn observe(&mut self, view: &StepView<'_>) {
        (**self).observe(view)
    }
}

impl<T: FieldObserver> FieldObserver for [T] {
    fn observe(&mut self, view: &StepView<'_>) {
        for o in self.iter_mut() {
            o.observe(view);
        }
    }
}

impl<T: FieldObserver> FieldObserver for Vec<T> {
    fn observe(&mut self, view: &StepView<'_>) {
        self.as_mut_slice().observe(view)
    }
}

impl<A: FieldObserver, B: FieldObserver> FieldObserver for (A, B) {
    fn observe(&mut self, view: &StepView<'_>) {
        self.0.observe(view);
        self.1.observe(view);
    }
}

impl<T: ModeObserver + ?Sized> ModeObserver for &mut T {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]) {
        (**self).observe_modes(step, time, coeffs)
    }
}

impl<T: ModeObserver> ModeObserver for [T] {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]) {
        for o in self.iter_mut() {
            o.observe_modes(step, time, coeffs);
        }
    }
}

impl<T: ModeObserver> ModeObserver for Vec<T> {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]) {
        self.as_mut_slice().observe_modes(step, time, coeffs)
    }
}

impl<A: ModeObserver, B: ModeObserver> ModeObserver for (A, B) {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]) {
        self.0.observe_modes(step, time, coeffs);
        self.1.observe_modes(step, time, coeffs);
    }
}

/// Exact per-mode OU transition for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct OuTransition {
    /// `e^{-θλ_kΔt}`
    pub decay: Vec<f64>,
    /// `b_k √((1 - e^{-2θλ_kΔt}) / (2θλ_k))`
    pub innovation_sd: Vec<f64>,
}

impl OuTransition {
    pub fn new(theta: f64, noise: &NoiseModel, modes: usize, dt: f64) -> Self {
        let mut decay = Vec::with_capacity(modes);
        let mut innovation_sd = Vec::with_capacity(modes);
        for k in 1..=modes {
            let rate = theta * eigenvalue(k);
            let b = noise.multiplier(eigenvalue(k));
            decay.push((-rate * dt).exp());
            innovation_sd.push(b * (-(-2.0 * rate * dt).exp_m1() / (2.0 * rate)).sqrt());
        }
        OuTransition { decay, innovation_sd }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, coeffs: &mut [f64], rng: &mut R) {
        for ((c, a), s) in coeffs.iter_mut().zip(&self.decay).zip(&self.innovation_sd) {
            let z: f64 = rng.sample(StandardNormal);
            *c = a * *c + s * z;
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact OU recursion for the first `modes` sine coefficients of the linear
/// equation, streamed to `observer` at `t_0, …, t_N`.
pub fn simulate_linear_exact<O: ModeObserver + ?Sized>(
    config: &SimConfig,
    modes: usize,
    observer: &mut O,
) -> Result<()> {
    if !config.nonlinearity.is_linear() {
        return Err(Error::Unsupported("the exact spectral scheme requires a linear equation"));
    }
    config.validate()?;
    let grid = config.grid()?;
    if modes == 0 || modes > grid.interior_len() {
        return Err(Error::DimensionMismatch { expected: grid.interior_len(), found: modes });
    }
    let transition = OuTransition::new(config.theta, &config.noise, modes, config.dt());
    let mut coeffs = config.initial.coefficients(grid, modes)?;
    let mut rng = rng_from_seed(config.seed);
    observer.observe_modes(0, 0.0, &coeffs);
    for n in 1..=config.time_steps {
        transition.step(&mut coeffs, &mut rng);
        observer.observe_modes(n, config.time(n), &coeffs);
    }
    Ok(())
}

/// Constant-coefficient tridiagonal solver for `(1 + 2r) x_j - r x_{j-1} - r x_{j+1} = d_j`,
/// `j = 1..M-1`, with the forward sweep factors precomputed.
#[derive(Debug, Clone)]
pub struct ImplicitHeatSolver {
    r: f64,
    c_prime: Vec<f64>,
    inv_denominator: Vec<f64>,
}

impl ImplicitHeatSolver {
    pub fn new(grid: Grid1D, theta: f64, dt: f64) -> Self {
        let n = grid.interior_len();
        let m = grid.intervals() as f64;
        let r = theta * dt * m * m;
        let diag = 1.0 + 2.0 * r;
        let mut c_prime = Vec::with_capacity(n);
        let mut inv_denominator = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            let denom = diag + r * prev;
            inv_denominator.push(1.0 / denom);
            prev = -r / denom;
            c_prime.push(prev);
        }
        ImplicitHeatSolver { r, c_prime, inv_denominator }
    }

    /// Solves in place on the interior of a Dirichlet field.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.c_prime.len();
        let interior = &mut x[1..=n];
        let mut prev = 0.0;
        for (v, inv) in interior.iter_mut().zip(&self.inv_denominator) {
            *v = (*v + self.r * prev) * inv;
            prev = *v;
        }
        for j in (0..n - 1).rev() {
            interior[j] -= self.c_prime[j] * interior[j + 1];
        }
    }
}

/// Semi-implicit Euler-Maruyama on the grid.
///
/// `transform` synthesises spectral noise (`γ > 0`, or [`NoiseSampling::Spectral`]).
pub fn simulate_semilinear_fd<O, S>(config: &SimConfig, transform: &mut S, observer: &mut O) -> Result<()>
where
    O: FieldObserver + ?Sized,
    S: SineTransform + ?Sized,
{
    config.validate()?;
    let grid = config.grid()?;
    let m = grid.intervals();
    let dt = config.dt();
    let solver = ImplicitHeatSolver::new(grid, config.theta, dt);
    let mut rng = rng_from_seed(config.seed);

    let spectral_noise = !config.noise.is_white() || config.noise_sampling == NoiseSampling::Spectral;
    let nodal_scale = config.noise.sigma * (dt * m as f64).sqrt();
    let mode_scale: Vec<f64> = (1..m).map(|k| config.noise.multiplier(eigenvalue(k)) * dt.sqrt()).collect();
    let mut mode_draws = vec![0.0; if spectral_noise { m - 1 } else { 0 }];

    let mut field = config.initial.samples(grid)?;
    let mut reaction = vec![0.0; grid.len()];
    let mut noise = vec![0.0; grid.len()];
    let nonlinear = !config.nonlinearity.is_linear();

    for n in 0..=config.time_steps {
        if nonlinear {
            config.nonlinearity.apply(&field, grid, &mut reaction);
        }
        let last = n == config.time_steps;
        if !last {
            if spectral_noise {
                for (z, s) in mode_draws.iter_mut().zip(&mode_scale) {
                    let g: f64 = rng.sample(StandardNormal);
                    *z = s * g;
                }
                transform.inverse(&mode_draws, &mut noise)?;
            } else {
                for v in noise[1..m].iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = nodal_scale * g;
                }
            }
        }
        observer.observe(&StepView {
            step: n,
            time: config.time(n),
            field: &field,
            reaction: nonlinear.then_some(&reaction[..]),
            noise: (!last).then_some(&noise[..]),
        });
        if last {
            break;
        }
        if nonlinear {
            for j in 1..m {
                field[j] += dt * reaction[j] + noise[j];
            }
        } else {
            for j in 1..m {
                field[j] += noise[j];
            }
        }
        solver.solve(&mut field);
        if let Some(bad) = field.iter().find(|v| !(v.abs() <= BLOW_UP_GUARD)) {
            return Err(Error::BlowUp { step: n + 1, time: config.time(n + 1), value: bad.abs() });
        }
    }
    Ok(())
}

/// Stores every `stride`-th slice; synthesises fields from modes when used as a
/// [`ModeObserver`].
pub struct TrajectoryRecorder<S = NaiveSineTransform> {
    grid: Grid1D,
    stride: usize,
    seed: u64,
    transform: S,
    times: Vec<f64>,
    values: Vec<f64>,
    scratch: Vec<f64>,
}

impl TrajectoryRecorder<NaiveSineTransform> {
    pub fn new(grid: Grid1D, stride: usize, seed: u64) -> Self {
        Self::with_transform(grid, stride, seed, NaiveSineTransform::new(grid))
    }
}

impl<S: SineTransform> TrajectoryRecorder<S> {
    pub fn with_transform(grid: Grid1D, stride: usize, seed: u64, transform: S) -> Self {
        TrajectoryRecorder {
            grid,
            stride: stride.max(1),
            seed,
            transform,
            times: Vec::new(),
            values: Vec::new(),
            scratch: vec![0.0; grid.len()],
        }
    }

    pub fn finish(self) -> TrajectoryField {
        TrajectoryField {
            times: self.times,
            values: self.values,
            intervals: self.grid.intervals(),
            stride: self.stride,
            seed: self.seed,
        }
    }
}

impl<S> FieldObserver for TrajectoryRecorder<S> {
    fn observe(&mut self, view: &StepView<'_>) {
        if view.step % self.stride == 0 {
            self.times.push(view.time);
            self.values.extend_from_slice(view.field);
        }
    }
}

impl<S: SineTransform> ModeObserver for TrajectoryRecorder<S> {
    fn observe_modes(&mut self, step: usize, time: f64, coeffs: &[f64]) {
        if step % self.stride == 0 {
            self.transform
                .inverse(coeffs, &mut self.scratch)
                .expect("mode count checked by the simulator");
            self.times.push(time);
            self.values.extend_from_slice(&self.scratch);
        }
    }
}

/// Runs `config` with its configured scheme and stores the field.
pub fn simulate(config: &SimConfig) -> Result<TrajectoryField> {
    config.validate()?;
    let grid = config.grid()?;
    let mut recorder = TrajectoryRecorder::new(grid, config.stride, config.seed);
    match config.scheme {
        Scheme::SpectralExact => simulate_linear_exact(config, config.mode_count(), &mut recorder)?,
        Scheme::SemiImplicitFd => {
            let mut transform = NaiveSineTransform::new(grid);
            simulate_semilinear_fd(config, &mut transform, &mut recorder)?
        }
    }
    Ok(recorder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{PI, SQRT_2};

    fn heat_config(scheme: Scheme) -> SimConfig {
        let mut c = SimConfig::new(0.01, NoiseModel::white(0.0).unwrap());
        c.scheme = scheme;
        c.intervals = 100;
        c.time_steps = 1000;
        c.initial = InitialCondition::Modes { coefficients: vec![1.0] };
        c.stride = 100;
        c
    }

    #[test]
    fn allen_cahn_expansion() {
        let ac = Nonlinearity::AllenCahn;
        let poly = Nonlinearity::Polynomial { coefficients: Nonlinearity::allen_cahn_coefficients() };
        for &u in &[-1.3, 0.0, 0.2, 0.5, 0.9, 1.7] {
            assert_relative_eq!(ac.reaction(u).unwrap(), poly.reaction(u).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn plateau_profile() {
        let grid = Grid1D::new(500).unwrap();
        let x0 = initial_plateau(grid, 0.05).unwrap();
        assert_eq!(x0[250], 1.0);
        assert_eq!(x0[50], 0.0);
        assert_eq!(x0[125], 0.0); // y = 0.25 = 0.3 - eps
        assert!(x0[140] > 0.0 && x0[140] < 1.0);
        // no jumps: bounded second differences
        let d2 = grid.second_difference(&x0);
        let max_jump = x0.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        // steepest slope of the normalised bump integral is 2 phi(0) / (eps int phi) = 4.13 / eps
        assert!(max_jump <= 4.14 / 0.05 * grid.step());
        assert!(d2.iter().all(|v| v.is_finite()));
        assert!(initial_plateau(grid, 0.3).is_err());
        assert_relative_eq!(smoothstep(0.5), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn deterministic_heat_decay_exact_scheme() {
        let c = heat_config(Scheme::SpectralExact);
        let traj = simulate(&c).unwrap();
        let grid = traj.grid();
        for (i, row) in traj.iter_rows().enumerate() {
            let t = traj.times[i];
            let amp = (-c.theta * PI * PI * t).exp();
            for j in 0..=grid.intervals() {
                let exact = amp * SQRT_2 * (PI * grid.node(j)).sin();
                assert!((row[j] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_heat_decay_fd_scheme() {
        let c = heat_config(Scheme::SemiImplicitFd);
        let traj = simulate(&c).unwrap();
        let last = traj.row(traj.rows() - 1);
        let amp = (-c.theta * PI * PI * c.horizon).exp();
        let mid = last[50];
        assert_relative_eq!(mid, amp * SQRT_2, max_relative = 1e-3);
    }

    #[test]
    fn exact_scheme_rejects_nonlinearity() {
        let mut c = heat_config(Scheme::SpectralExact);
        c.nonlinearity = Nonlinearity::AllenCahn;
        assert!(matches!(simulate(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn boundary_zero_and_reproducible() {
        let mut c = SimConfig::new(0.01, NoiseModel::white(0.05).unwrap());
        c.intervals = 64;
        c.time_steps = 200;
        c.seed = 7;
        c.nonlinearity = Nonlinearity::AllenCahn;
        c.initial = InitialCondition::Plateau { eps: 0.05 };
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a, b);
        for row in a.iter_rows() {
            assert_eq!(row[0], 0.0);
            assert_eq!(row[64], 0.0);
        }
        c.seed = 8;
        assert_ne!(simulate(&c).unwrap().values, a.values);
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        // u' = u³ explodes in finite time
        let mut c = SimConfig::new(0.001, NoiseModel::white(0.0).unwrap());
        c.intervals = 16;
        c.time_steps = 1000;
        c.horizon = 10.0;
        c.nonlinearity = Nonlinearity::Polynomial { coefficients: vec![0.0, 0.0, 0.0, 1.0] };
        c.initial = InitialCondition::Modes { coefficients: vec![2.0] };
        match simulate(&c) {
            Err(Error::BlowUp { step, .. }) => assert!(step > 0 && step <= 1000),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn burgers_drift_on_sine() {
        let grid = Grid1D::new(400).unwrap();
        let u = grid.sample(|y| (PI * y).sin());
        let d = burgers_drift(&u, grid);
        let h = grid.step();
        for j in 1..400 {
            let exact = -(PI / 2.0) * (2.0 * PI * grid.node(j)).sin();
            assert!((d[j] - exact).abs() < 2.0 * h * h * PI.powi(3));
        }
        assert_eq!(d[0], 0.0);
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        assert_eq!(burgers_drift(&neg, grid), d);
        // constant interior: zero away from the boundary layer
        let flat = grid.sample(|_| 1.0);
        let d = burgers_drift(&flat, grid);
        assert!(d[2..399].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tridiagonal_solver_inverts_operator() {
        let grid = Grid1D::new(50).unwrap();
        let solver = ImplicitHeatSolver::new(grid, 0.3, 0.01);
        let r = solver.r;
        let x: Vec<f64> = grid.sample(|y| (3.0 * y).sin() + y * y);
        let mut d = vec![0.0; 51];
        for j in 1..50 {
            d[j] = (1.0 + 2.0 * r) * x[j] - r * (x[j - 1] + x[j + 1]);
        }
        solver.solve(&mut d);
        for j in 1..50 {
            assert_relative_eq!(d[j], x[j], max_relative = 1e-12);
        }
    }
}
