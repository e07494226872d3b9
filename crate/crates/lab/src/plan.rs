//! Experiment plans: what to simulate, over which `(δ, x₀)` cells, how often.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spde_core::estimator::BNormSource;
use spde_core::kernels::{paper_kernel, KernelSpec, LaplacianSampling};
use spde_core::profile::{BumpProfile, Polynomial};
use spde_core::simulator::{InitialCondition, NoiseSampling, Nonlinearity, Scheme, SimConfig};
use spde_core::NoiseModel;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    #[default]
    Linear,
    AllenCahn,
    Burgers,
    /// Reaction `f(u) = Σ a_i u^i`.
    Polynomial(Vec<f64>),
}

impl Equation {
    pub fn nonlinearity(&self) -> Nonlinearity {
        match self {
            Equation::Linear => Nonlinearity::None,
            Equation::AllenCahn => Nonlinearity::AllenCahn,
            Equation::Burgers => Nonlinearity::Burgers,
            Equation::Polynomial(c) => Nonlinearity::Polynomial { coefficients: c.clone() },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Equation::Linear => "linear",
            Equation::AllenCahn => "allen_cahn",
            Equation::Burgers => "burgers",
            Equation::Polynomial(_) => "polynomial",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(Equation::Linear),
            "allen_cahn" | "allen-cahn" => Ok(Equation::AllenCahn),
            "burgers" => Ok(Equation::Burgers),
            other => Err(LabError::Plan(format!(
                "unknown equation {other:?} (linear, allen_cahn, burgers; polynomials via the config file)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Single,
    #[default]
    Rates,
    Qq,
    Coverage,
}

/// `auto` uses the exact spectral scheme for the linear equation and the
/// finite-difference scheme otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Auto,
    SpectralExact,
    SemiImplicitFd,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// `K̃ = φ'''`.
    #[default]
    Phi3,
    /// `K̃(x) = p(x) φ(x / r)` with `p` given by ascending coefficients.
    Custom {
        polynomial: Vec<f64>,
        #[serde(default = "unit")]
        radius: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub mode: PlanMode,
    pub equation: Equation,
    pub theta: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub horizon: f64,
    pub intervals: usize,
    pub time_steps: usize,
    pub initial: InitialCondition,
    pub deltas: Vec<f64>,
    pub x0s: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub scheme: SchemeChoice,
    pub noise_sampling: NoiseSampling,
    /// Spectral truncation of the exact scheme; `M - 1` if absent.
    pub modes: Option<usize>,
    pub kernel: KernelChoice,
    /// Smoothing order the kernel is built for; defaults to `gamma`.
    pub kernel_gamma: Option<f64>,
    pub laplacian: LaplacianSampling,
    /// Source of `‖B*K‖²`; spectral when the noise model is known.
    pub b_norm: BNormSource,
    pub alpha: f64,
    /// Drop cells whose `x₀` had to be moved away from the boundary.
    pub exclude_clamped: bool,
    /// Record reaction pairings and report `I⁻¹R` per replication.
    pub instrument: bool,
    pub out: Option<String>,
    pub formats: Vec<Format>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            mode: PlanMode::Rates,
            equation: Equation::Linear,
            theta: 0.01,
            sigma: 0.05,
            gamma: 0.0,
            horizon: 1.0,
            intervals: 500,
            time_steps: 10_000,
            initial: InitialCondition::Plateau { eps: 0.05 },
            deltas: vec![0.05, 0.0707, 0.1, 0.141, 0.2],
            x0s: vec![0.4],
            replications: 1000,
            base_seed: 0,
            scheme: SchemeChoice::Auto,
            noise_sampling: NoiseSampling::Nodal,
            modes: None,
            kernel: KernelChoice::Phi3,
            kernel_gamma: None,
            laplacian: LaplacianSampling::Analytic,
            b_norm: BNormSource::Spectral,
            alpha: 0.05,
            exclude_clamped: false,
            instrument: false,
            out: None,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl ExperimentPlan {
    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let plan: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)?
        } else {
            serde_json::from_str(&text)?
        };
        Ok(plan)
    }

    /// Full resolution: `N = 10⁵` steps and 5000 replications.
    pub fn paper_scale(mut self) -> Self {
        self.time_steps = 100_000;
        self.replications = 5000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Plan(m));
        if self.deltas.is_empty() || self.x0s.is_empty() {
            return bad("need at least one delta and one x0".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
            return bad(format!("delta {d} outside (0, 0.5)"));
        }
        if let Some(x) = self.x0s.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return bad(format!("x0 {x} outside (0, 1)"));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if self.mode == PlanMode::Rates && self.deltas.len() < 3 {
            return bad("a rate study needs at least 3 deltas".into());
        }
        if self.scheme == SchemeChoice::SpectralExact && self.equation != Equation::Linear {
            return bad("the exact spectral scheme only simulates the linear equation".into());
        }
        self.sim_config(0)?.validate()?;
        self.kernel_spec()?;
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        Ok(NoiseModel::new(self.gamma, self.sigma)?)
    }

    pub fn scheme(&self) -> Scheme {
        match (self.scheme, &self.equation) {
            (SchemeChoice::SpectralExact, _) | (SchemeChoice::Auto, Equation::Linear) => Scheme::SpectralExact,
            _ => Scheme::SemiImplicitFd,
        }
    }

    pub fn sim_config(&self, seed: u64) -> Result<SimConfig> {
        let mut c = SimConfig::new(self.theta, self.noise()?);
        c.nonlinearity = self.equation.nonlinearity();
        c.intervals = self.intervals;
        c.time_steps = self.time_steps;
        c.horizon = self.horizon;
        c.initial = self.initial.clone();
        c.seed = seed;
        c.scheme = self.scheme();
        c.noise_sampling = self.noise_sampling;
        c.modes = self.modes;
        Ok(c)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let gamma = self.kernel_gamma.unwrap_or(self.gamma);
        let spec = match &self.kernel {
            KernelChoice::Phi3 => paper_kernel().with_gamma(gamma)?,
            KernelChoice::Custom { polynomial, radius } => {
                if !(*radius > 0.0) {
                    return Err(LabError::Plan("kernel radius must be positive".into()));
                }
                let base = BumpProfile::polynomial_times_bump(Polynomial(polynomial.clone()), *radius);
                KernelSpec::new("custom", base, gamma)?
            }
        };
        Ok(spec)
    }

    pub fn writes(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// Rough single-core cost in seconds, from per-step work of each scheme.
    pub fn estimated_seconds(&self) -> f64 {
        let per_node_step = match self.scheme() {
            Scheme::SpectralExact => 1.4e-8,
            Scheme::SemiImplicitFd => 2.2e-8,
        };
        let cells = (self.deltas.len() * self.x0s.len()) as f64;
        cells * self.replications as f64 * self.time_steps as f64 * self.intervals as f64 * per_node_step
    }
}
