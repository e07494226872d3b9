use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is outside its admissible range.
    InvalidArgument { name: &'static str, reason: String },
    DimensionMismatch { expected: usize, found: usize },
    /// A profile or kernel reaches outside the open unit interval.
    SupportViolation { low: f64, high: f64 },
    /// Even the boundary-clamped kernel does not fit into (0, 1).
    KernelDoesNotFit { delta: f64, support_radius: f64 },
    /// The requested integral does not converge (e.g. negative power of a non-zero-mean profile).
    DivergentIntegral(&'static str),
    BlowUp { step: usize, time: f64, value: f64 },
    DegenerateDenominator(f64),
    /// The nonlinear bias was requested from a run without reaction pairings.
    NotInstrumented,
    InsufficientData { needed: usize, found: usize },
    Degenerate(&'static str),
    /// The requested scheme cannot simulate the configured equation.
    Unsupported(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }

    /// Short machine-readable tag, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument { .. } => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SupportViolation { .. } => "support_violation",
            Error::KernelDoesNotFit { .. } => "kernel_does_not_fit",
            Error::DivergentIntegral(_) => "divergent_integral",
            Error::BlowUp { .. } => "blow_up",
            Error::DegenerateDenominator(_) => "degenerate_denominator",
            Error::NotInstrumented => "not_instrumented",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::Unsupported(_) => "unsupported",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SupportViolation { low, high } => {
                write!(f, "support [{low}, {high}] is not contained in (0, 1)")
            }
            Error::KernelDoesNotFit { delta, support_radius } => write!(
                f,
                "kernel of half-width {} (delta = {delta}, radius = {support_radius}) cannot fit inside (0, 1)",
                delta * support_radius
            ),
            Error::DivergentIntegral(what) => write!(f, "divergent integral: {what}"),
            Error::BlowUp { step, time, value } => {
                write!(f, "solution blew up at step {step} (t = {time}): |X| = {value}")
            }
            Error::DegenerateDenominator(d) => {
                write!(f, "estimator denominator {d} is degenerate")
            }
            Error::NotInstrumented => {
                write!(f, "nonlinear bias requires reaction pairings from an instrumented run")
            }
            Error::InsufficientData { needed, found } => {
                write!(f, "need at least {needed} samples, got {found}")
            }
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

impl core::error::Error for Error {}
