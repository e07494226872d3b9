//! Monte-Carlo studies, file formats and the `spde` command line on top of
//! [`spde_core`].

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod io;
pub mod plan;

pub use error::{LabError, Result};
pub use experiments::{run_plan, McResult, PlanResult};
pub use plan::ExperimentPlan;
