//! Experiment-runner internals behind the `emtpd` binary: plan parsing and
//! resolution, batch execution with CSV/JSON emission, and the fitting-error
//! diagnostics sweep.

pub mod exec;
pub mod plan;

pub use exec::{diagnostics, execute, ExecReport};
pub use plan::{parse_config, ConfigOverrides, ExperimentPlan, PlanEntry, PlanError};
