//! EMT-PD: evolutionary multi-tasking for multi- and many-objective
//! optimization with two-stage adaptive knowledge transfer driven by
//! per-dimension probability models of each task's population.
//!
//! Two tasks share a normalized unified search space `[0,1]^D`. Each
//! generation a univariate probability model (Gaussian, Exponential, Gamma
//! or Beta) is fitted to every subpopulation by maximum likelihood. The
//! argmax of the two models' product is the transferred knowledge point:
//! stage one moves each individual toward it with an adaptive weight, stage
//! two perturbs the intermediate point with distance-scaled Gaussian noise,
//! and polynomial mutation finishes offspring generation. Environmental
//! selection is NSGA-II style (non-dominated sorting plus crowding
//! distance), applied per task.
//!
//! Module layout:
//!
//! * [`core`]      – domain types, unified space, initialization/splitting, decoding
//! * [`probmodel`] – per-dimension MLE fitting, modes, product argmax, fitting error
//! * [`transfer`]  – the two-stage transfer operators and ablation knowledge sources
//! * [`evolve`]    – generational loop, environmental selection, single-task baseline
//! * [`problems`]  – MaF-based two-task benchmarks, toy fixtures, problem registry
//! * [`metrics`]   – IGD / IGD+ indicators and the inter-task similarity measure

pub mod core;
pub mod evolve;
pub mod metrics;
pub mod probmodel;
pub mod problems;
pub mod transfer;

pub use crate::core::{
    Individual, MultiTaskProblem, RunConfig, TaskDefinition, UnifiedGenotype,
};
pub use crate::evolve::{run, single_task_baseline, RunResult};
pub use crate::probmodel::{FittedModel, ModelKind};
pub use crate::transfer::TransferStrategy;

/// Errors surfaced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid run or problem configuration (bad sizes, unknown names, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A probability model could not be fitted.
    #[error("model error: {0}")]
    Model(String),
    /// Input data violated a contract (non-finite values, bad shapes).
    #[error("data error: {0}")]
    Data(String),
    /// A quality indicator was called with unusable inputs.
    #[error("indicator error: {0}")]
    Indicator(String),
    /// The requested capability is not available for this task/problem.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An objective evaluator misbehaved at run time.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed numeric text (reference-set files).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
