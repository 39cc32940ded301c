//! Domain types, the unified search space, population initialization and
//! splitting, and genotype decoding.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::probmodel::ModelKind;
use crate::transfer::TransferStrategy;
use crate::{Error, Result};

/// A decision vector in the normalized unified search space `[0,1]^D`.
///
/// The length is the unified dimension, i.e. the maximum native dimension
/// over the tasks of a problem. Every coordinate stays inside `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedGenotype {
    values: Vec<f64>,
}

impl UnifiedGenotype {
    /// Wraps `values`, rejecting coordinates outside `[0,1]` or non-finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!(
                "genotype coordinate {v} outside the unified box [0,1]"
            )));
        }
        Ok(Self { values })
    }

    /// Wraps `values` after clamping every coordinate into `[0,1]`.
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rank value of an individual that has not been through environmental
/// selection yet.
pub const UNRANKED: usize = usize::MAX;

/// A candidate solution: unified genotype plus cached task objectives.
///
/// `objectives` is empty until the owning task evaluated the individual;
/// it is never recomputed unless the genotype changes, which keeps the
/// function-evaluation count exact. `rank` and `crowding` are only valid
/// after environmental selection marked them.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genotype: UnifiedGenotype,
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn new(genotype: UnifiedGenotype) -> Self {
        Self {
            genotype,
            objectives: Vec::new(),
            rank: UNRANKED,
            crowding: 0.0,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        !self.objectives.is_empty()
    }
}

/// Objective evaluator: native decision vector in, objective vector out.
pub type Evaluator = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Draws `count` points from the task's analytic Pareto front,
/// deterministically for a given seed.
pub type PfSampler = Box<dyn Fn(usize, u64) -> Vec<Vec<f64>> + Send + Sync>;

/// One optimization task: evaluator, native box bounds, and an optional
/// analytic Pareto-front sampler used by quality indicators.
pub struct TaskDefinition {
    name: String,
    native_dim: usize,
    n_objectives: usize,
    lower_bounds: Vec<f64>,
    upper_bounds: Vec<f64>,
    evaluator: Evaluator,
    pf_sampler: Option<PfSampler>,
}

impl TaskDefinition {
    pub fn new(
        name: impl Into<String>,
        native_dim: usize,
        n_objectives: usize,
        lower_bounds: Vec<f64>,
        upper_bounds: Vec<f64>,
        evaluator: Evaluator,
    ) -> Result<Self> {
        if native_dim == 0 {
            return Err(Error::Config("native_dim must be positive".into()));
        }
        if n_objectives == 0 {
            return Err(Error::Config("n_objectives must be positive".into()));
        }
        if lower_bounds.len() != native_dim || upper_bounds.len() != native_dim {
            return Err(Error::Config(format!(
                "bounds length must equal native_dim ({native_dim})"
            )));
        }
        if lower_bounds
            .iter()
            .zip(&upper_bounds)
            .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::Config(
                "each lower bound must be finite and strictly below its upper bound".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            native_dim,
            n_objectives,
            lower_bounds,
            upper_bounds,
            evaluator,
            pf_sampler: None,
        })
    }

    pub fn with_pf_sampler(mut self, sampler: PfSampler) -> Self {
        self.pf_sampler = Some(sampler);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn native_dim(&self) -> usize {
        self.native_dim
    }

    pub fn n_objectives(&self) -> usize {
        self.n_objectives
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper_bounds
    }

    /// Evaluates the objective function at a native decision vector.
    pub fn evaluate_native(&self, x: &[f64]) -> Vec<f64> {
        (self.evaluator)(x)
    }

    pub fn has_pf_sampler(&self) -> bool {
        self.pf_sampler.is_some()
    }

    /// Samples `count` reference points from the analytic Pareto front.
    pub fn sample_pf(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        match &self.pf_sampler {
            Some(sampler) => Ok(sampler(count, seed)),
            None => Err(Error::Unsupported(format!(
                "task '{}' has no Pareto-front sampler",
                self.name
            ))),
        }
    }
}

impl fmt::Debug for TaskDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskDefinition")
            .field("name", &self.name)
            .field("native_dim", &self.native_dim)
            .field("n_objectives", &self.n_objectives)
            .finish_non_exhaustive()
    }
}

/// A two-task problem sharing one unified search space.
#[derive(Debug)]
pub struct MultiTaskProblem {
    pub name: String,
    pub task1: TaskDefinition,
    pub task2: TaskDefinition,
}

impl MultiTaskProblem {
    pub fn new(name: impl Into<String>, task1: TaskDefinition, task2: TaskDefinition) -> Self {
        Self {
            name: name.into(),
            task1,
            task2,
        }
    }

    /// Unified dimension: the larger of the two native dimensions.
    pub fn unified_dim(&self) -> usize {
        self.task1.native_dim.max(self.task2.native_dim)
    }

    pub fn tasks(&self) -> [&TaskDefinition; 2] {
        [&self.task1, &self.task2]
    }
}

/// Run parameters. `Default` reproduces the common settings
/// (N=200, G=1000, 200000 evaluations, F=0.01, p_m=1/N, eta_m=20,
/// Gaussian model, PD transfer).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Whole-population size N (split evenly across the two tasks).
    pub population_size: usize,
    /// Generation cap G.
    pub max_generations: usize,
    /// Shared function-evaluation budget.
    pub max_evaluations: usize,
    /// Noise scale factor F of the second transfer stage.
    pub scale_factor: f64,
    /// Per-coordinate polynomial-mutation probability p_m.
    pub mutation_probability: f64,
    /// Polynomial-mutation distribution index eta_m.
    pub mutation_index: f64,
    pub model_kind: ModelKind,
    pub transfer_strategy: TransferStrategy,
    pub seed: u64,
    /// Reference-set size used by the per-generation quality indicator.
    pub ref_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let n = 200;
        Self {
            population_size: n,
            max_generations: 1000,
            max_evaluations: 200_000,
            scale_factor: 0.01,
            mutation_probability: 1.0 / n as f64,
            mutation_index: 20.0,
            model_kind: ModelKind::Gaussian,
            transfer_strategy: TransferStrategy::Pd,
            seed: 0,
            ref_points: 10_000,
        }
    }
}

impl RunConfig {
    /// Checks the structural invariants shared by all run modes.
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return Err(Error::Config(format!(
                "population_size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("max_evaluations must be positive".into()));
        }
        if !(self.scale_factor > 0.0) || !self.scale_factor.is_finite() {
            return Err(Error::Config("scale_factor must be positive".into()));
        }
        if !(self.mutation_probability > 0.0 && self.mutation_probability <= 1.0) {
            return Err(Error::Config(format!(
                "mutation_probability must lie in (0,1], got {}",
                self.mutation_probability
            )));
        }
        if !(self.mutation_index > 0.0) || !self.mutation_index.is_finite() {
            return Err(Error::Config("mutation_index must be positive".into()));
        }
        if self.ref_points == 0 {
            return Err(Error::Config("ref_points must be positive".into()));
        }
        Ok(())
    }
}

/// Draws `n` individuals uniformly at random in the unified box.
/// Objectives are left unevaluated.
pub fn initialize_population<R: Rng>(
    problem: &MultiTaskProblem,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if n < 2 {
        return Err(Error::Config(format!(
            "population size must be at least 2, got {n}"
        )));
    }
    let dim = problem.unified_dim();
    let mut pop = Vec::with_capacity(n);
    for _ in 0..n {
        let values: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        pop.push(Individual::new(UnifiedGenotype::clamped(values)));
    }
    Ok(pop)
}

/// Splits a population into two disjoint subpopulations of equal size,
/// assigning by index parity of the initialization order.
pub fn split_population(pop: Vec<Individual>) -> Result<(Vec<Individual>, Vec<Individual>)> {
    if pop.len() % 2 != 0 {
        return Err(Error::Config(format!(
            "cannot split an odd population of {}",
            pop.len()
        )));
    }
    let mut sub1 = Vec::with_capacity(pop.len() / 2);
    let mut sub2 = Vec::with_capacity(pop.len() / 2);
    for (i, ind) in pop.into_iter().enumerate() {
        if i % 2 == 0 {
            sub1.push(ind);
        } else {
            sub2.push(ind);
        }
    }
    Ok((sub1, sub2))
}

/// Maps the first `native_dim` unified coordinates affinely onto the task's
/// native box.
///
/// Panics if the genotype is shorter than the task's native dimension;
/// that is an internal invariant violation, not a user error.
pub fn decode(genotype: &UnifiedGenotype, task: &TaskDefinition) -> Vec<f64> {
    let values = genotype.values();
    assert!(
        values.len() >= task.native_dim(),
        "genotype of length {} cannot decode a task of native dimension {}",
        values.len(),
        task.native_dim()
    );
    values[..task.native_dim()]
        .iter()
        .zip(task.lower_bounds())
        .zip(task.upper_bounds())
        .map(|((u, lo), hi)| lo + u * (hi - lo))
        .collect()
}

/// Inverse of [`decode`] on in-bounds native points: maps a native decision
/// vector back into `[0,1]^native_dim`.
pub fn encode(native: &[f64], task: &TaskDefinition) -> Vec<f64> {
    assert_eq!(native.len(), task.native_dim(), "native vector length mismatch");
    native
        .iter()
        .zip(task.lower_bounds())
        .zip(task.upper_bounds())
        .map(|((x, lo), hi)| (x - lo) / (hi - lo))
        .collect()
}
