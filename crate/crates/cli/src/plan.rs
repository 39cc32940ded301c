//! Experiment plans: JSON documents plus command-line overrides, resolved
//! against the problem registry with the table defaults filled in.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use emtpd::core::{MultiTaskProblem, RunConfig};
use emtpd::probmodel::ModelKind;
use emtpd::problems::ProblemRegistry;
use emtpd::transfer::TransferStrategy;

/// Plan-level failures. `Usage` maps to exit code 2 and carries the valid
/// vocabulary where applicable.
#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl From<std::io::Error> for PlanError {
    fn from(e: std::io::Error) -> Self {
        PlanError::Other(e.into())
    }
}

/// Optional per-entry overrides of the table defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub pop_size: Option<usize>,
    pub generations: Option<usize>,
    pub budget: Option<usize>,
    pub scale_factor: Option<f64>,
    pub mutation_probability: Option<f64>,
    pub mutation_index: Option<f64>,
    pub ref_points: Option<usize>,
}

impl ConfigOverrides {
    fn merge_over(&self, base: &ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            pop_size: self.pop_size.or(base.pop_size),
            generations: self.generations.or(base.generations),
            budget: self.budget.or(base.budget),
            scale_factor: self.scale_factor.or(base.scale_factor),
            mutation_probability: self.mutation_probability.or(base.mutation_probability),
            mutation_index: self.mutation_index.or(base.mutation_index),
            ref_points: self.ref_points.or(base.ref_points),
        }
    }
}

/// One experiment: a problem instance, model, strategy and base seed.
/// Repetitions run with seed, seed+1, ...
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub problem: String,
    #[serde(default = "default_objectives")]
    pub objectives: usize,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Run the single-task baseline on each task instead of EMT-PD.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub overrides: ConfigOverrides,
}

fn default_objectives() -> usize {
    10
}
fn default_model() -> String {
    "gaussian".to_string()
}
fn default_strategy() -> String {
    "PD".to_string()
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub entries: Vec<PlanEntry>,
    /// Output directory for traces, summaries and archives.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Repetitions per entry (seed, seed+1, ...).
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_repetitions() -> usize {
    1
}

/// Flag values collected by the binary; every field is optional so that
/// explicitly-passed flags can override plan-file entries (flags win).
#[derive(Debug, Clone, Default)]
pub struct CliOptions {
    pub plan: Option<PathBuf>,
    pub problem: Option<String>,
    pub objectives: Option<usize>,
    pub model: Option<String>,
    pub strategy: Option<String>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub budget: Option<usize>,
    pub generations: Option<usize>,
    pub pop_size: Option<usize>,
    pub scale_factor: Option<f64>,
    pub mutation_probability: Option<f64>,
    pub ref_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub baseline: bool,
}

/// Builds the fully resolved plan from a plan file and/or flags; flags win
/// over file contents, and table defaults fill whatever remains unset.
pub fn parse_config(options: &CliOptions) -> Result<ExperimentPlan, PlanError> {
    let mut plan = match &options.plan {
        Some(path) => load_plan(path)?,
        None => {
            let problem = options.problem.clone().ok_or_else(|| {
                PlanError::Usage("either --plan or --problem is required".to_string())
            })?;
            ExperimentPlan {
                entries: vec![PlanEntry {
                    problem,
                    objectives: default_objectives(),
                    model: default_model(),
                    strategy: default_strategy(),
                    seed: default_seed(),
                    baseline: false,
                    overrides: ConfigOverrides::default(),
                }],
                output: default_output(),
                repetitions: default_repetitions(),
            }
        }
    };

    if plan.entries.is_empty() {
        return Err(PlanError::Usage("the plan has no entries".to_string()));
    }

    let flag_overrides = ConfigOverrides {
        pop_size: options.pop_size,
        generations: options.generations,
        budget: options.budget,
        scale_factor: options.scale_factor,
        mutation_probability: options.mutation_probability,
        mutation_index: None,
        ref_points: options.ref_points,
    };
    for entry in &mut plan.entries {
        if let Some(problem) = &options.problem {
            if options.plan.is_some() {
                entry.problem = problem.clone();
            }
        }
        if let Some(objectives) = options.objectives {
            entry.objectives = objectives;
        }
        if let Some(model) = &options.model {
            entry.model = model.clone();
        }
        if let Some(strategy) = &options.strategy {
            entry.strategy = strategy.clone();
        }
        if let Some(seed) = options.seed {
            entry.seed = seed;
        }
        if options.baseline {
            entry.baseline = true;
        }
        entry.overrides = flag_overrides.merge_over(&entry.overrides);
    }
    if let Some(runs) = options.runs {
        plan.repetitions = runs;
    }
    if let Some(out) = &options.out {
        plan.output = out.clone();
    }
    if plan.repetitions == 0 {
        return Err(PlanError::Usage("--runs must be at least 1".to_string()));
    }

    // Resolve every entry now so vocabulary errors surface as usage errors
    // before anything executes.
    let registry = ProblemRegistry::with_builtins();
    for entry in &plan.entries {
        entry.resolve(&registry).map(|_| ())?;
    }
    Ok(plan)
}

fn load_plan(path: &Path) -> Result<ExperimentPlan, PlanError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlanError::Usage(format!("cannot read plan {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| PlanError::Usage(format!("malformed plan {}: {e}", path.display())))
}

/// Table V population/budget defaults for the MTMaOP instances, keyed by
/// objective count; everything else uses the Table I defaults. The n=30 row
/// lists 465, rounded up to the next even size so the population splits.
fn default_sizes(problem: &str, objectives: usize) -> (usize, usize, usize) {
    if problem.to_ascii_lowercase().starts_with("maf-") {
        match objectives {
            10 => (230, 300, 69_000),
            20 => (420, 300, 126_000),
            30 => (466, 300, 139_500),
            _ => (200, 1000, 200_000),
        }
    } else {
        (200, 1000, 200_000)
    }
}

impl PlanEntry {
    /// Resolves against the registry, producing the problem instance and
    /// the effective run configuration.
    pub fn resolve(
        &self,
        registry: &ProblemRegistry,
    ) -> Result<(MultiTaskProblem, RunConfig), PlanError> {
        let model = ModelKind::from_str(&self.model).map_err(|e| PlanError::Usage(e.to_string()))?;
        let strategy = TransferStrategy::from_str(&self.strategy)
            .map_err(|e| PlanError::Usage(e.to_string()))?;
        let problem = registry
            .build(&self.problem, self.objectives)
            .map_err(|e| PlanError::Usage(e.to_string()))?;

        let (pop_default, gen_default, fe_default) = default_sizes(&self.problem, self.objectives);
        let o = &self.overrides;
        let population_size = o.pop_size.unwrap_or(pop_default);
        let config = RunConfig {
            population_size,
            max_generations: o.generations.unwrap_or(gen_default),
            max_evaluations: o.budget.unwrap_or(fe_default),
            scale_factor: o.scale_factor.unwrap_or(0.01),
            mutation_probability: o
                .mutation_probability
                .unwrap_or(1.0 / population_size as f64),
            mutation_index: o.mutation_index.unwrap_or(20.0),
            model_kind: model,
            transfer_strategy: strategy,
            seed: self.seed,
            ref_points: o.ref_points.unwrap_or(10_000),
        };
        config
            .validate()
            .map_err(|e| PlanError::Usage(e.to_string()))?;
        Ok((problem, config))
    }

    /// File-name stem for this entry's outputs.
    pub fn slug(&self) -> String {
        let mode = if self.baseline {
            "baseline".to_string()
        } else {
            self.strategy.to_ascii_lowercase()
        };
        format!(
            "{}_m{}_{}_{}",
            self.problem.to_ascii_lowercase(),
            self.objectives,
            self.model.to_ascii_lowercase(),
            mode
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(problem: &str) -> CliOptions {
        CliOptions {
            problem: Some(problem.to_string()),
            ..CliOptions::default()
        }
    }

    #[test]
    fn defaults_follow_the_tables() {
        let mut opts = single("toy-0.0");
        opts.objectives = Some(2);
        let plan = parse_config(&opts).unwrap();
        let registry = ProblemRegistry::with_builtins();
        let (_, config) = plan.entries[0].resolve(&registry).unwrap();
        assert_eq!(config.population_size, 200);
        assert_eq!(config.max_generations, 1000);
        assert_eq!(config.max_evaluations, 200_000);
        assert!((config.scale_factor - 0.01).abs() < 1e-15);
        assert!((config.mutation_probability - 1.0 / 200.0).abs() < 1e-15);

        let opts = single("MaF-HS1");
        let plan = parse_config(&opts).unwrap();
        let (_, config) = plan.entries[0].resolve(&registry).unwrap();
        assert_eq!(config.population_size, 230);
        assert_eq!(config.max_generations, 300);
        assert_eq!(config.max_evaluations, 69_000);
        assert!((config.mutation_probability - 1.0 / 230.0).abs() < 1e-15);

        let mut opts = single("MaF-HS1");
        opts.objectives = Some(20);
        let plan = parse_config(&opts).unwrap();
        let (_, config) = plan.entries[0].resolve(&registry).unwrap();
        assert_eq!(
            (config.population_size, config.max_generations, config.max_evaluations),
            (420, 300, 126_000)
        );
    }

    #[test]
    fn flags_override_plan_defaults() {
        let mut opts = single("MaF-HS2");
        opts.pop_size = Some(64);
        opts.generations = Some(10);
        opts.seed = Some(99);
        let plan = parse_config(&opts).unwrap();
        let registry = ProblemRegistry::with_builtins();
        let (_, config) = plan.entries[0].resolve(&registry).unwrap();
        assert_eq!(config.population_size, 64);
        assert_eq!(config.max_generations, 10);
        assert_eq!(config.seed, 99);
        // p_m tracks the overridden population size when not pinned.
        assert!((config.mutation_probability - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_vocabulary_is_a_usage_error() {
        let mut opts = single("MaF-HS1");
        opts.strategy = Some("XX".to_string());
        match parse_config(&opts) {
            Err(PlanError::Usage(msg)) => assert!(msg.contains("PD")),
            other => panic!("expected usage error, got {other:?}"),
        }

        let mut opts = single("nope");
        opts.objectives = Some(10);
        match parse_config(&opts) {
            Err(PlanError::Usage(msg)) => assert!(msg.contains("MaF-HS1")),
            other => panic!("expected usage error, got {other:?}"),
        }

        let mut opts = single("MaF-HS1");
        opts.model = Some("cauchy".to_string());
        assert!(matches!(parse_config(&opts), Err(PlanError::Usage(_))));
    }

    #[test]
    fn plan_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.json");
        std::fs::write(
            &path,
            r#"{
                "output": "exp",
                "repetitions": 3,
                "entries": [
                    {"problem": "MaF-HS2", "objectives": 10, "model": "gamma",
                     "strategy": "SR", "seed": 5,
                     "overrides": {"generations": 12, "pop_size": 40}}
                ]
            }"#,
        )
        .unwrap();
        let opts = CliOptions {
            plan: Some(path),
            ..CliOptions::default()
        };
        let plan = parse_config(&opts).unwrap();
        assert_eq!(plan.repetitions, 3);
        assert_eq!(plan.output, PathBuf::from("exp"));
        let registry = ProblemRegistry::with_builtins();
        let (problem, config) = plan.entries[0].resolve(&registry).unwrap();
        assert_eq!(problem.name, "MAF-HS2");
        assert_eq!(config.max_generations, 12);
        assert_eq!(config.model_kind, ModelKind::Gamma);
        assert_eq!(config.transfer_strategy, TransferStrategy::Sr);
    }
}
