//! The EMT-PD generational loop, NSGA-II style environmental selection, and
//! a single-task baseline sharing the same selection machinery.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{
    decode, initialize_population, split_population, Individual, MultiTaskProblem, RunConfig,
    TaskDefinition, UnifiedGenotype,
};
use crate::metrics::{igd, igd_plus, ReferenceSet};
use crate::probmodel::{self, FittedModel};
use crate::transfer::{self, TransferStats};
use crate::{Error, Result};

/// PF sample size used to rank knowledge donors under the SH/MH strategies.
const GUIDE_PF_POINTS: usize = 1000;

/// Baseline simulated-binary-crossover settings (whole-pair probability and
/// distribution index).
pub const SBX_CROSSOVER_PROB: f64 = 0.3;
pub const SBX_ETA: f64 = 20.0;

/// Returns true when `a` Pareto-dominates `b` (minimization).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Fast non-dominated sort over raw objective vectors; returns fronts of
/// indices, best first.
pub fn nondominated_fronts(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    if n == 0 {
        return Vec::new();
    }
    let width = objectives[0].len();
    assert!(
        objectives.iter().all(|o| o.len() == width),
        "mixed objective vector lengths"
    );

    let mut dominated_by: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut counts = vec![0u32; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j]) {
                dominated_by[i].push(j as u32);
                counts[j] += 1;
            } else if dominates(&objectives[j], &objectives[i]) {
                dominated_by[j].push(i as u32);
                counts[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                let j = j as usize;
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// [`nondominated_fronts`] over evaluated individuals.
pub fn fast_nondominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let objectives: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    nondominated_fronts(&objectives)
}

/// Standard crowding distance of one front (indices into `objectives`);
/// boundary individuals get infinity, ranges are normalized per objective.
pub fn crowding_of(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut dist = vec![0.0; len];
    if len == 0 {
        return dist;
    }
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let n_obj = objectives[front[0]].len();
    let mut order: Vec<usize> = (0..len).collect();
    for m in 0..n_obj {
        order.sort_by(|&a, &b| {
            objectives[front[a]][m]
                .partial_cmp(&objectives[front[b]][m])
                .unwrap()
        });
        dist[order[0]] = f64::INFINITY;
        dist[order[len - 1]] = f64::INFINITY;
        let range = objectives[front[order[len - 1]]][m] - objectives[front[order[0]]][m];
        if range <= 0.0 {
            continue; // zero-range objective contributes nothing
        }
        for k in 1..len - 1 {
            let prev = objectives[front[order[k - 1]]][m];
            let next = objectives[front[order[k + 1]]][m];
            dist[order[k]] += (next - prev) / range;
        }
    }
    dist
}

/// Crowding distances of a whole front of individuals.
pub fn crowding_distance(front: &[Individual]) -> Vec<f64> {
    let objectives: Vec<Vec<f64>> = front.iter().map(|i| i.objectives.clone()).collect();
    let idx: Vec<usize> = (0..front.len()).collect();
    crowding_of(&objectives, &idx)
}

/// (mu + lambda) truncation of parents and offspring down to `n_sub`
/// survivors: fill by ascending front, truncate the straddling front by
/// descending crowding distance, ties by insertion order. Survivors carry
/// their rank and crowding marks.
pub fn environmental_selection(
    parents: Vec<Individual>,
    offspring: Vec<Individual>,
    n_sub: usize,
) -> Vec<Individual> {
    let mut union = parents;
    union.extend(offspring);
    assert!(
        union.len() >= n_sub,
        "selection pool smaller than the requested survivor count"
    );
    let objectives: Vec<Vec<f64>> = union.iter().map(|i| i.objectives.clone()).collect();
    let fronts = nondominated_fronts(&objectives);

    let mut survivors: Vec<Individual> = Vec::with_capacity(n_sub);
    let mut marks: Vec<(usize, f64, usize)> = Vec::with_capacity(n_sub); // (union idx, crowding, rank)
    for (rank, front) in fronts.iter().enumerate() {
        let crowd = crowding_of(&objectives, front);
        if marks.len() + front.len() <= n_sub {
            for (k, &i) in front.iter().enumerate() {
                marks.push((i, crowd[k], rank));
            }
        } else {
            let mut by_crowding: Vec<usize> = (0..front.len()).collect();
            // Stable sort keeps insertion order on crowding ties.
            by_crowding.sort_by(|&a, &b| crowd[b].partial_cmp(&crowd[a]).unwrap());
            for &k in by_crowding.iter().take(n_sub - marks.len()) {
                marks.push((front[k], crowd[k], rank));
            }
            break;
        }
        if marks.len() == n_sub {
            break;
        }
    }

    let mut taken: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    for (i, crowding, rank) in marks {
        let mut ind = taken[i].take().expect("index selected twice");
        ind.rank = rank;
        ind.crowding = crowding;
        survivors.push(ind);
    }
    survivors
}

/// Stamps rank and crowding on an already-evaluated population in place.
fn mark_population(pop: &mut [Individual]) {
    let objectives: Vec<Vec<f64>> = pop.iter().map(|i| i.objectives.clone()).collect();
    for (rank, front) in nondominated_fronts(&objectives).iter().enumerate() {
        let crowd = crowding_of(&objectives, front);
        for (k, &i) in front.iter().enumerate() {
            pop[i].rank = rank;
            pop[i].crowding = crowd[k];
        }
    }
}

/// One trace record per generation per task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    /// Total function evaluations consumed when the row was written.
    pub evaluations: usize,
    /// IGD for problems with up to three objectives, IGD+ beyond.
    pub indicator: f64,
    /// Model fitting error e_g of the generation (NaN for the baseline).
    pub fitting_error: f64,
    /// Mode-to-knowledge distance (NaN for the baseline).
    pub d1: f64,
    /// Mean adaptive weight over the subpopulation (NaN for the baseline).
    pub mean_w: f64,
}

/// Per-task outcome: trace, final non-dominated archive (objective vectors),
/// and the archive's final indicator value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskResult {
    pub name: String,
    pub trace: Vec<TraceRow>,
    pub archive: Vec<Vec<f64>>,
    pub final_indicator: f64,
}

/// Everything a run produces; together with the config echo and seed it
/// fully re-derives the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub problem: String,
    pub seed: u64,
    pub config: RunConfig,
    pub evaluations: usize,
    pub wall_time_secs: f64,
    pub tasks: Vec<TaskResult>,
}

struct TaskState<'a> {
    task: &'a TaskDefinition,
    subpop: Vec<Individual>,
    refset: Option<ReferenceSet>,
    guide_pf: Option<Vec<Vec<f64>>>,
    trace: Vec<TraceRow>,
}

/// Evaluates every unevaluated genotype while the budget allows, dropping
/// whatever the budget cannot cover. Returns the evaluated individuals.
fn evaluate_batch(
    task: &TaskDefinition,
    genotypes: Vec<UnifiedGenotype>,
    evaluations: &mut usize,
    budget: usize,
) -> Result<Vec<Individual>> {
    let mut out = Vec::with_capacity(genotypes.len());
    for genotype in genotypes {
        if *evaluations >= budget {
            break;
        }
        let native = decode(&genotype, task);
        let objectives = task.evaluate_native(&native);
        *evaluations += 1;
        if objectives.len() != task.n_objectives() {
            return Err(Error::Evaluation(format!(
                "task '{}' returned {} objectives, expected {}",
                task.name(),
                objectives.len(),
                task.n_objectives()
            )));
        }
        if objectives.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!(
                "task '{}' returned a non-finite objective at {:?}",
                task.name(),
                native
            )));
        }
        let mut ind = Individual::new(genotype);
        ind.objectives = objectives;
        out.push(ind);
    }
    Ok(out)
}

fn front_one_objectives(pop: &[Individual]) -> Vec<Vec<f64>> {
    if pop.is_empty() {
        return Vec::new();
    }
    let fronts = fast_nondominated_sort(pop);
    fronts[0]
        .iter()
        .map(|&i| pop[i].objectives.clone())
        .collect()
}

fn indicator_value(task: &TaskDefinition, refset: Option<&ReferenceSet>, archive: &[Vec<f64>]) -> f64 {
    let Some(refset) = refset else {
        return f64::NAN;
    };
    if archive.is_empty() {
        return f64::NAN;
    }
    let value = if task.n_objectives() <= 3 {
        igd(refset, archive)
    } else {
        igd_plus(refset, archive)
    };
    value.unwrap_or(f64::NAN)
}

fn build_refset(task: &TaskDefinition, count: usize, seed: u64) -> Option<ReferenceSet> {
    task.sample_pf(count, seed)
        .ok()
        .and_then(|points| ReferenceSet::analytic(points).ok())
}

/// Runs EMT-PD on a two-task problem until the generation or evaluation
/// budget is exhausted, whichever binds first.
pub fn run(problem: &MultiTaskProblem, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    if config.population_size < 4 && config.max_generations > 0 {
        return Err(Error::Config(
            "population_size must be at least 4 so each task can fit a model".into(),
        ));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let budget = config.max_evaluations;
    let mut evaluations = 0usize;

    let pop = initialize_population(problem, config.population_size, &mut rng)?;
    let (sub1, sub2) = split_population(pop)?;
    let n_sub = config.population_size / 2;

    let mut states: Vec<TaskState> = Vec::with_capacity(2);
    for (t, (task, sub)) in [(&problem.task1, sub1), (&problem.task2, sub2)]
        .into_iter()
        .enumerate()
    {
        let refset = build_refset(task, config.ref_points, ref_seed(config.seed, t));
        let guide_pf = if config.transfer_strategy.needs_pf_reference() {
            Some(task.sample_pf(GUIDE_PF_POINTS, guide_seed(config.seed, t))?)
        } else {
            None
        };
        states.push(TaskState {
            task,
            subpop: sub,
            refset,
            guide_pf,
            trace: Vec::new(),
        });
    }

    // Initial evaluation, budget-capped like everything else.
    for state in &mut states {
        let genotypes: Vec<UnifiedGenotype> = state
            .subpop
            .drain(..)
            .map(|ind| ind.genotype)
            .collect();
        state.subpop = evaluate_batch(state.task, genotypes, &mut evaluations, budget)?;
    }

    for generation in 1..=config.max_generations {
        if evaluations >= budget {
            break;
        }
        if states.iter().any(|s| s.subpop.len() < 2) {
            break; // budget starved a subpopulation below model-fitting size
        }

        let models: Vec<FittedModel> = states
            .iter()
            .map(|s| probmodel::fit(&s.subpop, config.model_kind))
            .collect::<Result<_>>()?;
        let errors: Vec<f64> = states
            .iter()
            .zip(&models)
            .map(|(s, m)| probmodel::fitting_error(&s.subpop, m))
            .collect();

        // Per task: knowledge point from the other task, then offspring.
        let mut all_offspring: Vec<Vec<Individual>> = Vec::with_capacity(2);
        let mut all_stats: Vec<TransferStats> = Vec::with_capacity(2);
        for t in 0..2 {
            let o = 1 - t;
            let knowledge = transfer::knowledge_source(
                config.transfer_strategy,
                &models[t],
                &models[o],
                &states[o].subpop,
                states[o].guide_pf.as_deref(),
                &mut rng,
            )?;
            let (genotypes, stats) = transfer::generate_offspring(
                &states[t].subpop,
                &models[t],
                &knowledge,
                config,
                &mut rng,
            );
            let offspring =
                evaluate_batch(states[t].task, genotypes, &mut evaluations, budget)?;
            all_offspring.push(offspring);
            all_stats.push(stats);
        }

        for (t, offspring) in all_offspring.into_iter().enumerate() {
            let state = &mut states[t];
            let parents = std::mem::take(&mut state.subpop);
            state.subpop = environmental_selection(parents, offspring, n_sub);
            let archive = front_one_objectives(&state.subpop);
            state.trace.push(TraceRow {
                generation,
                evaluations,
                indicator: indicator_value(state.task, state.refset.as_ref(), &archive),
                fitting_error: errors[t],
                d1: all_stats[t].d1,
                mean_w: all_stats[t].mean_w,
            });
        }
    }

    let tasks = states
        .into_iter()
        .map(|state| {
            let archive = front_one_objectives(&state.subpop);
            let final_indicator =
                indicator_value(state.task, state.refset.as_ref(), &archive);
            TaskResult {
                name: state.task.name().to_string(),
                trace: state.trace,
                archive,
                final_indicator,
            }
        })
        .collect();

    Ok(RunResult {
        problem: problem.name.clone(),
        seed: config.seed,
        config: config.clone(),
        evaluations,
        wall_time_secs: started.elapsed().as_secs_f64(),
        tasks,
    })
}

fn ref_seed(seed: u64, task_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(task_index as u64 + 1)
}

fn guide_seed(seed: u64, task_index: usize) -> u64 {
    seed.wrapping_mul(0xD1B5_4A32_D192_ED03)
        .wrapping_add(task_index as u64 + 1)
}

/// Binary tournament by the crowded-comparison operator.
fn tournament<'a, R: Rng>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding) {
        a
    } else {
        b
    }
}

/// Bounded SBX on the unit box; each variable crosses with probability 0.5.
fn sbx<R: Rng>(p1: &[f64], p2: &[f64], eta_c: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for j in 0..p1.len() {
        if rng.random::<f64>() <= 0.5 {
            let u: f64 = rng.random();
            let beta = if u <= 0.5 {
                (2.0 * u).powf(1.0 / (eta_c + 1.0))
            } else {
                (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta_c + 1.0))
            };
            c1[j] = (0.5 * ((1.0 + beta) * p1[j] + (1.0 - beta) * p2[j])).clamp(0.0, 1.0);
            c2[j] = (0.5 * ((1.0 - beta) * p1[j] + (1.0 + beta) * p2[j])).clamp(0.0, 1.0);
        }
    }
    (c1, c2)
}

/// Generational NSGA-II on a single task, granted the per-task share of the
/// multi-task budget (half the population, half the evaluations).
pub fn single_task_baseline(task: &TaskDefinition, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let n_sub = config.population_size / 2;
    if n_sub < 2 {
        return Err(Error::Config(
            "baseline needs a per-task population of at least 2".into(),
        ));
    }
    let budget = config.max_evaluations / 2;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let refset = build_refset(task, config.ref_points, ref_seed(config.seed, 0));
    let dim = task.native_dim();

    let mut evaluations = 0usize;
    let genotypes: Vec<UnifiedGenotype> = (0..n_sub)
        .map(|_| {
            let values: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            UnifiedGenotype::clamped(values)
        })
        .collect();
    let mut pop = evaluate_batch(task, genotypes, &mut evaluations, budget)?;
    mark_population(&mut pop);

    let mut trace = Vec::new();
    for generation in 1..=config.max_generations {
        if evaluations >= budget || pop.len() < 2 {
            break;
        }
        let mut children: Vec<UnifiedGenotype> = Vec::with_capacity(n_sub);
        while children.len() < n_sub {
            let p1 = tournament(&pop, &mut rng).genotype.values().to_vec();
            let p2 = tournament(&pop, &mut rng).genotype.values().to_vec();
            let (c1, c2) = if rng.random::<f64>() < SBX_CROSSOVER_PROB {
                sbx(&p1, &p2, SBX_ETA, &mut rng)
            } else {
                (p1, p2)
            };
            for c in [c1, c2] {
                if children.len() == n_sub {
                    break;
                }
                let mutated = transfer::polynomial_mutation(
                    &c,
                    config.mutation_probability,
                    config.mutation_index,
                    &mut rng,
                );
                children.push(UnifiedGenotype::clamped(mutated));
            }
        }
        let offspring = evaluate_batch(task, children, &mut evaluations, budget)?;
        pop = environmental_selection(pop, offspring, n_sub);
        let archive = front_one_objectives(&pop);
        trace.push(TraceRow {
            generation,
            evaluations,
            indicator: indicator_value(task, refset.as_ref(), &archive),
            fitting_error: f64::NAN,
            d1: f64::NAN,
            mean_w: f64::NAN,
        });
    }

    let archive = front_one_objectives(&pop);
    let final_indicator = indicator_value(task, refset.as_ref(), &archive);
    Ok(RunResult {
        problem: task.name().to_string(),
        seed: config.seed,
        config: config.clone(),
        evaluations,
        wall_time_secs: started.elapsed().as_secs_f64(),
        tasks: vec![TaskResult {
            name: task.name().to_string(),
            trace,
            archive,
            final_indicator,
        }],
    })
}
