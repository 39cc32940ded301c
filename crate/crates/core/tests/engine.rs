//! End-to-end contracts of the generational loop and the baseline.

use emtpd::core::RunConfig;
use emtpd::evolve::{self, dominates};
use emtpd::probmodel::ModelKind;
use emtpd::problems::toy_problem;
use emtpd::transfer::TransferStrategy;

fn small_config(seed: u64) -> RunConfig {
    RunConfig {
        population_size: 40,
        max_generations: 30,
        max_evaluations: 100_000,
        seed,
        ref_points: 500,
        mutation_probability: 1.0 / 40.0,
        ..RunConfig::default()
    }
}

#[test]
fn zero_generations_archive_initial_front() {
    let problem = toy_problem(0.3);
    let mut config = small_config(5);
    config.max_generations = 0;
    let result = evolve::run(&problem, &config).unwrap();
    assert_eq!(result.evaluations, 40);
    assert!(result.tasks.iter().all(|t| t.trace.is_empty()));
    for task in &result.tasks {
        assert!(!task.archive.is_empty());
        for (i, a) in task.archive.iter().enumerate() {
            for (j, b) in task.archive.iter().enumerate() {
                if i != j {
                    assert!(!dominates(b, a), "archive not mutually non-dominated");
                }
            }
        }
    }
}

#[test]
fn evaluation_count_is_exact_when_budget_is_loose() {
    let problem = toy_problem(0.2);
    let config = small_config(7);
    let result = evolve::run(&problem, &config).unwrap();
    // N init + G*N offspring
    assert_eq!(result.evaluations, 40 + 30 * 40);
    assert_eq!(result.tasks[0].trace.len(), 30);
    assert_eq!(result.tasks[1].trace.len(), 30);
}

#[test]
fn evaluation_budget_binds_mid_generation() {
    let problem = toy_problem(0.2);
    let mut config = small_config(7);
    config.max_evaluations = 40 + 40 + 15; // init + one generation + part of the next
    let result = evolve::run(&problem, &config).unwrap();
    assert!(result.evaluations <= config.max_evaluations);
    assert_eq!(result.evaluations, config.max_evaluations);
}

#[test]
fn runs_are_reproducible_per_seed() {
    let problem = toy_problem(0.4);
    let config = small_config(11);
    let a = evolve::run(&problem, &config).unwrap();
    let b = evolve::run(&problem, &config).unwrap();
    assert_eq!(a.evaluations, b.evaluations);
    for (ta, tb) in a.tasks.iter().zip(&b.tasks) {
        assert_eq!(ta.archive, tb.archive);
        assert_eq!(ta.trace.len(), tb.trace.len());
        for (ra, rb) in ta.trace.iter().zip(&tb.trace) {
            assert_eq!(ra.indicator.to_bits(), rb.indicator.to_bits());
            assert_eq!(ra.fitting_error.to_bits(), rb.fitting_error.to_bits());
            assert_eq!(ra.d1.to_bits(), rb.d1.to_bits());
            assert_eq!(ra.mean_w.to_bits(), rb.mean_w.to_bits());
        }
    }

    let mut other = config;
    other.seed = 12;
    let c = evolve::run(&problem, &other).unwrap();
    assert_ne!(
        a.tasks[0].archive, c.tasks[0].archive,
        "different seeds should explore differently"
    );
}

#[test]
fn every_strategy_and_model_completes() {
    let problem = toy_problem(0.5);
    for strategy in TransferStrategy::ALL {
        for model in ModelKind::ALL {
            let mut config = small_config(3);
            config.max_generations = 5;
            config.transfer_strategy = strategy;
            config.model_kind = model;
            let result = evolve::run(&problem, &config)
                .unwrap_or_else(|e| panic!("{strategy}/{model} failed: {e}"));
            assert_eq!(result.tasks.len(), 2);
            assert!(result.tasks.iter().all(|t| !t.archive.is_empty()));
        }
    }
}

#[test]
fn trace_carries_transfer_telemetry() {
    let problem = toy_problem(0.0);
    let result = evolve::run(&problem, &small_config(2)).unwrap();
    for task in &result.tasks {
        for row in &task.trace {
            assert!(row.d1 >= 0.0);
            assert!((0.0..=1.0).contains(&row.mean_w));
            assert!(row.fitting_error >= 0.0);
            assert!(row.indicator.is_finite());
        }
    }
}

#[test]
fn archive_members_are_not_dominated_by_final_population() {
    // Archive consistency: the returned archive is the non-dominated subset
    // of the final subpopulation, so no retained individual dominates it.
    let problem = toy_problem(0.6);
    let result = evolve::run(&problem, &small_config(9)).unwrap();
    for task in &result.tasks {
        for a in &task.archive {
            for b in &task.archive {
                assert!(!dominates(b, a));
            }
        }
    }
}

#[test]
fn baseline_budget_and_determinism() {
    let problem = toy_problem(0.0);
    let mut config = small_config(21);
    config.max_generations = 25;
    let a = evolve::single_task_baseline(&problem.task1, &config).unwrap();
    let b = evolve::single_task_baseline(&problem.task1, &config).unwrap();
    assert_eq!(a.evaluations, b.evaluations);
    assert_eq!(a.tasks[0].archive, b.tasks[0].archive);
    assert!(a.evaluations <= config.max_evaluations / 2);
    assert_eq!(a.tasks.len(), 1);
    assert!(a.tasks[0].trace.iter().all(|r| r.d1.is_nan()));
}

#[test]
fn baseline_converges_on_the_convex_sphere_pair() {
    // Median IGD across 5 seeds should shrink from the early generations to
    // the final ones on an easy convex problem.
    let problem = toy_problem(0.0);
    let generations = 60;
    let mut early = Vec::new();
    let mut late = Vec::new();
    for seed in 0..5 {
        let mut config = small_config(100 + seed);
        config.max_generations = generations;
        let r = evolve::single_task_baseline(&problem.task1, &config).unwrap();
        let trace = &r.tasks[0].trace;
        assert_eq!(trace.len(), generations);
        early.push(trace[2].indicator);
        late.push(trace[generations - 1].indicator);
    }
    early.sort_by(|a, b| a.partial_cmp(b).unwrap());
    late.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med_early = early[2];
    let med_late = late[2];
    assert!(
        med_late < med_early,
        "median IGD failed to improve: early {med_early} late {med_late}"
    );
}

#[test]
fn run_rejects_bad_configs() {
    let problem = toy_problem(0.0);
    let mut config = small_config(1);
    config.population_size = 7;
    assert!(evolve::run(&problem, &config).is_err());

    let mut config = small_config(1);
    config.population_size = 2; // too small to fit per-task models
    assert!(evolve::run(&problem, &config).is_err());
}
