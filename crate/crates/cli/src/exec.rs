//! Batch execution: per-run CSV traces, JSON summaries, plain-text archives,
//! a median summary table, and the fitting-error diagnostics sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use emtpd::core::RunConfig;
use emtpd::evolve::{self, RunResult, TaskResult};
use emtpd::probmodel::{self, ModelKind};
use emtpd::problems::ProblemRegistry;

use crate::plan::{ExperimentPlan, PlanEntry};

/// Aggregate line of the printed summary table.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub label: String,
    /// Median final indicator per task over the repetitions.
    pub task_medians: Vec<f64>,
    pub runs_ok: usize,
    pub runs_failed: usize,
}

/// What `execute` produced, for both the exit code and the tests.
#[derive(Debug, Default)]
pub struct ExecReport {
    pub rows: Vec<AggregateRow>,
    pub failures: Vec<String>,
}

impl ExecReport {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    problem: &'a str,
    objectives: usize,
    model: &'a str,
    strategy: &'a str,
    baseline: bool,
    seed: u64,
    config: &'a RunConfig,
    evaluations: usize,
    wall_time_secs: f64,
    final_indicators: Vec<f64>,
    trace_file: String,
    archive_files: Vec<String>,
}

fn run_entry(entry: &PlanEntry, registry: &ProblemRegistry, seed: u64) -> anyhow::Result<RunResult> {
    let (problem, mut config) = entry.resolve(registry)?;
    config.seed = seed;
    if entry.baseline {
        // One NSGA-II run per task on the per-task budget share, merged so
        // the trace schema matches the multi-task runs.
        let r1 = evolve::single_task_baseline(&problem.task1, &config)?;
        let r2 = evolve::single_task_baseline(&problem.task2, &config)?;
        let mut tasks = r1.tasks;
        tasks.extend(r2.tasks);
        Ok(RunResult {
            problem: problem.name.clone(),
            seed,
            config,
            evaluations: r1.evaluations + r2.evaluations,
            wall_time_secs: r1.wall_time_secs + r2.wall_time_secs,
            tasks,
        })
    } else {
        Ok(evolve::run(&problem, &config)?)
    }
}

/// Renders the per-generation trace: one row per generation per task, fixed
/// column order, newline-terminated, dot decimal separator.
fn render_trace(tasks: &[TaskResult]) -> String {
    let mut out = String::from("generation,evaluations,task,igd_or_igdplus,e_g,d1,mean_w\n");
    let rows = tasks.iter().map(|t| t.trace.len()).max().unwrap_or(0);
    for g in 0..rows {
        for (t, task) in tasks.iter().enumerate() {
            if let Some(row) = task.trace.get(g) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.generation,
                    row.evaluations,
                    t + 1,
                    row.indicator,
                    row.fitting_error,
                    row.d1,
                    row.mean_w
                );
            }
        }
    }
    out
}

fn render_archive(archive: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in archive {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

fn write_run_files(
    out_dir: &Path,
    entry: &PlanEntry,
    result: &RunResult,
) -> anyhow::Result<(PathBuf, Vec<f64>)> {
    let stem = format!("{}_s{}", entry.slug(), result.seed);
    let trace_path = out_dir.join(format!("{stem}_trace.csv"));
    fs::write(&trace_path, render_trace(&result.tasks))
        .with_context(|| format!("writing {}", trace_path.display()))?;

    let mut archive_files = Vec::new();
    for (t, task) in result.tasks.iter().enumerate() {
        let path = out_dir.join(format!("{stem}_task{}_archive.dat", t + 1));
        fs::write(&path, render_archive(&task.archive))
            .with_context(|| format!("writing {}", path.display()))?;
        archive_files.push(path.display().to_string());
    }

    let finals: Vec<f64> = result.tasks.iter().map(|t| t.final_indicator).collect();
    let summary = RunSummary {
        problem: &entry.problem,
        objectives: entry.objectives,
        model: &entry.model,
        strategy: &entry.strategy,
        baseline: entry.baseline,
        seed: result.seed,
        config: &result.config,
        evaluations: result.evaluations,
        wall_time_secs: result.wall_time_secs,
        final_indicators: finals.clone(),
        trace_file: trace_path.display().to_string(),
        archive_files,
    };
    let summary_path = out_dir.join(format!("{stem}_summary.json"));
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok((trace_path, finals))
}

pub fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs every plan entry over its repetitions, writes per-run artifacts and
/// prints the median summary table. Per-entry failures are recorded and the
/// remaining entries continue.
pub fn execute(plan: &ExperimentPlan) -> anyhow::Result<ExecReport> {
    fs::create_dir_all(&plan.output)
        .with_context(|| format!("creating {}", plan.output.display()))?;
    let registry = ProblemRegistry::with_builtins();
    let mut report = ExecReport::default();

    for entry in &plan.entries {
        let label = entry.slug();
        let mut per_task: Vec<Vec<f64>> = Vec::new();
        let mut ok = 0usize;
        let mut failed = 0usize;
        for rep in 0..plan.repetitions {
            let seed = entry.seed + rep as u64;
            match run_entry(entry, &registry, seed)
                .and_then(|result| write_run_files(&plan.output, entry, &result))
            {
                Ok((_, finals)) => {
                    per_task.resize(finals.len().max(per_task.len()), Vec::new());
                    for (t, v) in finals.iter().enumerate() {
                        per_task[t].push(*v);
                    }
                    ok += 1;
                }
                Err(e) => {
                    failed += 1;
                    report.failures.push(format!("{label} seed {seed}: {e:#}"));
                }
            }
        }
        let task_medians = per_task
            .iter()
            .map(|vals| median(&mut vals.clone()))
            .collect();
        report.rows.push(AggregateRow {
            label,
            task_medians,
            runs_ok: ok,
            runs_failed: failed,
        });
    }

    println!("entry,task_medians,ok,failed");
    for row in &report.rows {
        let medians: Vec<String> = row.task_medians.iter().map(|v| v.to_string()).collect();
        println!(
            "{},{},{},{}",
            row.label,
            medians.join("|"),
            row.runs_ok,
            row.runs_failed
        );
    }
    for failure in &report.failures {
        eprintln!("failed: {failure}");
    }
    Ok(report)
}

/// Runs the plan once per model kind and reports the natural-log average
/// fitting error per (model, problem, task) as CSV — the model-comparison
/// diagnostic.
pub fn diagnostics(plan: &ExperimentPlan) -> anyhow::Result<(PathBuf, ExecReport)> {
    fs::create_dir_all(&plan.output)
        .with_context(|| format!("creating {}", plan.output.display()))?;
    let registry = ProblemRegistry::with_builtins();
    let mut report = ExecReport::default();
    let mut csv = String::from("model,problem,task,e_avg\n");

    for model in ModelKind::ALL {
        for entry in &plan.entries {
            let mut entry = entry.clone();
            entry.model = model.to_string();
            entry.baseline = false;
            let label = format!("{}_{model}", entry.slug());
            // Median e_avg per task across repetitions.
            let mut per_task: Vec<Vec<f64>> = Vec::new();
            let mut any_ok = false;
            for rep in 0..plan.repetitions {
                let seed = entry.seed + rep as u64;
                match run_entry(&entry, &registry, seed) {
                    Ok(result) => {
                        any_ok = true;
                        per_task.resize(result.tasks.len().max(per_task.len()), Vec::new());
                        for (t, task) in result.tasks.iter().enumerate() {
                            let errors: Vec<f64> =
                                task.trace.iter().map(|r| r.fitting_error).collect();
                            per_task[t].push(probmodel::average_error(&errors).value);
                        }
                    }
                    Err(e) => {
                        report
                            .failures
                            .push(format!("{label} seed {seed}: {e:#}"));
                    }
                }
            }
            if any_ok {
                for (t, vals) in per_task.iter().enumerate() {
                    let m = median(&mut vals.clone());
                    let _ = writeln!(csv, "{model},{},{},{m}", entry.problem, t + 1);
                }
            }
        }
    }

    let path = plan.output.join("diagnostics.csv");
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("diagnostics written to {}", path.display());
    Ok((path, report))
}
