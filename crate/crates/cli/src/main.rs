use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emtpd_cli::plan::{parse_config, CliOptions, PlanError};
use emtpd_cli::{diagnostics, execute};

/// Multi-tasking evolutionary optimization experiment runner.
#[derive(Parser)]
#[command(name = "emtpd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run EMT-PD (or the single-task baseline) over a plan or a single
    /// problem, writing CSV traces, JSON summaries and archives.
    Run(RunArgs),
    /// Run the plan once per probability model and report the log-average
    /// fitting error per (model, problem, task) as CSV.
    Diagnostics(RunArgs),
    /// List the problem vocabulary.
    Problems,
}

#[derive(Args)]
struct RunArgs {
    /// JSON plan file; explicit flags override its entries.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Problem name (e.g. MaF-HS1, toy-0.0).
    #[arg(long)]
    problem: Option<String>,
    /// Objective count (default 10; toy problems use 2).
    #[arg(long)]
    objectives: Option<usize>,
    /// Probability model: gaussian, exponential, gamma, beta.
    #[arg(long)]
    model: Option<String>,
    /// Transfer strategy: PD, PD-1, SR, MR, SH, MH.
    #[arg(long)]
    strategy: Option<String>,
    /// Base seed; repetitions use seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per entry.
    #[arg(long)]
    runs: Option<usize>,
    /// Function-evaluation budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Generation cap.
    #[arg(long)]
    generations: Option<usize>,
    /// Whole-population size (split across the two tasks).
    #[arg(long)]
    pop_size: Option<usize>,
    /// Noise scale factor F.
    #[arg(long)]
    scale_factor: Option<f64>,
    /// Per-coordinate mutation probability (default 1/N).
    #[arg(long)]
    mutation_probability: Option<f64>,
    /// Reference-set size for the quality indicator.
    #[arg(long)]
    ref_points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the single-task baseline on each task instead of EMT-PD.
    #[arg(long)]
    baseline: bool,
}

impl From<&RunArgs> for CliOptions {
    fn from(a: &RunArgs) -> Self {
        CliOptions {
            plan: a.plan.clone(),
            problem: a.problem.clone(),
            objectives: a.objectives,
            model: a.model.clone(),
            strategy: a.strategy.clone(),
            seed: a.seed,
            runs: a.runs,
            budget: a.budget,
            generations: a.generations,
            pop_size: a.pop_size,
            scale_factor: a.scale_factor,
            mutation_probability: a.mutation_probability,
            ref_points: a.ref_points,
            out: a.out.clone(),
            baseline: a.baseline,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Problems => {
            for name in emtpd::problems::ProblemRegistry::with_builtins().names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => dispatch(&args, false),
        Command::Diagnostics(args) => dispatch(&args, true),
    }
}

fn dispatch(args: &RunArgs, diagnostics_mode: bool) -> ExitCode {
    let plan = match parse_config(&CliOptions::from(args)) {
        Ok(plan) => plan,
        Err(PlanError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            return ExitCode::from(2);
        }
        Err(PlanError::Other(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let outcome = if diagnostics_mode {
        diagnostics(&plan).map(|(_, report)| report)
    } else {
        execute(&plan)
    };
    match outcome {
        Ok(report) if report.all_ok() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
