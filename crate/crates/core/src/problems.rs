//! Benchmark problems: the MaF1/3/4/5/6 family, the decision-space shift
//! wrapper, the six two-task compositions, controlled-similarity toy
//! fixtures, and a plug-in registry.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{MultiTaskProblem, PfSampler, TaskDefinition};
use crate::{Error, Result};

/// Distance-variable count of every MaF task here, so `native_dim = n + 9`.
pub const DISTANCE_VARS: usize = 10;

/// Decision-space shift applied to the starred task variants.
pub const SHIFT: f64 = 0.05;

/// Members of the MaF family used by the two-task compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MafFunction {
    MaF1,
    MaF3,
    MaF4,
    MaF5,
    MaF6,
}

impl fmt::Display for MafFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MafFunction::MaF1 => "MaF1",
            MafFunction::MaF3 => "MaF3",
            MafFunction::MaF4 => "MaF4",
            MafFunction::MaF5 => "MaF5",
            MafFunction::MaF6 => "MaF6",
        };
        f.write_str(s)
    }
}

fn g_sphere(dist: &[f64]) -> f64 {
    dist.iter().map(|x| (x - 0.5) * (x - 0.5)).sum()
}

fn g_rastrigin(dist: &[f64]) -> f64 {
    let k = dist.len() as f64;
    let sum: f64 = dist
        .iter()
        .map(|x| {
            let d = x - 0.5;
            d * d - (20.0 * std::f64::consts::PI * d).cos()
        })
        .sum();
    100.0 * (k + sum)
}

/// DTLZ-style spherical coordinates for angles `t_i * pi/2`:
/// `h_0 = prod cos`, `h_j = prod cos * sin` with one sine swapped in per
/// objective, `h_{n-1} = sin(t_0 * pi/2)`. Satisfies `sum h^2 = 1`.
fn sphere_coords(t: &[f64], n: usize) -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut h = vec![0.0; n];
    for (j, hj) in h.iter_mut().enumerate() {
        let mut v = 1.0;
        for ti in &t[..n - 1 - j] {
            v *= (ti * half_pi).cos();
        }
        if j > 0 {
            v *= (t[n - 1 - j] * half_pi).sin();
        }
        *hj = v;
    }
    h
}

/// Inverted-simplex products for MaF1: `prod x` with one `(1-x)` swapped in.
fn simplex_coords(x: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n];
    for (j, aj) in a.iter_mut().enumerate() {
        let mut v = 1.0;
        for xi in &x[..n - 1 - j] {
            v *= xi;
        }
        if j > 0 {
            v *= 1.0 - x[n - 1 - j];
        }
        *aj = v;
    }
    a
}

/// Evaluates one MaF function at a native point with `n` objectives.
/// The first `n-1` coordinates are position variables, the rest distance
/// variables. Panics on a wrong-length input (internal invariant); the
/// public builders validate `n` upfront.
pub fn maf_evaluate(which: MafFunction, x: &[f64], n: usize) -> Vec<f64> {
    assert!(n >= 2, "MaF functions need at least two objectives");
    assert!(
        x.len() >= n,
        "decision vector of length {} cannot carry {n} objectives",
        x.len()
    );
    let (position, dist) = x.split_at(n - 1);
    match which {
        MafFunction::MaF1 => {
            let g = g_sphere(dist);
            simplex_coords(position, n)
                .into_iter()
                .map(|a| (1.0 + g) * (1.0 - a))
                .collect()
        }
        MafFunction::MaF3 => {
            let g = g_rastrigin(dist);
            sphere_coords(position, n)
                .into_iter()
                .enumerate()
                .map(|(j, h)| {
                    let o = (1.0 + g) * h;
                    if j < n - 1 {
                        o.powi(4)
                    } else {
                        o.powi(2)
                    }
                })
                .collect()
        }
        MafFunction::MaF4 => {
            let g = g_rastrigin(dist);
            sphere_coords(position, n)
                .into_iter()
                .enumerate()
                .map(|(j, h)| 2f64.powi(j as i32 + 1) * (1.0 + g) * (1.0 - h))
                .collect()
        }
        MafFunction::MaF5 => {
            let warped: Vec<f64> = position.iter().map(|x| x.powi(100)).collect();
            let g = g_sphere(dist);
            sphere_coords(&warped, n)
                .into_iter()
                .enumerate()
                .map(|(j, h)| 2f64.powi(j as i32 + 1) * ((1.0 + g) * h).powi(4))
                .collect()
        }
        MafFunction::MaF6 => {
            let g = g_sphere(dist);
            let mut t = position.to_vec();
            for ti in t.iter_mut().skip(1) {
                *ti = (1.0 + 2.0 * g * *ti) / (2.0 * (1.0 + g));
            }
            sphere_coords(&t, n)
                .into_iter()
                .map(|h| (1.0 + 100.0 * g) * h)
                .collect()
        }
    }
}

/// Positive-orthant unit direction from folded normal draws.
fn sphere_direction<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                z.abs()
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point on the unit simplex (normalized exponentials).
fn simplex_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let sum: f64 = v.iter().sum();
        if sum > 1e-12 {
            return v.into_iter().map(|x| x / sum).collect();
        }
    }
}

fn maf_pf_sampler(which: MafFunction, n: usize) -> PfSampler {
    Box::new(move |count, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let p = match which {
                MafFunction::MaF1 => simplex_point(n, &mut rng)
                    .into_iter()
                    .map(|w| 1.0 - w)
                    .collect(),
                MafFunction::MaF3 => sphere_direction(n, &mut rng)
                    .into_iter()
                    .enumerate()
                    .map(|(j, u)| if j < n - 1 { u.powi(4) } else { u.powi(2) })
                    .collect(),
                MafFunction::MaF4 => sphere_direction(n, &mut rng)
                    .into_iter()
                    .enumerate()
                    .map(|(j, u)| 2f64.powi(j as i32 + 1) * (1.0 - u))
                    .collect(),
                MafFunction::MaF5 => sphere_direction(n, &mut rng)
                    .into_iter()
                    .enumerate()
                    .map(|(j, u)| 2f64.powi(j as i32 + 1) * u.powi(4))
                    .collect(),
                MafFunction::MaF6 => {
                    // The degenerate curve: only the first angle is free,
                    // every other position variable collapses to 1/2.
                    let mut t = vec![0.5; n - 1];
                    t[0] = rng.random::<f64>();
                    sphere_coords(&t, n)
                }
            };
            points.push(p);
        }
        points
    })
}

/// Builds a MaF task with `n` objectives on `[0,1]^{n+9}`.
pub fn maf_task(which: MafFunction, n: usize) -> Result<TaskDefinition> {
    if n < 2 {
        return Err(Error::Config(format!(
            "{which} needs at least 2 objectives, got {n}"
        )));
    }
    let dim = n - 1 + DISTANCE_VARS;
    let task = TaskDefinition::new(
        which.to_string(),
        dim,
        n,
        vec![0.0; dim],
        vec![1.0; dim],
        Box::new(move |x: &[f64]| maf_evaluate(which, x, n)),
    )?;
    Ok(task.with_pf_sampler(maf_pf_sampler(which, n)))
}

/// Wraps a task so the base function is evaluated at `z = p - r`
/// coordinate-wise, with `z` clamped into the base domain. The Pareto-front
/// sampler carries over: the shift moves the optimum in decision space only.
pub fn shift_wrapper(base: TaskDefinition, r: f64) -> TaskDefinition {
    let name = format!("{}*", base.name());
    let dim = base.native_dim();
    let n = base.n_objectives();
    let lower = base.lower_bounds().to_vec();
    let upper = base.upper_bounds().to_vec();
    let has_sampler = base.has_pf_sampler();
    let base = Arc::new(base);

    let eval_base = Arc::clone(&base);
    let evaluator = Box::new(move |p: &[f64]| {
        let z: Vec<f64> = p
            .iter()
            .zip(eval_base.lower_bounds())
            .zip(eval_base.upper_bounds())
            .map(|((pi, lo), hi)| (pi - r).clamp(*lo, *hi))
            .collect();
        eval_base.evaluate_native(&z)
    });

    let mut task = TaskDefinition::new(name, dim, n, lower, upper, evaluator)
        .expect("shifted task inherits valid bounds");
    if has_sampler {
        let pf_base = Arc::clone(&base);
        task = task.with_pf_sampler(Box::new(move |count, seed| {
            pf_base.sample_pf(count, seed).expect("base sampler exists")
        }));
    }
    task
}

/// The six two-task compositions; starred members use the 0.05 shift.
pub fn build_mtmaop(name: &str, n: usize) -> Result<MultiTaskProblem> {
    let (t1, t2, shifted2) = match name.to_ascii_lowercase().as_str() {
        "maf-hs1" => (MafFunction::MaF3, MafFunction::MaF4, false),
        "maf-hs2" => (MafFunction::MaF4, MafFunction::MaF6, false),
        "maf-ms1" => (MafFunction::MaF1, MafFunction::MaF5, true),
        "maf-ms2" => (MafFunction::MaF5, MafFunction::MaF6, true),
        "maf-ls1" => (MafFunction::MaF4, MafFunction::MaF5, false),
        "maf-ls2" => (MafFunction::MaF3, MafFunction::MaF6, false),
        other => {
            return Err(Error::Config(format!(
                "unknown MTMaOP '{other}' (valid: MaF-HS1, MaF-HS2, MaF-MS1, MaF-MS2, MaF-LS1, MaF-LS2)"
            )))
        }
    };
    let task1 = maf_task(t1, n)?;
    let mut task2 = maf_task(t2, n)?;
    if shifted2 {
        task2 = shift_wrapper(task2, SHIFT);
    }
    Ok(MultiTaskProblem::new(name.to_uppercase(), task1, task2))
}

const TOY_DIM: usize = 10;
/// Per-coordinate spread between the two sphere centers of one toy task.
const TOY_TRADEOFF: f64 = 0.1;
/// First toy center; the second sits `0.85 * offset` above it so that both
/// tasks stay inside the unit box for every offset in [0,1].
const TOY_BASE: f64 = 0.05;
const TOY_SPAN: f64 = 0.85;

fn toy_task(name: &str, center: f64) -> TaskDefinition {
    let c1 = center;
    let c2 = center + TOY_TRADEOFF;
    let task = TaskDefinition::new(
        name,
        TOY_DIM,
        2,
        vec![0.0; TOY_DIM],
        vec![1.0; TOY_DIM],
        Box::new(move |x: &[f64]| {
            let f1: f64 = x.iter().map(|v| (v - c1) * (v - c1)).sum();
            let f2: f64 = x.iter().map(|v| (v - c2) * (v - c2)).sum();
            vec![f1, f2]
        }),
    )
    .expect("toy bounds are valid");
    task.with_pf_sampler(Box::new(move |count, seed| {
        // Optimal set is the diagonal segment between the two centers;
        // its image is f1 = D*(s*t)^2, f2 = D*(s*(1-t))^2 with s = 0.1.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let t = rng.random::<f64>();
                let d = TOY_DIM as f64;
                vec![
                    d * (TOY_TRADEOFF * t).powi(2),
                    d * (TOY_TRADEOFF * (1.0 - t)).powi(2),
                ]
            })
            .collect()
    }))
}

/// Two bi-objective sphere-family tasks whose optima sit `offset` apart in
/// the unified space: offset 0 gives identical tasks, large offsets give the
/// low-similarity regime. The offset is clamped into [0,1].
pub fn toy_problem(offset: f64) -> MultiTaskProblem {
    let offset = offset.clamp(0.0, 1.0);
    let c1 = TOY_BASE;
    let c2 = TOY_BASE + TOY_SPAN * offset;
    MultiTaskProblem::new(
        format!("toy-{offset}"),
        toy_task("toy-t1", c1),
        toy_task("toy-t2", c2),
    )
}

/// Convenience wrapper over a task's Pareto-front sampler.
pub fn pf_sample(task: &TaskDefinition, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    task.sample_pf(count, seed)
}

/// Nominal similarity class of a registered problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityClass {
    Hs,
    Ms,
    Ls,
}

type ProblemBuilder = Box<dyn Fn(usize) -> Result<MultiTaskProblem> + Send + Sync>;

/// A named problem constructor; plug-ins register through the same contract
/// as the built-ins.
pub struct ProblemSpec {
    pub name: String,
    pub similarity_class: SimilarityClass,
    pub builder: ProblemBuilder,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("similarity_class", &self.similarity_class)
            .finish_non_exhaustive()
    }
}

/// Name -> builder registry. Lookup is case-insensitive; `toy-<offset>`
/// names are synthesized on the fly.
pub struct ProblemRegistry {
    specs: BTreeMap<String, ProblemSpec>,
}

impl ProblemRegistry {
    /// Registry pre-populated with the six MTMaOP compositions.
    pub fn with_builtins() -> Self {
        let mut registry = Self {
            specs: BTreeMap::new(),
        };
        let builtins: [(&str, SimilarityClass); 6] = [
            ("MaF-HS1", SimilarityClass::Hs),
            ("MaF-HS2", SimilarityClass::Hs),
            ("MaF-MS1", SimilarityClass::Ms),
            ("MaF-MS2", SimilarityClass::Ms),
            ("MaF-LS1", SimilarityClass::Ls),
            ("MaF-LS2", SimilarityClass::Ls),
        ];
        for (name, class) in builtins {
            let key = name.to_string();
            registry.register(ProblemSpec {
                name: key.clone(),
                similarity_class: class,
                builder: Box::new(move |n| build_mtmaop(&key, n)),
            });
        }
        registry
    }

    pub fn register(&mut self, spec: ProblemSpec) {
        self.specs.insert(spec.name.to_ascii_lowercase(), spec);
    }

    /// All registered names plus the synthesized toy pattern.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.specs.values().map(|s| s.name.clone()).collect();
        names.push("toy-<offset>".to_string());
        names
    }

    pub fn build(&self, name: &str, n_objectives: usize) -> Result<MultiTaskProblem> {
        let key = name.to_ascii_lowercase();
        if let Some(spec) = self.specs.get(&key) {
            return (spec.builder)(n_objectives);
        }
        if let Some(rest) = key.strip_prefix("toy-") {
            let offset: f64 = rest.parse().map_err(|_| {
                Error::Config(format!("bad toy offset '{rest}' in problem name '{name}'"))
            })?;
            if !(0.0..=1.0).contains(&offset) {
                return Err(Error::Config(format!(
                    "toy offset {offset} outside [0,1]"
                )));
            }
            if n_objectives != 2 {
                return Err(Error::Config(
                    "toy problems are bi-objective; use 2 objectives".into(),
                ));
            }
            return Ok(toy_problem(offset));
        }
        Err(Error::Config(format!(
            "unknown problem '{name}' (valid: {})",
            self.names().join(", ")
        )))
    }
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
