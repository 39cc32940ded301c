//! Quality indicators (IGD, IGD+) and the inter-task similarity measure
//! with its LS/MS/HS banding.

use std::path::Path;

use rand::Rng;

use crate::core::{decode, MultiTaskProblem, UnifiedGenotype};
use crate::evolve::nondominated_fronts;
use crate::{Error, Result};

/// Where a reference set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefSource {
    AnalyticPf,
    File,
}

/// A set of reference points on (an approximation of) a Pareto front.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub points: Vec<Vec<f64>>,
    pub source: RefSource,
}

impl ReferenceSet {
    fn validated(points: Vec<Vec<f64>>, source: RefSource) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Indicator("reference set is empty".into()));
        }
        let width = points[0].len();
        if width == 0 || points.iter().any(|p| p.len() != width) {
            return Err(Error::Indicator(
                "reference points must share one positive dimension".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Indicator("non-finite reference point".into()));
        }
        Ok(Self { points, source })
    }

    /// Wraps points sampled from an analytic Pareto front.
    pub fn analytic(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::validated(points, RefSource::AnalyticPf)
    }

    /// Loads a whitespace-separated numeric text file, one objective vector
    /// per line. Blank lines are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad number '{tok}'", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            points.push(row);
        }
        Self::validated(points, RefSource::File)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

fn check_solution_set(refset: &ReferenceSet, a: &[Vec<f64>]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Indicator("solution set is empty".into()));
    }
    if a.iter().any(|s| s.len() != refset.dim()) {
        return Err(Error::Indicator(format!(
            "solution dimension does not match the {}-dimensional reference set",
            refset.dim()
        )));
    }
    Ok(())
}

/// Deterministic reduction used for indicator sums.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dominance-aware one-sided distance: only the coordinates where the
/// solution falls short of the reference point contribute, so a solution
/// dominating the reference is at distance zero.
fn distance_plus(z: &[f64], a: &[f64]) -> f64 {
    z.iter()
        .zip(a)
        .map(|(zk, ak)| {
            let d = (ak - zk).max(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Inverted generational distance: mean over reference points of the
/// Euclidean distance to the nearest solution.
pub fn igd(refset: &ReferenceSet, a: &[Vec<f64>]) -> Result<f64> {
    check_solution_set(refset, a)?;
    let minima: Vec<f64> = refset
        .points
        .iter()
        .map(|z| {
            a.iter()
                .map(|s| euclidean(z, s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(pairwise_sum(&minima) / refset.points.len() as f64)
}

/// IGD+ : like [`igd`] but with the one-sided clamped distance.
pub fn igd_plus(refset: &ReferenceSet, a: &[Vec<f64>]) -> Result<f64> {
    check_solution_set(refset, a)?;
    let minima: Vec<f64> = refset
        .points
        .iter()
        .map(|z| {
            a.iter()
                .map(|s| distance_plus(z, s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(pairwise_sum(&minima) / refset.points.len() as f64)
}

/// Similarity band of a problem pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityBand {
    Ls,
    Ms,
    Hs,
}

/// Bands a similarity value: LS on (0, 1/3], MS on (1/3, 2/3], HS on
/// (2/3, 1]. Non-positive values fall to LS with the flag set, since the
/// banding convention leaves them undefined.
pub fn classify_similarity(sim: f64) -> (SimilarityBand, bool) {
    let sim = sim.clamp(-1.0, 1.0);
    if sim <= 0.0 {
        (SimilarityBand::Ls, true)
    } else if sim <= 1.0 / 3.0 {
        (SimilarityBand::Ls, false)
    } else if sim <= 2.0 / 3.0 {
        (SimilarityBand::Ms, false)
    } else {
        (SimilarityBand::Hs, false)
    }
}

/// Rank correlation between the two tasks over `k` uniformly random unified
/// solutions.
///
/// Each solution is ranked per task by non-domination level, ties within a
/// level broken by the sum of min-max-normalized objectives, remaining ties
/// by sample index; the result is the Pearson correlation of the two rank
/// vectors.
pub fn similarity<R: Rng>(problem: &MultiTaskProblem, k: usize, rng: &mut R) -> Result<f64> {
    if k < 10 {
        return Err(Error::Indicator(format!(
            "similarity needs at least 10 samples, got {k}"
        )));
    }
    let dim = problem.unified_dim();
    let genotypes: Vec<UnifiedGenotype> = (0..k)
        .map(|_| UnifiedGenotype::clamped((0..dim).map(|_| rng.random::<f64>()).collect()))
        .collect();

    let mut ranks = Vec::with_capacity(2);
    for task in problem.tasks() {
        let objectives: Vec<Vec<f64>> = genotypes
            .iter()
            .map(|g| task.evaluate_native(&decode(g, task)))
            .collect();
        ranks.push(rank_solutions(&objectives));
    }
    Ok(pearson(&ranks[0], &ranks[1]))
}

fn rank_solutions(objectives: &[Vec<f64>]) -> Vec<f64> {
    let k = objectives.len();
    let n_obj = objectives[0].len();

    let fronts = nondominated_fronts(objectives);
    let mut level = vec![0usize; k];
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            level[i] = rank;
        }
    }

    // Min-max normalization bounds per objective over the whole sample.
    let mut lo = vec![f64::INFINITY; n_obj];
    let mut hi = vec![f64::NEG_INFINITY; n_obj];
    for obj in objectives {
        for (m, &v) in obj.iter().enumerate() {
            lo[m] = lo[m].min(v);
            hi[m] = hi[m].max(v);
        }
    }
    let norm_sum: Vec<f64> = objectives
        .iter()
        .map(|obj| {
            obj.iter()
                .enumerate()
                .map(|(m, &v)| {
                    let range = hi[m] - lo[m];
                    if range > 0.0 {
                        (v - lo[m]) / range
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        level[a]
            .cmp(&level[b])
            .then(norm_sum[a].partial_cmp(&norm_sum[b]).unwrap())
            .then(a.cmp(&b))
    });
    let mut rank = vec![0.0; k];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos as f64;
    }
    rank
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}
