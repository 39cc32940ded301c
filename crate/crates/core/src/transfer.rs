//! Two-stage adaptive knowledge transfer and offspring generation, plus the
//! ablation knowledge sources.
//!
//! Stage one moves an individual toward the cross-task knowledge point with
//! the adaptive weight `w = d2/(d1+d2)`; stage two adds Gaussian noise whose
//! magnitude scales with `F*(d1+d2)/D`; polynomial mutation finishes the
//! offspring. The knowledge point is the product argmax of the two task
//! models under the PD strategies, or comes from individuals of the other
//! task under the SR/MR/SH/MH ablation variants.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::core::{Individual, RunConfig, UnifiedGenotype};
use crate::probmodel::{self, FittedModel};
use crate::{Error, Result};

/// Knowledge-source strategy: PD is the full two-stage transfer, PD-1 skips
/// stage two, and SR/MR/SH/MH replace the model-product knowledge point with
/// individuals drawn from the other task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferStrategy {
    #[serde(rename = "PD")]
    Pd,
    #[serde(rename = "PD-1")]
    Pd1,
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "SH")]
    Sh,
    #[serde(rename = "MH")]
    Mh,
}

impl TransferStrategy {
    pub const ALL: [TransferStrategy; 6] = [
        TransferStrategy::Pd,
        TransferStrategy::Pd1,
        TransferStrategy::Sr,
        TransferStrategy::Mr,
        TransferStrategy::Sh,
        TransferStrategy::Mh,
    ];

    /// SH/MH rank the other task's individuals by distance to its Pareto
    /// front, so the problem must supply a PF sampler.
    pub fn needs_pf_reference(self) -> bool {
        matches!(self, TransferStrategy::Sh | TransferStrategy::Mh)
    }
}

impl fmt::Display for TransferStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransferStrategy::Pd => "PD",
            TransferStrategy::Pd1 => "PD-1",
            TransferStrategy::Sr => "SR",
            TransferStrategy::Mr => "MR",
            TransferStrategy::Sh => "SH",
            TransferStrategy::Mh => "MH",
        };
        f.write_str(s)
    }
}

impl FromStr for TransferStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PD" => Ok(TransferStrategy::Pd),
            "PD-1" | "PD1" => Ok(TransferStrategy::Pd1),
            "SR" => Ok(TransferStrategy::Sr),
            "MR" => Ok(TransferStrategy::Mr),
            "SH" => Ok(TransferStrategy::Sh),
            "MH" => Ok(TransferStrategy::Mh),
            other => Err(Error::Config(format!(
                "unknown transfer strategy '{other}' (valid: PD, PD-1, SR, MR, SH, MH)"
            ))),
        }
    }
}

/// The geometry driving both transfer stages for one individual.
#[derive(Debug, Clone, Copy)]
pub struct TransferContext<'a> {
    /// Own-task mode point.
    pub m: &'a [f64],
    /// Cross-task knowledge point.
    pub mp: &'a [f64],
    /// Distance between the mode point and the knowledge point.
    pub d1: f64,
    /// Distance between the mode point and the individual.
    pub d2: f64,
    /// Adaptive transfer weight `d2/(d1+d2)`.
    pub w: f64,
}

impl<'a> TransferContext<'a> {
    pub fn for_individual(m: &'a [f64], mp: &'a [f64], p: &[f64]) -> Self {
        let (d1, d2) = distances(m, mp, p);
        Self {
            m,
            mp,
            d1,
            d2,
            w: adaptive_weight(d1, d2),
        }
    }
}

/// Euclidean distances `d1 = ||m - mp||` and `d2 = ||m - p||`.
/// Panics on mismatched lengths (internal invariant).
pub fn distances(m: &[f64], mp: &[f64], p: &[f64]) -> (f64, f64) {
    (euclidean(m, mp), euclidean(m, p))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Adaptive transfer weight `w = d2/(d1+d2)`.
///
/// At `d1 + d2 = 0` the individual already sits on the knowledge point and
/// the weight is unobservable; 0.5 is returned by convention. Panics on
/// negative distances (internal invariant).
pub fn adaptive_weight(d1: f64, d2: f64) -> f64 {
    assert!(d1 >= 0.0 && d2 >= 0.0, "distances must be nonnegative");
    let total = d1 + d2;
    if total == 0.0 {
        0.5
    } else {
        d2 / total
    }
}

/// First transfer stage: `p' = p + w*(mp - p)` coordinate-wise.
pub fn stage_one(p: &[f64], mp: &[f64], w: f64) -> Vec<f64> {
    assert_eq!(p.len(), mp.len(), "vector length mismatch");
    p.iter().zip(mp).map(|(pi, mi)| pi + w * (mi - pi)).collect()
}

/// Second transfer stage: `c = p' + v` with `v_j = F*q_j*(d1+d2)/D` for
/// independent standard-normal draws `q_j`; the result is clamped to the
/// unit box.
pub fn stage_two<R: Rng>(
    p_prime: &[f64],
    d1: f64,
    d2: f64,
    scale_factor: f64,
    rng: &mut R,
) -> Vec<f64> {
    let dims = p_prime.len() as f64;
    let magnitude = scale_factor * (d1 + d2) / dims;
    p_prime
        .iter()
        .map(|&x| {
            let q: f64 = rng.sample(StandardNormal);
            (x + magnitude * q).clamp(0.0, 1.0)
        })
        .collect()
}

/// Bounded polynomial mutation on the unit box: each coordinate mutates with
/// probability `p_m` under distribution index `eta_m`.
pub fn polynomial_mutation<R: Rng>(c: &[f64], p_m: f64, eta_m: f64, rng: &mut R) -> Vec<f64> {
    let mut_pow = 1.0 / (eta_m + 1.0);
    c.iter()
        .map(|&y| {
            if rng.random::<f64>() < p_m {
                let u: f64 = rng.random();
                let delta_q = if u <= 0.5 {
                    let xy = 1.0 - y; // 1 - (y - lo)/(hi - lo) on [0,1]
                    let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta_m + 1.0);
                    val.powf(mut_pow) - 1.0
                } else {
                    let xy = y; // 1 - (hi - y)/(hi - lo) on [0,1]
                    let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta_m + 1.0);
                    1.0 - val.powf(mut_pow)
                };
                (y + delta_q).clamp(0.0, 1.0)
            } else {
                y
            }
        })
        .collect()
}

/// Produces the knowledge point (the `mp` surrogate) for one task.
///
/// * `PD`/`PD-1`: per-dimension argmax of the two models' product.
/// * `SR`: genotype of one uniformly random individual of the other task.
/// * `MR`: coordinate-wise centroid of three distinct random individuals
///   (all available ones when fewer than three exist).
/// * `SH`/`MH`: genotype (or three-genotype centroid) of the other-task
///   individuals whose objectives lie closest to the other task's Pareto
///   front reference set.
pub fn knowledge_source<R: Rng>(
    strategy: TransferStrategy,
    own_model: &FittedModel,
    other_model: &FittedModel,
    other_subpop: &[Individual],
    other_pf: Option<&[Vec<f64>]>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match strategy {
        TransferStrategy::Pd | TransferStrategy::Pd1 => {
            probmodel::product_argmax(own_model, other_model)
        }
        TransferStrategy::Sr => {
            if other_subpop.is_empty() {
                return Err(Error::Config(
                    "SR needs a non-empty source subpopulation".into(),
                ));
            }
            let idx = rng.random_range(0..other_subpop.len());
            Ok(other_subpop[idx].genotype.values().to_vec())
        }
        TransferStrategy::Mr => {
            if other_subpop.is_empty() {
                return Err(Error::Config(
                    "MR needs a non-empty source subpopulation".into(),
                ));
            }
            let amount = other_subpop.len().min(3);
            let chosen = rand::seq::index::sample(rng, other_subpop.len(), amount);
            Ok(centroid(
                &chosen
                    .iter()
                    .map(|i| other_subpop[i].genotype.values())
                    .collect::<Vec<_>>(),
            ))
        }
        TransferStrategy::Sh | TransferStrategy::Mh => {
            let pf = other_pf.ok_or_else(|| {
                Error::Config(format!(
                    "strategy {strategy} requires a Pareto-front sampler on the source task"
                ))
            })?;
            if other_subpop.is_empty() {
                return Err(Error::Config(
                    "SH/MH need a non-empty source subpopulation".into(),
                ));
            }
            let mut scored: Vec<(f64, usize)> = other_subpop
                .iter()
                .enumerate()
                .map(|(i, ind)| (distance_to_set(&ind.objectives, pf), i))
                .collect();
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let take = if strategy == TransferStrategy::Sh {
                1
            } else {
                other_subpop.len().min(3)
            };
            Ok(centroid(
                &scored[..take]
                    .iter()
                    .map(|&(_, i)| other_subpop[i].genotype.values())
                    .collect::<Vec<_>>(),
            ))
        }
    }
}

fn centroid(rows: &[&[f64]]) -> Vec<f64> {
    let dims = rows[0].len();
    let mut out = vec![0.0; dims];
    for row in rows {
        for (o, v) in out.iter_mut().zip(*row) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= rows.len() as f64;
    }
    out
}

fn distance_to_set(point: &[f64], set: &[Vec<f64>]) -> f64 {
    set.iter()
        .map(|r| euclidean(point, r))
        .fold(f64::INFINITY, f64::min)
}

/// Per-generation transfer telemetry for the run trace.
#[derive(Debug, Clone, Copy)]
pub struct TransferStats {
    pub d1: f64,
    pub mean_w: f64,
}

/// Runs the full per-task offspring pipeline: distances, stage one, stage
/// two (skipped entirely under PD-1), polynomial mutation, clamp. Emits one
/// offspring per parent.
pub fn generate_offspring<R: Rng>(
    subpop: &[Individual],
    own_model: &FittedModel,
    knowledge_point: &[f64],
    config: &RunConfig,
    rng: &mut R,
) -> (Vec<UnifiedGenotype>, TransferStats) {
    let m = own_model.mode_point();
    let d1 = euclidean(m, knowledge_point);
    let mut offspring = Vec::with_capacity(subpop.len());
    let mut w_sum = 0.0;
    for parent in subpop {
        let p = parent.genotype.values();
        let d2 = euclidean(m, p);
        let w = adaptive_weight(d1, d2);
        w_sum += w;
        let p_prime = stage_one(p, knowledge_point, w);
        let c = if config.transfer_strategy == TransferStrategy::Pd1 {
            p_prime
        } else {
            stage_two(&p_prime, d1, d2, config.scale_factor, rng)
        };
        let mutated =
            polynomial_mutation(&c, config.mutation_probability, config.mutation_index, rng);
        offspring.push(UnifiedGenotype::clamped(mutated));
    }
    let mean_w = if subpop.is_empty() {
        0.0
    } else {
        w_sum / subpop.len() as f64
    };
    (offspring, TransferStats { d1, mean_w })
}
