//! Equal-weight resamplers for weighted ensembles.

use std::cmp::Ordering;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space in which an ensemble lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Target,
    Reference,
}

/// A weighted ensemble to be turned into an equally weighted one.
#[derive(Debug, Clone, Copy)]
pub struct ResampleRequest<'a> {
    pub states: &'a [Vec<f64>],
    pub weights: &'a [f64],
    pub space: SpaceTag,
}

impl<'a> ResampleRequest<'a> {
    pub fn new(states: &'a [Vec<f64>], weights: &'a [f64], space: SpaceTag) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        if states.is_empty() {
            return Err(Error::EmptySample);
        }
        let dim = states[0].len();
        if let Some(bad) = states.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || w.is_infinite()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::DegenerateEnsemble);
        }
        Ok(Self {
            states,
            weights,
            space,
        })
    }
}

/// Resampling scheme used by the ensemble samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampler {
    Multinomial,
    /// Greedy staircase transform; see [`mt_resample`].
    #[default]
    Mt,
    /// One-dimensional ensemble transform applied to each coordinate;
    /// reference space only.
    Dimensionwise,
}

impl Resampler {
    pub fn resample<R: Rng + ?Sized>(
        &self,
        req: &ResampleRequest<'_>,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        match self {
            Resampler::Multinomial => Ok(multinomial_resample(req, rng)),
            Resampler::Mt => Ok(mt_resample(req)),
            Resampler::Dimensionwise => dimensionwise_transform(req),
        }
    }

    /// Whether the scheme consumes random numbers.
    pub fn is_random(&self) -> bool {
        matches!(self, Resampler::Multinomial)
    }
}

/// `M` independent draws from the normalized weights.
pub fn multinomial_resample<R: Rng + ?Sized>(
    req: &ResampleRequest<'_>,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let dist = WeightedIndex::new(req.weights).expect("request weights validated");
    (0..req.states.len())
        .map(|_| req.states[dist.sample(rng)].clone())
        .collect()
}

/// Slot capacities and source masses closer than this are treated as equal,
/// so equal weights reproduce the input exactly.
const SNAP: f64 = 1e-12;

/// Staircase coupling between sources in the given order and `M` slots of
/// capacity `1/M`. Returns, per slot, the list of `(source, mass)` pairs.
fn staircase(order: &[usize], weights: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let m = order.len();
    let total: f64 = weights.iter().sum();
    let mut slots = vec![Vec::new(); m];
    let mut j = 0;
    let mut cap = 1.0;
    for &i in order {
        // mass in units of slot capacity
        let mut mass = weights[i] * m as f64 / total;
        while mass > 0.0 && j < m {
            if (mass - cap).abs() <= SNAP || mass > cap {
                let take = cap;
                slots[j].push((i, take));
                mass = if (mass - cap).abs() <= SNAP {
                    0.0
                } else {
                    mass - cap
                };
                j += 1;
                cap = 1.0;
            } else {
                slots[j].push((i, mass));
                cap -= mass;
                mass = 0.0;
            }
        }
    }
    // round-off can leave the last slot short of sources
    if j < m && slots[j].is_empty() {
        let last = *order
            .iter()
            .rev()
            .find(|&&i| weights[i] > 0.0)
            .expect("positive weight");
        for slot in &mut slots[j..] {
            slot.push((last, 1.0));
        }
    }
    slots
}

fn sort_order_scalar(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

fn average_slot(slot: &[(usize, f64)], value: impl Fn(usize) -> f64) -> f64 {
    let (num, den) = slot
        .iter()
        .fold((0.0, 0.0), |(n, d), &(i, s)| (n + s * value(i), d + s));
    num / den
}

/// One-dimensional ensemble transform: sort, then fill `M` slots of capacity
/// `1/M` along the staircase coupling; each output is the mass-weighted
/// average of the states feeding its slot. Output is in ascending slot order.
pub fn etpf_1d(states: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            found: weights.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::EmptySample);
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::DegenerateEnsemble);
    }
    let order = sort_order_scalar(states);
    Ok(staircase(&order, weights)
        .iter()
        .map(|slot| average_slot(slot, |i| states[i]))
        .collect())
}

/// Multinomial transformation: the one-dimensional staircase applied to the
/// ensemble sorted lexicographically (first coordinate, then the next, ...),
/// with each slot emitting the mass-weighted average of its source points.
/// Deterministic and mean preserving; in one dimension equal to [`etpf_1d`].
pub fn mt_resample(req: &ResampleRequest<'_>) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..req.states.len()).collect();
    order.sort_by(|&a, &b| lexicographic(&req.states[a], &req.states[b]));
    let dim = req.states[0].len();
    staircase(&order, req.weights)
        .iter()
        .map(|slot| {
            (0..dim)
                .map(|c| average_slot(slot, |i| req.states[i][c]))
                .collect()
        })
        .collect()
}

/// Applies [`etpf_1d`] to each coordinate separately. Particle `k` receives,
/// in coordinate `c`, the slot matching its rank in that coordinate, so the
/// ensemble's dependence structure is kept.
pub fn dimensionwise_transform(req: &ResampleRequest<'_>) -> Result<Vec<Vec<f64>>> {
    if req.space != SpaceTag::Reference {
        return Err(Error::InvalidParameter(
            "dimension-wise resampling requires a reference-space ensemble".into(),
        ));
    }
    let m = req.states.len();
    let dim = req.states[0].len();
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|c| {
            let values: Vec<f64> = req.states.iter().map(|s| s[c]).collect();
            let order = sort_order_scalar(&values);
            let slots = staircase(&order, req.weights);
            let mut out = vec![0.0; m];
            for (rank, &k) in order.iter().enumerate() {
                out[k] = average_slot(&slots[rank], |i| values[i]);
            }
            out
        })
        .collect();
    Ok((0..m)
        .map(|k| columns.iter().map(|col| col[k]).collect())
        .collect())
}
