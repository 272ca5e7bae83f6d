use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::network::ReactionNetwork;
use super::ssa::PathRecord;
use crate::error::{Error, Result};
use crate::model::{GammaPrior, ProductPrior};

/// Per-reaction event counts `R_j` and occupancy integrals
/// `G_j = ∫ g_j(X(t)) dt`, where the propensity is `k_j g_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    #[serde(rename = "R")]
    pub r: Vec<u64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// `Σ log g_j(X(t⁻))` over the events of each reaction; the
    /// rate-independent part of the path log-likelihood.
    #[serde(default)]
    pub log_g: Vec<f64>,
}

impl SufficientStats {
    pub fn n_reactions(&self) -> usize {
        self.r.len()
    }

    pub fn total_events(&self) -> u64 {
        self.r.iter().sum()
    }

    /// The rate-independent constant `C = Σ_j Σ_events log g_j`.
    pub fn log_constant(&self) -> f64 {
        self.log_g.iter().sum()
    }
}

/// Counts and exact piecewise-constant occupancy integrals along `path`.
pub fn sufficient_stats(path: &PathRecord, network: &ReactionNetwork) -> Result<SufficientStats> {
    let n = network.n_reactions();
    let mut r = vec![0u64; n];
    let mut g = vec![0.0; n];
    let mut log_g = vec![0.0; n];
    let mut zero_event = None;
    let mut event = 0;
    path.replay(network, |t0, t1, state, next| {
        let dt = t1 - t0;
        for (j, reaction) in network.reactions().iter().enumerate() {
            let gj = reaction.combinatorial(state);
            g[j] += gj * dt;
            if next == Some(j) {
                r[j] += 1;
                if gj > 0.0 {
                    log_g[j] += gj.ln();
                } else if zero_event.is_none() {
                    zero_event = Some(event);
                }
            }
        }
        event += 1;
    })?;
    if let Some(event) = zero_event {
        return Err(Error::InconsistentPath { event });
    }
    Ok(SufficientStats {
        r,
        g,
        t_end: path.t_end,
        log_g,
    })
}

/// Rate-dependent part of the path log-likelihood, `Σ_j R_j log k_j − k_j G_j`.
/// Add [`SufficientStats::log_constant`] for the full value. `-inf` unless
/// every rate is positive.
pub fn full_loglikelihood(stats: &SufficientStats, k: &[f64]) -> f64 {
    if k.len() != stats.r.len() || k.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    stats
        .r
        .iter()
        .zip(&stats.g)
        .zip(k)
        .map(|((&r, &g), &kj)| r as f64 * kj.ln() - kj * g)
        .sum()
}

/// Exact posterior `Gamma(α_j + R_j, β_j + G_j)` for each rate.
pub fn conjugate_posterior(stats: &SufficientStats, prior: &ProductPrior) -> Result<ProductPrior> {
    if prior.len() != stats.n_reactions() {
        return Err(Error::DimensionMismatch {
            expected: stats.n_reactions(),
            found: prior.len(),
        });
    }
    prior
        .components
        .iter()
        .zip(stats.r.iter().zip(&stats.g))
        .map(|(p, (&r, &g))| GammaPrior::new(p.shape + r as f64, p.rate + g))
        .collect::<Result<Vec<_>>>()
        .map(ProductPrior::new)
}

/// Closed-form log evidence of the events of one reaction channel under a
/// Gamma prior on its rate, including the `Σ log g` constant.
pub fn channel_log_evidence(stats: &SufficientStats, j: usize, prior: &GammaPrior) -> f64 {
    let (a, b) = (prior.shape, prior.rate);
    let r = stats.r[j] as f64;
    let g = stats.g[j];
    a * b.ln() - ln_gamma(a) + ln_gamma(a + r) - (a + r) * (b + g).ln()
        + stats.log_g.get(j).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::srn::network::Reaction;
    use crate::srn::ssa::ssa_simulate;

    fn birth_death() -> ReactionNetwork {
        ReactionNetwork::new(
            vec!["X".into()],
            vec![
                Reaction::new(vec![0], vec![1]).unwrap(),
                Reaction::new(vec![1], vec![0]).unwrap(),
            ],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn empty_path_occupancy() {
        let net = birth_death();
        let path = PathRecord {
            x0: vec![0],
            events: vec![],
            t_end: 5.0,
        };
        let s = sufficient_stats(&path, &net).unwrap();
        assert_eq!(s.r, vec![0, 0]);
        assert_eq!(s.g, vec![5.0, 0.0]);
    }

    #[test]
    fn one_birth_then_death_channel_integral() {
        let net = birth_death();
        let path = PathRecord {
            x0: vec![0],
            events: vec![(2.0, 0)],
            t_end: 5.0,
        };
        let s = sufficient_stats(&path, &net).unwrap();
        assert_eq!(s.r, vec![1, 0]);
        assert_eq!(s.g[1], 3.0);
    }

    #[test]
    fn loglik_examples() {
        let stats = SufficientStats {
            r: vec![3],
            g: vec![2.0],
            t_end: 1.0,
            log_g: vec![0.0],
        };
        let f = |k: f64| full_loglikelihood(&stats, &[k]);
        assert!(f(1.5) > f(1.5 - 1e-4) && f(1.5) > f(1.5 + 1e-4));
        assert_eq!(f(0.0), f64::NEG_INFINITY);
        let doubled = SufficientStats {
            g: vec![4.0],
            ..stats.clone()
        };
        let k = 0.7;
        assert!((full_loglikelihood(&doubled, &[k]) - (f(k) - k * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn replay_is_deterministic_and_counts_events() {
        let net = ReactionNetwork::two_species(crate::srn::TWO_SPECIES_RATES).unwrap();
        let path = ssa_simulate(&net, &[0, 0], 5.0, &mut substream(9, 0, 0)).unwrap();
        let a = sufficient_stats(&path, &net).unwrap();
        let again = ssa_simulate(&net, &[0, 0], 5.0, &mut substream(9, 0, 0)).unwrap();
        assert_eq!(a, sufficient_stats(&again, &net).unwrap());
        assert_eq!(a.total_events() as usize, path.events.len());
        assert!(a.g.iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn channel_evidence_matches_quadrature() {
        let stats = SufficientStats {
            r: vec![4],
            g: vec![3.0],
            t_end: 3.0,
            log_g: vec![0.5],
        };
        let prior = GammaPrior::new(2.0, 1.5).unwrap();
        // ∫ prior(k) exp(loglik(k) + C) dk by the midpoint rule
        let h = 1e-4;
        let integral: f64 = (0..200_000)
            .map(|i| {
                let k = (i as f64 + 0.5) * h;
                (prior.log_density(k) + full_loglikelihood(&stats, &[k]) + 0.5).exp() * h
            })
            .sum();
        assert!((channel_log_evidence(&stats, 0, &prior) - integral.ln()).abs() < 1e-6);
    }

    #[test]
    fn conjugate_update() {
        let stats = SufficientStats {
            r: vec![3, 0],
            g: vec![2.0, 1.0],
            t_end: 1.0,
            log_g: vec![0.0, 0.0],
        };
        let prior = ProductPrior::from_pairs(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
        let post = conjugate_posterior(&stats, &prior).unwrap();
        assert_eq!(
            post.components[0],
            GammaPrior {
                shape: 4.0,
                rate: 3.0
            }
        );
        assert_eq!(
            post.components[1],
            GammaPrior {
                shape: 2.0,
                rate: 4.0
            }
        );
    }
}
