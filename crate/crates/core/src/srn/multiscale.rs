use serde::{Deserialize, Serialize};

use super::network::ReactionNetwork;
use super::ssa::PathRecord;
use crate::error::{Error, Result};

/// QEA effective degradation propensity `k2 k4 s / (k2 + k3)`.
pub fn qea_effective_propensity(s: f64, k2: f64, k3: f64, k4: f64) -> f64 {
    k2 * k4 * s / (k2 + k3)
}

/// CMA effective degradation propensity `k2 k4 s / (k2 + k3 + k4)`.
pub fn cma_effective_propensity(s: f64, k2: f64, k3: f64, k4: f64) -> f64 {
    k2 * k4 * s / (k2 + k3 + k4)
}

/// Multiscale approximation used for the slow degradation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectiveVariant {
    Qea,
    Cma,
}

/// Effective first-order degradation rate `k̂4` of the slow variable as a
/// function of `(k1 V, k2, k3, k4)`.
pub trait EffectiveRate: Send + Sync {
    fn effective_rate(&self, k: &[f64]) -> f64;
}

impl EffectiveRate for EffectiveVariant {
    fn effective_rate(&self, k: &[f64]) -> f64 {
        match self {
            Self::Qea => qea_effective_propensity(1.0, k[1], k[2], k[3]),
            Self::Cma => cma_effective_propensity(1.0, k[1], k[2], k[3]),
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> EffectiveRate for F {
    fn effective_rate(&self, k: &[f64]) -> f64 {
        self(k)
    }
}

/// Observations of `S = X1 + X2` for the two-species system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowStats {
    pub births: u64,
    pub deaths: u64,
    /// `∫ S dt`.
    pub occupancy: f64,
    /// `Σ log S(t⁻)` over degradation events.
    pub log_s_at_deaths: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

/// Drops the fast conversions of a two-species path and keeps what an
/// observer of `S` sees.
pub fn project_to_slow(path: &PathRecord, network: &ReactionNetwork) -> Result<SlowStats> {
    if network.n_species() != 2 || network.n_reactions() != 4 {
        return Err(Error::InvalidParameter(
            "slow projection needs the two-species network".into(),
        ));
    }
    let mut out = SlowStats {
        births: 0,
        deaths: 0,
        occupancy: 0.0,
        log_s_at_deaths: 0.0,
        t_end: path.t_end,
    };
    path.replay(network, |t0, t1, state, next| {
        let s = (state[0] + state[1]) as f64;
        out.occupancy += s * (t1 - t0);
        match next {
            Some(0) => out.births += 1,
            Some(3) => {
                out.deaths += 1;
                out.log_s_at_deaths += s.ln();
            }
            _ => {}
        }
    })?;
    Ok(out)
}

/// Log-likelihood of the slow path under `∅ → S → ∅` with birth propensity
/// `k1 V` and degradation propensity `k̂4 s`, including the rate-independent
/// `Σ log S` term. `-inf` for non-positive rates.
pub fn reduced_loglikelihood<E: EffectiveRate + ?Sized>(
    slow: &SlowStats,
    k: &[f64],
    variant: &E,
) -> f64 {
    if k.len() != 4 || k.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let k_hat = variant.effective_rate(k);
    if !(k_hat > 0.0) || !k_hat.is_finite() {
        return f64::NEG_INFINITY;
    }
    slow.births as f64 * k[0].ln() - k[0] * slow.t_end + slow.deaths as f64 * k_hat.ln()
        - k_hat * slow.occupancy
        + slow.log_s_at_deaths
}
