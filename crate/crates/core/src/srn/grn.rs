use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::network::ReactionNetwork;
use super::ssa::PathRecord;
use crate::error::{Error, Result};

/// Initial state `(G, G', M, P, D)`: one unbound gene copy, nothing else.
pub const GRN_INITIAL_STATE: [u64; 5] = [1, 0, 0, 0, 0];

/// Conditional moments of the fast subsystem `P+P ⇌ D`, `G+D ⇌ G'` given the
/// total protein count `T = P + 2D + 2G'`.
///
/// This is the effective-propensity plug-in of the reduced gene regulatory
/// model: transcription runs at `k5 E[G | T]` and protein decay at
/// `k7 E[P | T]`.
pub trait FastSubsystem: Send + Sync {
    /// `(E[G | T], E[P | T])` for fast rates `(k1, k2, k3, k4)`, or `None`
    /// when they are undefined.
    fn conditional_means(&self, fast_rates: &[f64], total: u64) -> Option<(f64, f64)>;

    /// The same moments for every total in `0..=max_total`.
    fn conditional_means_table(
        &self,
        fast_rates: &[f64],
        max_total: u64,
    ) -> Option<Vec<(f64, f64)>> {
        (0..=max_total)
            .map(|t| self.conditional_means(fast_rates, t))
            .collect()
    }
}

/// Quasi-equilibrium moments: the fast reactions are run to stationarity with
/// the slow reactions switched off.
///
/// The fast subsystem is reversible and deficiency zero, so its stationary law
/// on each conservation class is the product form
/// `∝ b^D / D! · c^{G'} / G'! · 1 / (P! G!)` with `b = k1 / (2 k2)` and
/// `c = k3 b / k4`. Each class is finite, so the moments are exact sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QeaGeneSwitch {
    /// Gene copies `G + G'`.
    pub genes: u64,
}

impl Default for QeaGeneSwitch {
    fn default() -> Self {
        Self { genes: 1 }
    }
}

impl QeaGeneSwitch {
    /// `log A(m) = log Σ_D b^D / (D! (m - 2D)!)` for `m = 0..=max`.
    fn log_a(log_b: f64, max: usize, ln_fact: &[f64]) -> Vec<f64> {
        (0..=max)
            .map(|m| {
                let terms = (0..=m / 2).map(|d| d as f64 * log_b - ln_fact[d] - ln_fact[m - 2 * d]);
                log_sum_exp(terms)
            })
            .collect()
    }

    fn table(&self, k: &[f64], max_total: u64) -> Option<Vec<(f64, f64)>> {
        if k.len() < 4 || k[..4].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return None;
        }
        let max = max_total as usize;
        let ln_fact: Vec<f64> = (0..=max.max(self.genes as usize) + 1)
            .map(|n| ln_gamma(n as f64 + 1.0))
            .collect();
        let log_b = k[0].ln() - (2.0 * k[1]).ln();
        let log_c = k[2].ln() + log_b - k[3].ln();
        let log_a = Self::log_a(log_b, max, &ln_fact);
        let n = self.genes as usize;
        let log_weight = |bound: usize| log_c * bound as f64 - ln_fact[bound] - ln_fact[n - bound];
        let mut out = Vec::with_capacity(max + 1);
        for t in 0..=max {
            let mut z = Vec::new();
            let mut g_terms = Vec::new();
            let mut p_terms = Vec::new();
            for bound in 0..=n.min(t / 2) {
                let m = t - 2 * bound;
                let w = log_weight(bound);
                z.push(w + log_a[m]);
                if bound < n {
                    g_terms.push(w + ((n - bound) as f64).ln() + log_a[m]);
                }
                if m >= 1 {
                    p_terms.push(w + log_a[m - 1]);
                }
            }
            let log_z = log_sum_exp(z.into_iter());
            let e_g = (log_sum_exp(g_terms.into_iter()) - log_z).exp();
            let e_p = (log_sum_exp(p_terms.into_iter()) - log_z).exp();
            if !(e_g.is_finite() && e_p.is_finite()) {
                return None;
            }
            out.push((e_g, e_p));
        }
        Some(out)
    }
}

impl FastSubsystem for QeaGeneSwitch {
    fn conditional_means(&self, fast_rates: &[f64], total: u64) -> Option<(f64, f64)> {
        self.table(fast_rates, total).map(|t| t[total as usize])
    }

    fn conditional_means_table(
        &self,
        fast_rates: &[f64],
        max_total: u64,
    ) -> Option<Vec<(f64, f64)>> {
        self.table(fast_rates, max_total)
    }
}

fn log_sum_exp<I: Iterator<Item = f64>>(terms: I) -> f64 {
    let v: Vec<f64> = terms.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Time and slow events spent at one value of the total protein count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalLevel {
    pub total: u64,
    pub time: f64,
    /// `G → G+M` events seen at this level.
    pub transcriptions: u64,
    /// `P → ∅` events seen at this level.
    pub decays: u64,
}

/// What an observer of `T = P + 2D + 2G'` and `M` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnSlowData {
    pub levels: Vec<TotalLevel>,
    /// `M → M+P` events.
    pub translations: u64,
    /// `M → ∅` events.
    pub mrna_decays: u64,
    /// `∫ M dt`.
    pub mrna_occupancy: f64,
    /// `Σ log M(t⁻)` over translation and mRNA decay events.
    pub log_m_at_events: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl GrnSlowData {
    pub fn max_total(&self) -> u64 {
        self.levels.iter().map(|l| l.total).max().unwrap_or(0)
    }
}

/// Projects a gene regulatory network path onto `(T, M)`.
pub fn observe_grn(path: &PathRecord, network: &ReactionNetwork) -> Result<GrnSlowData> {
    if network.n_species() != 5 || network.n_reactions() != 8 {
        return Err(Error::InvalidParameter(
            "observation needs the gene regulatory network".into(),
        ));
    }
    let mut levels: BTreeMap<u64, TotalLevel> = BTreeMap::new();
    let mut data = GrnSlowData {
        levels: Vec::new(),
        translations: 0,
        mrna_decays: 0,
        mrna_occupancy: 0.0,
        log_m_at_events: 0.0,
        t_end: path.t_end,
    };
    path.replay(network, |t0, t1, x, next| {
        let total = x[3] + 2 * x[4] + 2 * x[1];
        let m = x[2] as f64;
        let level = levels.entry(total).or_insert(TotalLevel {
            total,
            time: 0.0,
            transcriptions: 0,
            decays: 0,
        });
        level.time += t1 - t0;
        data.mrna_occupancy += m * (t1 - t0);
        match next {
            Some(4) => level.transcriptions += 1,
            Some(6) => level.decays += 1,
            Some(5) | Some(7) => {
                if next == Some(5) {
                    data.translations += 1;
                } else {
                    data.mrna_decays += 1;
                }
                data.log_m_at_events += m.ln();
            }
            _ => {}
        }
    })?;
    data.levels = levels.into_values().collect();
    Ok(data)
}

/// Log-likelihood of the observed `(T, M)` path for rates `k1..k8`, with the
/// transcription and protein decay propensities supplied by `plugin`.
pub fn grn_loglikelihood(data: &GrnSlowData, k: &[f64], plugin: &dyn FastSubsystem) -> f64 {
    if k.len() != 8 || k.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let Some(table) = plugin.conditional_means_table(&k[..4], data.max_total()) else {
        return f64::NEG_INFINITY;
    };
    let mut ll = 0.0;
    for level in &data.levels {
        let (e_g, e_p) = table[level.total as usize];
        let a5 = k[4] * e_g;
        let a7 = k[6] * e_p;
        ll -= (a5 + a7) * level.time;
        for (count, rate) in [(level.transcriptions, a5), (level.decays, a7)] {
            if count > 0 {
                if !(rate > 0.0) {
                    return f64::NEG_INFINITY;
                }
                ll += count as f64 * rate.ln();
            }
        }
    }
    ll += data.translations as f64 * k[5].ln() + data.mrna_decays as f64 * k[7].ln()
        - (k[5] + k[7]) * data.mrna_occupancy
        + data.log_m_at_events;
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}
