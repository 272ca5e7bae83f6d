use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grn::{grn_loglikelihood, observe_grn, FastSubsystem, GrnSlowData, GRN_INITIAL_STATE};
use super::multiscale::{project_to_slow, reduced_loglikelihood, EffectiveVariant, SlowStats};
use super::network::{ReactionNetwork, GRN_RATES, TWO_SPECIES_RATES};
use super::ssa::{ssa_simulate, PathRecord};
use super::stats::{channel_log_evidence, full_loglikelihood, sufficient_stats, SufficientStats};
use crate::error::{Error, Result};
use crate::model::{sanitize, LogDensity, ProductPrior};
use crate::rng::substream;

/// Which likelihood a posterior uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Every reaction observed.
    Full,
    /// Only `S = X1 + X2` observed, QEA degradation.
    Qea,
    /// Only `S = X1 + X2` observed, CMA degradation.
    Cma,
    /// Gene regulatory network observed through `(T, M)`.
    Grn,
}

/// Observations in the form each likelihood consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrnData {
    Full(SufficientStats),
    Slow(SlowStats),
    Grn(GrnSlowData),
}

#[derive(Clone)]
enum Likelihood {
    Full(SufficientStats),
    Reduced(SlowStats, EffectiveVariant),
    Grn(GrnSlowData, Arc<dyn FastSubsystem>),
}

/// Gamma product prior plus one of the reaction-network likelihoods.
///
/// Log densities include every rate-independent constant of the likelihood
/// except, for [`Experiment::Full`], the `Σ log g` term, which is available
/// from [`SufficientStats::log_constant`].
#[derive(Clone)]
pub struct Posterior {
    prior: ProductPrior,
    likelihood: Likelihood,
}

impl std::fmt::Debug for Posterior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.likelihood {
            Likelihood::Full(_) => "full",
            Likelihood::Reduced(_, EffectiveVariant::Qea) => "qea",
            Likelihood::Reduced(_, EffectiveVariant::Cma) => "cma",
            Likelihood::Grn(..) => "grn",
        };
        f.debug_struct("Posterior")
            .field("likelihood", &kind)
            .field("prior", &self.prior)
            .finish()
    }
}

impl Posterior {
    pub fn prior(&self) -> &ProductPrior {
        &self.prior
    }

    pub fn log_likelihood(&self, k: &[f64]) -> f64 {
        let ll = match &self.likelihood {
            Likelihood::Full(stats) => full_loglikelihood(stats, k),
            Likelihood::Reduced(slow, variant) => reduced_loglikelihood(slow, k, variant),
            Likelihood::Grn(data, plugin) => grn_loglikelihood(data, k, plugin.as_ref()),
        };
        sanitize(ll)
    }
}

impl LogDensity for Posterior {
    fn dim(&self) -> usize {
        self.prior.len()
    }

    fn log_density(&self, k: &[f64]) -> f64 {
        let lp = self.prior.log_density(k);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        sanitize(lp + self.log_likelihood(k))
    }
}

/// Assembles prior and likelihood. The GRN experiment needs the fast
/// subsystem plug-in that supplies its effective propensities.
pub fn build_posterior(
    experiment: Experiment,
    data: &SrnData,
    prior: ProductPrior,
    plugin: Option<Arc<dyn FastSubsystem>>,
) -> Result<Posterior> {
    let expect_dim = |d: usize| {
        if prior.len() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: d,
                found: prior.len(),
            })
        }
    };
    let likelihood = match (experiment, data) {
        (Experiment::Full, SrnData::Full(stats)) => {
            expect_dim(stats.n_reactions())?;
            Likelihood::Full(stats.clone())
        }
        (Experiment::Qea | Experiment::Cma, SrnData::Slow(slow)) => {
            expect_dim(4)?;
            let variant = if experiment == Experiment::Qea {
                EffectiveVariant::Qea
            } else {
                EffectiveVariant::Cma
            };
            Likelihood::Reduced(slow.clone(), variant)
        }
        (Experiment::Grn, SrnData::Grn(grn)) => {
            expect_dim(8)?;
            let plugin = plugin.ok_or(Error::MissingPlugin("GRN fast subsystem moments"))?;
            Likelihood::Grn(grn.clone(), plugin)
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "data do not fit the {experiment:?} likelihood"
            )))
        }
    };
    Ok(Posterior { prior, likelihood })
}

/// Closed-form log evidence of the slow observations (births and degradations
/// of `S`) under the full two-species model, given the observed fast path.
/// This is the quantity the reduced models' evidences are compared against.
pub fn full_model_slow_log_evidence(stats: &SufficientStats, prior: &ProductPrior) -> Result<f64> {
    if stats.n_reactions() != 4 || prior.len() != 4 {
        return Err(Error::InvalidParameter(
            "slow-channel evidence needs the two-species system".into(),
        ));
    }
    Ok(channel_log_evidence(stats, 0, &prior.components[0])
        + channel_log_evidence(stats, 3, &prior.components[3]))
}

/// A simulated observation record with every derived view of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub network: ReactionNetwork,
    pub path: PathRecord,
    pub stats: SufficientStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slow: Option<SlowStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grn: Option<GrnSlowData>,
}

impl SyntheticData {
    /// Two-species path from `S1 = S2 = 0` at the given rates.
    pub fn two_species(rates: [f64; 4], t_end: f64, seed: u64) -> Result<Self> {
        let network = ReactionNetwork::two_species(rates)?;
        let path = ssa_simulate(&network, &[0, 0], t_end, &mut substream(seed, 0, 0))?;
        let stats = sufficient_stats(&path, &network)?;
        let slow = project_to_slow(&path, &network)?;
        Ok(Self {
            network,
            path,
            stats,
            slow: Some(slow),
            grn: None,
        })
    }

    /// Two-species path at the reference rates.
    pub fn two_species_default(t_end: f64, seed: u64) -> Result<Self> {
        Self::two_species(TWO_SPECIES_RATES, t_end, seed)
    }

    /// Gene regulatory network path from one free gene and no products.
    pub fn gene_regulatory(rates: [f64; 8], t_end: f64, seed: u64) -> Result<Self> {
        let network = ReactionNetwork::gene_regulatory(rates)?;
        let path = ssa_simulate(
            &network,
            &GRN_INITIAL_STATE,
            t_end,
            &mut substream(seed, 0, 0),
        )?;
        let stats = sufficient_stats(&path, &network)?;
        let grn = observe_grn(&path, &network)?;
        Ok(Self {
            network,
            path,
            stats,
            slow: None,
            grn: Some(grn),
        })
    }

    pub fn gene_regulatory_default(t_end: f64, seed: u64) -> Result<Self> {
        Self::gene_regulatory(GRN_RATES, t_end, seed)
    }

    /// The data view an experiment's likelihood consumes.
    pub fn view(&self, experiment: Experiment) -> Result<SrnData> {
        let missing = || Error::InvalidParameter(format!("no {experiment:?} view of this dataset"));
        Ok(match experiment {
            Experiment::Full => SrnData::Full(self.stats.clone()),
            Experiment::Qea | Experiment::Cma => {
                SrnData::Slow(self.slow.clone().ok_or_else(missing)?)
            }
            Experiment::Grn => SrnData::Grn(self.grn.clone().ok_or_else(missing)?),
        })
    }
}
