use std::sync::Arc;

use nalgebra::DMatrix;

use super::config::{CustomDensity, DataSource, ExperimentConfig, ProblemConfig};
use crate::error::{Error, Result};
use crate::model::{Gaussian, LogDensity, ProductPrior, RosenbrockDensity};
use crate::samplers::draw_initial;
use crate::srn::{
    build_posterior, channel_log_evidence, conjugate_posterior, sufficient_stats, Experiment,
    QeaGeneSwitch, ReactionNetwork, SrnData, SyntheticData,
};

/// A resolved target with what the diagnostics know about it.
pub struct Problem {
    pub target: Arc<dyn LogDensity>,
    pub prior: Option<ProductPrior>,
    /// Exact posterior mean and covariance, when known.
    pub reference: Option<(Vec<f64>, DMatrix<f64>)>,
    /// Normalized density for histogram errors.
    pub truth: Option<Arc<dyn LogDensity>>,
    /// Added to the log mean weight to give the log evidence; `None` when an
    /// evidence is meaningless for the target.
    pub evidence_offset: Option<f64>,
    pub exact_log_evidence: Option<f64>,
    /// The dataset behind reaction-network problems.
    pub dataset: Option<SyntheticData>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.target.dim())
            .field("exact_log_evidence", &self.exact_log_evidence)
            .finish_non_exhaustive()
    }
}

/// Loads or simulates the dataset of a reaction-network problem.
pub fn load_dataset(problem: &ProblemConfig) -> Result<SyntheticData> {
    let source = problem
        .data()
        .ok_or_else(|| Error::Config(format!("{} has no dataset", problem.name())))?;
    match source {
        DataSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
        DataSource::Simulate { t_end, seed, rates } => {
            let wrong = |n: usize| Error::Config(format!("expected {n} rates"));
            if matches!(problem, ProblemConfig::Grn { .. }) {
                match rates {
                    None => SyntheticData::gene_regulatory_default(*t_end, *seed),
                    Some(r) => SyntheticData::gene_regulatory(
                        r.as_slice().try_into().map_err(|_| wrong(8))?,
                        *t_end,
                        *seed,
                    ),
                }
            } else {
                match rates {
                    None => SyntheticData::two_species_default(*t_end, *seed),
                    Some(r) => SyntheticData::two_species(
                        r.as_slice().try_into().map_err(|_| wrong(4))?,
                        *t_end,
                        *seed,
                    ),
                }
            }
        }
    }
}

fn conjugate_reference(prior: &ProductPrior, data: &SrnData) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let SrnData::Full(stats) = data else {
        return Err(Error::Config("conjugate reference needs full data".into()));
    };
    let post = conjugate_posterior(stats, prior)?;
    let mean = post.means();
    let var: Vec<f64> = post.components.iter().map(|g| g.variance()).collect();
    Ok((
        mean,
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(var)),
    ))
}

fn full_reaction_problem(
    stats: crate::srn::SufficientStats,
    prior: ProductPrior,
    dataset: Option<SyntheticData>,
) -> Result<Problem> {
    let data = SrnData::Full(stats.clone());
    let reference = conjugate_reference(&prior, &data)?;
    let exact = (0..stats.n_reactions())
        .map(|j| channel_log_evidence(&stats, j, &prior.components[j]))
        .sum();
    let target = build_posterior(Experiment::Full, &data, prior.clone(), None)?;
    Ok(Problem {
        target: Arc::new(target),
        prior: Some(prior),
        reference: Some(reference),
        truth: None,
        evidence_offset: Some(stats.log_constant()),
        exact_log_evidence: Some(exact),
        dataset,
    })
}

impl Problem {
    pub fn build(problem: &ProblemConfig) -> Result<Self> {
        match problem {
            ProblemConfig::Rosenbrock => {
                let r = RosenbrockDensity;
                let c = r.covariance();
                Ok(Self {
                    target: Arc::new(r),
                    prior: None,
                    reference: Some((
                        r.mean().to_vec(),
                        DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
                    )),
                    truth: Some(Arc::new(r)),
                    evidence_offset: None,
                    exact_log_evidence: None,
                    dataset: None,
                })
            }
            ProblemConfig::SrnFull { .. } => {
                let data = load_dataset(problem)?;
                full_reaction_problem(data.stats.clone(), ProductPrior::two_species(), Some(data))
            }
            ProblemConfig::SrnQea { .. }
            | ProblemConfig::SrnCma { .. }
            | ProblemConfig::Grn { .. } => {
                let data = load_dataset(problem)?;
                let (experiment, prior, plugin) = match problem {
                    ProblemConfig::SrnQea { .. } => {
                        (Experiment::Qea, ProductPrior::two_species(), None)
                    }
                    ProblemConfig::SrnCma { .. } => {
                        (Experiment::Cma, ProductPrior::two_species(), None)
                    }
                    _ => (
                        Experiment::Grn,
                        ProductPrior::gene_regulatory(),
                        Some(Arc::new(QeaGeneSwitch::default()) as Arc<_>),
                    ),
                };
                let target =
                    build_posterior(experiment, &data.view(experiment)?, prior.clone(), plugin)?;
                Ok(Self {
                    target: Arc::new(target),
                    prior: Some(prior),
                    reference: None,
                    truth: None,
                    evidence_offset: Some(0.0),
                    exact_log_evidence: None,
                    dataset: Some(data),
                })
            }
            ProblemConfig::Custom { density } => match CustomDensity::load(density)? {
                CustomDensity::Gaussian { mean, covariance } => {
                    let d = mean.len();
                    if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: covariance.len(),
                        });
                    }
                    let flat: Vec<f64> = covariance.iter().flatten().copied().collect();
                    let cov = DMatrix::from_row_slice(d, d, &flat);
                    let g = Arc::new(Gaussian::new(mean.clone(), cov.clone())?);
                    Ok(Self {
                        target: g.clone(),
                        prior: None,
                        reference: Some((mean, cov)),
                        truth: Some(g),
                        evidence_offset: None,
                        exact_log_evidence: None,
                        dataset: None,
                    })
                }
                CustomDensity::ReactionPath {
                    network,
                    path,
                    prior_shapes,
                    prior_rates,
                } => {
                    let prior = ProductPrior::from_pairs(&prior_shapes, &prior_rates)?;
                    let stats = sufficient_stats(&path, &network)?;
                    let dataset = custom_dataset(network, path, stats.clone());
                    full_reaction_problem(stats, prior, Some(dataset))
                }
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Initial ensemble (or chain start as the single entry): prior draws
    /// when there is a prior, otherwise draws from the configured kernel
    /// around `start` (the origin by default).
    pub fn initial(&self, config: &ExperimentConfig, seed: u64) -> Result<Vec<Vec<f64>>> {
        let m = if config.sampler.algorithm.is_ensemble() {
            config.sampler.ensemble_size
        } else {
            1
        };
        if let Some(prior) = &self.prior {
            return Ok(draw_initial(m, seed, |rng| prior.sample(rng)));
        }
        let d = self.dim();
        let center = config.start.clone().unwrap_or_else(|| vec![0.0; d]);
        if center.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: center.len(),
            });
        }
        let kernel = config.sampler.kernel(d)?;
        Ok(draw_initial(m, seed, |rng| kernel.sample(&center, rng)))
    }
}

fn custom_dataset(
    network: ReactionNetwork,
    path: crate::srn::PathRecord,
    stats: crate::srn::SufficientStats,
) -> SyntheticData {
    SyntheticData {
        network,
        path,
        stats,
        slow: None,
        grn: None,
    }
}
