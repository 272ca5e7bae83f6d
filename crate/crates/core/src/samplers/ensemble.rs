use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::ProposalKernel;
use crate::diagnostics::ess;
use crate::error::{Error, Result};
use crate::model::LogDensity;
use crate::resampling::{ResampleRequest, Resampler, SpaceTag};
use crate::rng::{substream, SHARED_SLOT};
use crate::transport::TriangularMap;

/// Ensemble of states with log importance weights at iteration `iteration`.
///
/// Log weights are on the scale `log π(θ) - log χ(θ)`, so `exp` of them is an
/// unbiased estimate of the target's normalizing constant. After resampling
/// every log weight is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsemble {
    pub states: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
    pub iteration: usize,
}

impl WeightedEnsemble {
    /// Equally weighted ensemble.
    pub fn uniform(states: Vec<Vec<f64>>, iteration: usize) -> Result<Self> {
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
        let log_weights = vec![0.0; states.len()];
        Ok(Self {
            states,
            log_weights,
            iteration,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Weights divided by the largest one.
    pub fn weights(&self) -> Vec<f64> {
        relative_weights(&self.log_weights)
    }

    /// Weights summing to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    pub fn ess(&self) -> f64 {
        ess(&self.weights())
    }

    /// `log` of the mean raw weight.
    pub fn log_mean_weight(&self) -> f64 {
        log_sum_exp(&self.log_weights) - (self.len() as f64).ln()
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn relative_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; log_weights.len()];
    }
    log_weights.iter().map(|v| (v - max).exp()).collect()
}

/// Per-iteration output of an ensemble step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Resampled, equally weighted ensemble in target space.
    pub ensemble: WeightedEnsemble,
    /// Proposals with their importance weights.
    pub sample: WeightedEnsemble,
    /// Proposals in kernel coordinates (`T(θ̂)`).
    pub reference: Vec<Vec<f64>>,
    /// Proposals whose map inversion failed; their weight is zero.
    pub inversion_failures: usize,
}

/// Log of the equally weighted kernel mixture `χ(x) = (1/M) Σ_j q(x; c_j)`
/// evaluated at every `x`.
pub(crate) fn log_mixture(
    points: &[Vec<f64>],
    centers: &[Vec<f64>],
    kernel: &ProposalKernel,
) -> Vec<f64> {
    let white: Vec<Vec<f64>> = centers.par_iter().map(|c| kernel.whiten(c)).collect();
    let log_m = (centers.len() as f64).ln();
    points
        .par_iter()
        .map(|x| {
            let zx = kernel.whiten(x);
            let exponents: Vec<f64> = white
                .iter()
                .map(|zc| {
                    -0.5 * zx
                        .iter()
                        .zip(zc)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .collect();
            log_sum_exp(&exponents) - kernel.log_norm() - log_m
        })
        .collect()
}

/// Deterministic-mixture log weights
/// `log π(θ̂_i) - log χ(r̂_i) - log |J_T(θ̂_i)|`, where `r̂_i = T(θ̂_i)` and the
/// mixture is centred at `centers` (in reference coordinates when a map is
/// given). Without a map, `r̂ = θ̂` and the Jacobian term vanishes.
pub fn mixture_log_weights<D: LogDensity + ?Sized>(
    proposals: &[Vec<f64>],
    centers: &[Vec<f64>],
    kernel: &ProposalKernel,
    target: &D,
    map: Option<&TriangularMap>,
) -> Result<Vec<f64>> {
    let prepared: Vec<(Vec<f64>, f64)> = proposals
        .par_iter()
        .map(|theta| match map {
            None => Ok((theta.clone(), 0.0)),
            Some(m) => m.evaluate_with_log_jacobian(theta),
        })
        .collect::<Result<_>>()?;
    let reference: Vec<Vec<f64>> = prepared.iter().map(|(r, _)| r.clone()).collect();
    let log_jac: Vec<f64> = prepared.iter().map(|(_, j)| *j).collect();
    let valid = vec![true; proposals.len()];
    weigh(
        proposals, &reference, &log_jac, &valid, centers, kernel, target,
    )
}

/// [`mixture_log_weights`] exponentiated after subtracting the maximum.
pub fn mixture_weights<D: LogDensity + ?Sized>(
    proposals: &[Vec<f64>],
    centers: &[Vec<f64>],
    kernel: &ProposalKernel,
    target: &D,
    map: Option<&TriangularMap>,
) -> Result<Vec<f64>> {
    let lw = mixture_log_weights(proposals, centers, kernel, target, map)?;
    Ok(relative_weights(&lw))
}

fn weigh<D: LogDensity + ?Sized>(
    proposals: &[Vec<f64>],
    reference: &[Vec<f64>],
    log_jac: &[f64],
    valid: &[bool],
    centers: &[Vec<f64>],
    kernel: &ProposalKernel,
    target: &D,
) -> Result<Vec<f64>> {
    let log_target: Vec<f64> = proposals
        .par_iter()
        .zip(valid)
        .map(|(theta, &ok)| {
            if ok {
                target.log_density(theta)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let log_chi = log_mixture(reference, centers, kernel);
    let lw: Vec<f64> = (0..proposals.len())
        .map(|i| {
            if log_target[i] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                crate::model::sanitize(log_target[i] - log_chi[i] - log_jac[i])
            }
        })
        .collect();
    if lw.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::DegenerateEnsemble);
    }
    Ok(lw)
}

/// One iteration of ensemble transform adaptive importance sampling.
///
/// Each particle proposes once from the kernel centred on it, proposals are
/// weighted against the full kernel mixture, and the resampler returns an
/// equally weighted ensemble. Random draws come from substreams of `seed`
/// keyed by the ensemble's iteration index.
pub fn etais_step<D: LogDensity + ?Sized>(
    ensemble: &WeightedEnsemble,
    target: &D,
    kernel: &ProposalKernel,
    resampler: Resampler,
    seed: u64,
) -> Result<StepOutput> {
    step(
        ensemble,
        target,
        kernel,
        None,
        SpaceTag::Target,
        resampler,
        seed,
    )
}

/// One iteration with transport-map proposals: particles are pushed to the
/// reference space, perturbed there, and pulled back through the map.
/// `space` selects whether resampling happens on the target-space proposals
/// or on their reference-space images.
pub fn tetais_step<D: LogDensity + ?Sized>(
    ensemble: &WeightedEnsemble,
    target: &D,
    kernel: &ProposalKernel,
    map: &TriangularMap,
    space: SpaceTag,
    resampler: Resampler,
    seed: u64,
) -> Result<StepOutput> {
    step(ensemble, target, kernel, Some(map), space, resampler, seed)
}

pub(crate) fn step<D: LogDensity + ?Sized>(
    ensemble: &WeightedEnsemble,
    target: &D,
    kernel: &ProposalKernel,
    map: Option<&TriangularMap>,
    space: SpaceTag,
    resampler: Resampler,
    seed: u64,
) -> Result<StepOutput> {
    if ensemble.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: ensemble.dim(),
        });
    }
    let k = ensemble.iteration as u64;
    let centers: Vec<Vec<f64>> = match map {
        None => ensemble.states.clone(),
        Some(m) => ensemble
            .states
            .par_iter()
            .map(|theta| m.evaluate(theta))
            .collect::<Result<_>>()?,
    };
    struct Draw {
        reference: Vec<f64>,
        theta: Option<Vec<f64>>,
        log_jac: f64,
    }
    let draws: Vec<Draw> = centers
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = substream(seed, k, i as u64);
            let reference = kernel.sample(c, &mut rng);
            let (theta, log_jac) = match map {
                None => (Some(reference.clone()), 0.0),
                Some(m) => match m.invert(&reference) {
                    Ok(theta) => match m.log_jacobian(&theta) {
                        Ok(j) => (Some(theta), j),
                        Err(_) => (None, 0.0),
                    },
                    Err(_) => (None, 0.0),
                },
            };
            Draw {
                reference,
                theta,
                log_jac,
            }
        })
        .collect();
    let failures = draws.iter().filter(|d| d.theta.is_none()).count();
    let valid: Vec<bool> = draws.iter().map(|d| d.theta.is_some()).collect();
    // a failed inversion keeps its parent's position with zero weight
    let proposals: Vec<Vec<f64>> = draws
        .iter()
        .zip(&ensemble.states)
        .map(|(d, parent)| d.theta.clone().unwrap_or_else(|| parent.clone()))
        .collect();
    let reference: Vec<Vec<f64>> = draws.iter().map(|d| d.reference.clone()).collect();
    let log_jac: Vec<f64> = draws.iter().map(|d| d.log_jac).collect();
    let log_weights = weigh(
        &proposals, &reference, &log_jac, &valid, &centers, kernel, target,
    )?;
    let weights = relative_weights(&log_weights);

    let mut rng = substream(seed, k, SHARED_SLOT);
    let states = match (space, map) {
        (SpaceTag::Target, _) => {
            let req = ResampleRequest::new(&proposals, &weights, SpaceTag::Target)?;
            resampler.resample(&req, &mut rng)?
        }
        (SpaceTag::Reference, None) => {
            let req = ResampleRequest::new(&reference, &weights, SpaceTag::Reference)?;
            resampler.resample(&req, &mut rng)?
        }
        (SpaceTag::Reference, Some(m)) => {
            let req = ResampleRequest::new(&reference, &weights, SpaceTag::Reference)?;
            let resampled = resampler.resample(&req, &mut rng)?;
            resampled
                .par_iter()
                .map(|r| {
                    m.invert(r)
                        .unwrap_or_else(|_| nearest_proposal(r, &reference, &weights, &proposals))
                })
                .collect()
        }
    };
    Ok(StepOutput {
        ensemble: WeightedEnsemble::uniform(states, ensemble.iteration + 1)?,
        sample: WeightedEnsemble {
            states: proposals,
            log_weights,
            iteration: ensemble.iteration,
        },
        reference,
        inversion_failures: failures,
    })
}

/// Target-space proposal whose reference image is closest to `r`, among
/// those with positive weight.
fn nearest_proposal(
    r: &[f64],
    reference: &[Vec<f64>],
    weights: &[f64],
    proposals: &[Vec<f64>],
) -> Vec<f64> {
    let dist = |x: &[f64]| x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let best = (0..reference.len())
        .filter(|&i| weights[i] > 0.0)
        .min_by(|&a, &b| dist(&reference[a]).total_cmp(&dist(&reference[b])))
        .expect("at least one positive weight");
    proposals[best].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnDensity, Gaussian};
    use crate::transport::Preconditioner;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn single_component_weight() {
        let kernel = ProposalKernel::isotropic(1, 0.5).unwrap();
        let target = Gaussian::standard(1);
        let lw = mixture_log_weights(&[vec![0.3]], &[vec![-0.2]], &kernel, &target, None).unwrap();
        let expected = target.log_density(&[0.3]) - kernel.log_density(&[0.3], &[-0.2]);
        assert_relative_eq!(lw[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn self_proposal_gives_constant_weights() {
        let kernel = ProposalKernel::isotropic(2, 0.8).unwrap();
        let centers = vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![2.0, 0.5]];
        let (c, k) = (centers.clone(), kernel.clone());
        let chi = FnDensity::new(2, move |x: &[f64]| log_mixture(&[x.to_vec()], &c, &k)[0]);
        let props = vec![
            vec![0.4, 0.1],
            vec![-1.0, 3.0],
            vec![1.5, 1.5],
            vec![0.0, 0.2],
        ];
        let w = mixture_weights(&props, &centers, &kernel, &chi, None).unwrap();
        for x in w {
            assert_relative_eq!(x, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_preconditioned_identity_adds_jacobian() {
        let kernel = ProposalKernel::isotropic(2, 0.3).unwrap();
        let target = FnDensity::new(2, |x: &[f64]| -x[0] - 2.0 * x[1]);
        let map = TriangularMap::identity(2, 3, Preconditioner::Logarithmic).unwrap();
        let props = vec![vec![1.2, 0.7], vec![0.4, 2.0]];
        let centers = vec![vec![0.1, -0.2], vec![0.0, 0.3]];
        let with_map = mixture_log_weights(&props, &centers, &kernel, &target, Some(&map)).unwrap();
        // same computation with log-space proposals and no map
        let logs: Vec<Vec<f64>> = props
            .iter()
            .map(|p| p.iter().map(|v| v.ln()).collect())
            .collect();
        let chi = log_mixture(&logs, &centers, &kernel);
        for i in 0..2 {
            let plain = target.log_density(&props[i]) - chi[i];
            let jac: f64 = props[i].iter().map(|v| v.ln()).sum();
            assert_relative_eq!(with_map[i], plain + jac, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_zero_weights_is_degenerate() {
        let kernel = ProposalKernel::isotropic(1, 1.0).unwrap();
        let target = FnDensity::new(1, |_: &[f64]| f64::NEG_INFINITY);
        assert!(matches!(
            mixture_log_weights(&[vec![0.0]], &[vec![0.0]], &kernel, &target, None),
            Err(Error::DegenerateEnsemble)
        ));
    }

    #[test]
    fn identity_map_step_is_bitwise_plain_step() {
        let target = Gaussian::new(
            vec![1.0, -2.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]),
        )
        .unwrap();
        let kernel = ProposalKernel::isotropic(2, 0.9).unwrap();
        let states: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 * 0.1, -(i as f64) * 0.05])
            .collect();
        let ens = WeightedEnsemble::uniform(states, 7).unwrap();
        let map = TriangularMap::identity(2, 3, Preconditioner::None).unwrap();
        for resampler in [Resampler::Mt, Resampler::Multinomial] {
            let plain = etais_step(&ens, &target, &kernel, resampler, 11).unwrap();
            for space in [SpaceTag::Target, SpaceTag::Reference] {
                let t = tetais_step(&ens, &target, &kernel, &map, space, resampler, 11).unwrap();
                assert_eq!(t.ensemble, plain.ensemble);
                assert_eq!(t.sample, plain.sample);
            }
        }
    }

    #[test]
    fn exact_affine_map_gives_constant_self_weights() {
        // T(θ) = (θ - 3)/2 pushes N(3, 4) onto N(0, 1)
        let sets = vec![crate::transport::MultiIndexSet::total_order(1, 0, 1).unwrap()];
        let map =
            TriangularMap::from_coefficients(1, Preconditioner::None, sets, vec![vec![-1.5, 0.5]])
                .unwrap();
        let target = Gaussian::new(vec![3.0], DMatrix::from_element(1, 1, 4.0)).unwrap();
        let kernel = ProposalKernel::isotropic(1, 1.0).unwrap();
        // with centers at 0 the reference mixture is exactly N(0,1), the pushforward
        let centers = vec![vec![0.0]];
        let props = vec![vec![0.0], vec![2.5], vec![6.0], vec![-1.0]];
        let w = mixture_weights(&props, &centers, &kernel, &target, Some(&map)).unwrap();
        for x in w {
            assert_relative_eq!(x, 1.0, epsilon = 1e-12);
        }
        let pushed: Vec<f64> = props.iter().map(|p| map.evaluate(p).unwrap()[0]).collect();
        assert_eq!(pushed, vec![-1.5, -0.25, 1.5, -2.0]);
    }
}
