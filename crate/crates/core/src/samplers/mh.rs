use rand::Rng;

use super::kernel::ProposalKernel;
use crate::error::{Error, Result};
use crate::model::LogDensity;
use crate::transport::TriangularMap;

/// Current state of a Metropolis-Hastings chain with its cached log target.
#[derive(Debug, Clone, PartialEq)]
pub struct MhState {
    pub theta: Vec<f64>,
    pub log_target: f64,
}

impl MhState {
    pub fn new<D: LogDensity + ?Sized>(theta: Vec<f64>, target: &D) -> Result<Self> {
        let log_target = target.log_density(&theta);
        if log_target == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(
                "chain must start where the target is positive".into(),
            ));
        }
        Ok(Self { theta, log_target })
    }
}

/// One random-walk Metropolis-Hastings step. With a map the walk happens in
/// reference coordinates, `r̂ = T(θ) + ξ`, and the pulled-back proposal is
/// accepted with probability `min(1, π(θ̂)|J(θ)| / (π(θ)|J(θ̂)|))`. A proposal
/// the map cannot invert is rejected. Returns the new state and whether the
/// proposal was accepted.
pub fn mh_step<D: LogDensity + ?Sized, R: Rng + ?Sized>(
    state: &MhState,
    target: &D,
    kernel: &ProposalKernel,
    map: Option<&TriangularMap>,
    rng: &mut R,
) -> Result<(MhState, bool)> {
    if state.theta.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: state.theta.len(),
        });
    }
    let (proposal, log_ratio_jac) = match map {
        None => (kernel.sample(&state.theta, rng), 0.0),
        Some(m) => {
            let (r, log_jac) = m.evaluate_with_log_jacobian(&state.theta)?;
            let r_hat = kernel.sample(&r, rng);
            match m
                .invert(&r_hat)
                .and_then(|t| m.log_jacobian(&t).map(|j| (t, j)))
            {
                Ok((theta, log_jac_hat)) => (theta, log_jac - log_jac_hat),
                Err(_) => {
                    // consume the acceptance draw so streams stay aligned
                    let _: f64 = rng.random();
                    return Ok((state.clone(), false));
                }
            }
        }
    };
    let log_target = target.log_density(&proposal);
    let log_alpha = log_target - state.log_target + log_ratio_jac;
    let u: f64 = rng.random();
    if log_target > f64::NEG_INFINITY && u.ln() < log_alpha {
        Ok((
            MhState {
                theta: proposal,
                log_target,
            },
            true,
        ))
    } else {
        Ok((state.clone(), false))
    }
}
