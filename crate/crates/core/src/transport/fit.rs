use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::BasisMatrices;
use super::map::{Preconditioner, TriangularMap};
use super::objective::ComponentObjective;
use crate::error::{Error, Result};

/// Settings for [`fit_map`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub order: usize,
    pub beta_reg: f64,
    pub preconditioner: Preconditioner,
    /// Most recent weighted samples kept for fitting.
    pub sample_cap: usize,
    /// Samples lighter than this fraction of the heaviest one are dropped.
    pub weight_floor: f64,
    pub max_iterations: usize,
    /// Stop once half the squared Newton decrement (or, for steps limited
    /// by the barrier, the decrease still reachable along the step) falls
    /// below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            order: 3,
            beta_reg: 1.0,
            preconditioner: Preconditioner::None,
            sample_cap: 200_000,
            weight_floor: 1e-12,
            max_iterations: 50,
            tolerance: 1e-9,
        }
    }
}

/// Newton diagnostics from one map fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: Vec<usize>,
    pub objectives: Vec<f64>,
    pub filtered: usize,
}

const MAX_HALVINGS: usize = 60;
/// Share of the distance to the barrier a single Newton step may cover.
const FRACTION_TO_BOUNDARY: f64 = 0.99;

struct ComponentFit {
    gamma: Vec<f64>,
    iterations: usize,
    objective: f64,
    converged: bool,
}

/// Fits a lower-triangular map to the samples held in `basis`.
///
/// Each component is an independent convex problem solved by damped Newton.
/// `warm_start` coefficients are used where feasible, otherwise the identity.
pub fn fit_map(
    basis: &BasisMatrices,
    options: &FitOptions,
    warm_start: Option<&TriangularMap>,
) -> Result<(TriangularMap, FitReport)> {
    let beta_reg = options.beta_reg;
    if !(beta_reg >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta_reg = {beta_reg}")));
    }
    if options.order != basis.order() || options.preconditioner != basis.preconditioner() {
        return Err(Error::InvalidParameter(
            "fit options do not match the basis".into(),
        ));
    }
    let sets = basis.index_sets();
    if let Some(warm) = warm_start {
        if warm.dim() != basis.dim() || warm.order() != basis.order() {
            return Err(Error::InvalidParameter(
                "warm start does not match the basis".into(),
            ));
        }
    }
    for (i, set) in sets.iter().enumerate() {
        if basis.len() < set.len() {
            return Err(Error::Underdetermined {
                dim: i,
                available: basis.len(),
                required: set.len(),
            });
        }
    }
    let fits: Vec<ComponentFit> = (0..basis.dim())
        .into_par_iter()
        .map(|i| {
            let iota = sets[i].identity_coefficients();
            let problem = ComponentObjective::new(
                &basis.components[i],
                basis.weights(),
                beta_reg,
                iota.clone(),
            );
            let start = warm_start
                .map(|m| m.coefficients()[i].clone())
                .filter(|g| problem.value(g).is_finite())
                .unwrap_or(iota);
            newton(&problem, start, options.max_iterations, options.tolerance)
        })
        .collect();
    let report = FitReport {
        iterations: fits.iter().map(|f| f.iterations).collect(),
        objectives: fits.iter().map(|f| f.objective).collect(),
        filtered: basis.filtered(),
    };
    if let Some(dim) = fits.iter().position(|f| !f.converged) {
        return Err(Error::NotConverged {
            dim,
            report: Box::new(report),
        });
    }
    let map = TriangularMap::from_coefficients(
        basis.order(),
        basis.preconditioner(),
        sets.to_vec(),
        fits.into_iter().map(|f| f.gamma).collect(),
    )?
    .with_hull(basis.hull());
    Ok((map, report))
}

/// Builds the basis for `states`/`weights` and fits a map in one call.
pub fn fit_map_to_samples(
    states: &[Vec<f64>],
    weights: &[f64],
    options: &FitOptions,
    warm_start: Option<&TriangularMap>,
) -> Result<(TriangularMap, FitReport)> {
    let dim = states.first().ok_or(Error::EmptySample)?.len();
    let mut basis = BasisMatrices::new(dim, options.order, options.preconditioner)?
        .with_capacity(options.sample_cap)
        .with_weight_floor(options.weight_floor);
    basis.append(states, weights)?;
    fit_map(&basis, options, warm_start)
}

fn newton(
    problem: &ComponentObjective<'_>,
    start: Vec<f64>,
    max_iterations: usize,
    tolerance: f64,
) -> ComponentFit {
    let mut gamma = start;
    let mut value = problem.value(&gamma);
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let diag = problem
            .diagonal(&gamma)
            .expect("Newton iterate left the feasible region");
        let (grad, hess) = problem.derivatives(&gamma, &diag);
        let Some(step) = newton_step(&hess, &grad) else {
            break;
        };
        let decrement = -grad.dot(&step);
        if !decrement.is_finite() {
            break;
        }
        let t_max = problem.max_step(&diag, step.as_slice());
        // Along the Newton direction the objective can fall by at most
        // `t_max * decrement` before the barrier is hit.
        let reachable = if t_max < 1.0 {
            t_max * decrement
        } else {
            0.5 * decrement
        };
        let mut t = (FRACTION_TO_BOUNDARY * t_max).min(1.0);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = gamma
                .iter()
                .zip(step.iter())
                .map(|(g, s)| g + t * s)
                .collect();
            let v = problem.value(&trial);
            if v < value || (v == value && decrement <= 2.0 * tolerance) {
                accepted = Some((trial, v));
                break;
            }
            t *= 0.5;
        }
        let done = reachable <= tolerance;
        match accepted {
            Some((trial, v)) => {
                gamma = trial;
                value = v;
            }
            None => {
                // no representable decrease left along the Newton direction
                return ComponentFit {
                    gamma,
                    iterations,
                    objective: value,
                    converged: reachable <= tolerance.max(1e-7),
                };
            }
        }
        if done {
            return ComponentFit {
                gamma,
                iterations,
                objective: value,
                converged: true,
            };
        }
    }
    ComponentFit {
        gamma,
        iterations: iterations.max(1),
        objective: value,
        converged: false,
    }
}

/// `-H⁻¹ g` via a Jacobi-scaled Cholesky factorization.
fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale: DVector<f64> = hess
        .diagonal()
        .map(|h| 1.0 / h.max(f64::MIN_POSITIVE).sqrt());
    let mut scaled = hess.clone();
    for c in 0..scaled.ncols() {
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= scale[r] * scale[c];
        }
    }
    let rhs = grad.component_mul(&scale);
    let chol = scaled.cholesky()?;
    let y = chol.solve(&rhs);
    Some(-y.component_mul(&scale))
}
