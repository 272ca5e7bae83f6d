use serde::{Deserialize, Serialize};

use super::index::MultiIndexSet;
use super::poly;
use crate::error::{Error, Result};

/// Coordinate transform applied before the polynomial map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    None,
    /// `u = log(theta)`, for strictly positive parameter spaces.
    Logarithmic,
}

impl Preconditioner {
    /// Maps a target-space point into the space the polynomial acts on.
    pub fn forward(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self {
            Preconditioner::None => Ok(theta.to_vec()),
            Preconditioner::Logarithmic => theta
                .iter()
                .enumerate()
                .map(|(dim, &t)| {
                    if t > 0.0 {
                        Ok(t.ln())
                    } else {
                        Err(Error::OutsideLogDomain { dim })
                    }
                })
                .collect(),
        }
    }

    pub fn backward(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::None => u.to_vec(),
            Preconditioner::Logarithmic => u.iter().map(|v| v.exp()).collect(),
        }
    }

    /// `log |d u / d theta|`.
    pub fn log_jacobian(&self, theta: &[f64]) -> f64 {
        match self {
            Preconditioner::None => 0.0,
            Preconditioner::Logarithmic => -theta.iter().map(|t| t.ln()).sum::<f64>(),
        }
    }
}

/// Lower-triangular monomial transport map `r = T(u(theta))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMap {
    order: usize,
    preconditioner: Preconditioner,
    sets: Vec<MultiIndexSet>,
    coefficients: Vec<Vec<f64>>,
    /// Per-coordinate sample range in `u`-space, used to bracket inversion.
    hull: Option<Vec<(f64, f64)>>,
    identity: bool,
}

impl TriangularMap {
    pub fn identity(dim: usize, order: usize, preconditioner: Preconditioner) -> Result<Self> {
        let sets = (0..dim)
            .map(|i| MultiIndexSet::total_order(dim, i, order))
            .collect::<Result<Vec<_>>>()?;
        let coefficients = sets
            .iter()
            .map(MultiIndexSet::identity_coefficients)
            .collect();
        Ok(Self {
            order,
            preconditioner,
            sets,
            coefficients,
            hull: None,
            identity: true,
        })
    }

    pub fn from_coefficients(
        order: usize,
        preconditioner: Preconditioner,
        sets: Vec<MultiIndexSet>,
        coefficients: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = sets.len();
        if coefficients.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coefficients.len(),
            });
        }
        for (i, (set, gamma)) in sets.iter().zip(&coefficients).enumerate() {
            if set.dim() != dim || set.component() != i || set.order() != order {
                return Err(Error::InvalidParameter(format!(
                    "index set {i} does not belong to a {dim}-dimensional map"
                )));
            }
            if gamma.len() != set.len() {
                return Err(Error::DimensionMismatch {
                    expected: set.len(),
                    found: gamma.len(),
                });
            }
        }
        let mut map = Self {
            order,
            preconditioner,
            sets,
            coefficients,
            hull: None,
            identity: false,
        };
        map.identity = map.coefficients_are_identity();
        Ok(map)
    }

    fn coefficients_are_identity(&self) -> bool {
        self.sets
            .iter()
            .zip(&self.coefficients)
            .all(|(set, gamma)| {
                set.identity_position().is_some() && *gamma == set.identity_coefficients()
            })
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn preconditioner(&self) -> Preconditioner {
        self.preconditioner
    }

    pub fn index_sets(&self) -> &[MultiIndexSet] {
        &self.sets
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn hull(&self) -> Option<&[(f64, f64)]> {
        self.hull.as_deref()
    }

    pub fn with_hull(mut self, hull: Vec<(f64, f64)>) -> Self {
        self.hull = Some(hull);
        self
    }

    #[cfg(test)]
    pub(crate) fn set_component(&mut self, i: usize, gamma: Vec<f64>) {
        self.coefficients[i] = gamma;
        self.identity = self.coefficients_are_identity();
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn powers(&self, u: &[f64]) -> Vec<Vec<f64>> {
        u.iter()
            .map(|&x| {
                let mut p = Vec::with_capacity(self.order + 1);
                let mut acc = 1.0;
                for _ in 0..=self.order {
                    p.push(acc);
                    acc *= x;
                }
                p
            })
            .collect()
    }

    fn component_value(&self, i: usize, pow: &[Vec<f64>]) -> f64 {
        self.sets[i]
            .indices()
            .iter()
            .zip(&self.coefficients[i])
            .map(|(idx, &g)| g * monomial(idx, pow, i))
            .sum()
    }

    fn diagonal_partial(&self, i: usize, pow: &[Vec<f64>]) -> f64 {
        self.sets[i]
            .indices()
            .iter()
            .zip(&self.coefficients[i])
            .map(|(idx, &g)| g * monomial_partial(idx, pow, i))
            .sum()
    }

    /// Polynomial map applied to an already preconditioned point.
    pub fn evaluate_reference(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        if self.identity {
            return Ok(u.to_vec());
        }
        let pow = self.powers(u);
        Ok((0..self.dim())
            .map(|i| self.component_value(i, &pow))
            .collect())
    }

    /// `r = T(u(theta))`.
    pub fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(theta)?;
        let u = self.preconditioner.forward(theta)?;
        self.evaluate_reference(&u)
    }

    /// `log |J(theta)|`, including the preconditioner's Jacobian.
    pub fn log_jacobian(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        let u = self.preconditioner.forward(theta)?;
        let poly = if self.identity {
            0.0
        } else {
            let pow = self.powers(&u);
            let mut total = 0.0;
            for i in 0..self.dim() {
                let d = self.diagonal_partial(i, &pow);
                if !(d > 0.0) {
                    return Err(Error::NonMonotone { dim: i });
                }
                total += d.ln();
            }
            total
        };
        Ok(poly + self.preconditioner.log_jacobian(theta))
    }

    /// Evaluates the map and its log-Jacobian together.
    pub fn evaluate_with_log_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        Ok((self.evaluate(theta)?, self.log_jacobian(theta)?))
    }

    /// Solves `T(u(theta)) = r` one coordinate at a time.
    pub fn invert(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(r)?;
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("map inversion target"));
        }
        if self.identity {
            return Ok(self.preconditioner.backward(r));
        }
        let d = self.dim();
        let mut u = vec![0.0; d];
        let mut pow: Vec<Vec<f64>> = vec![vec![1.0; self.order + 1]; d];
        for i in 0..d {
            let coeffs = self.univariate(i, &pow);
            let mut shifted = coeffs;
            shifted[0] -= r[i];
            let tol = 1e-10 * (1.0 + r[i].abs());
            let (lo, hi) = self.hull.as_ref().map_or((-1.0, 1.0), |h| h[i]);
            u[i] = solve_component(&shifted, lo, hi, tol)
                .map_err(|reason| Error::InversionFailure { dim: i, reason })?;
            let mut acc = 1.0;
            for e in 0..=self.order {
                pow[i][e] = acc;
                acc *= u[i];
            }
        }
        Ok(self.preconditioner.backward(&u))
    }

    /// Coefficients of `T_i` as a polynomial in `u_i` with `u_0..u_{i-1}` fixed.
    fn univariate(&self, i: usize, pow: &[Vec<f64>]) -> Vec<f64> {
        let mut c = vec![0.0; self.order + 1];
        for (idx, &g) in self.sets[i].indices().iter().zip(&self.coefficients[i]) {
            let lower: f64 = idx[..i]
                .iter()
                .enumerate()
                .map(|(k, &e)| pow[k][e as usize])
                .product();
            c[idx[i] as usize] += g * lower;
        }
        c
    }

    pub fn to_record(&self) -> MapRecord {
        MapRecord {
            dim: self.dim(),
            order: self.order,
            preconditioner: self.preconditioner,
            indices: self.sets.iter().map(|s| s.indices().to_vec()).collect(),
            coefficients: self.coefficients.clone(),
            hull: self.hull.clone(),
        }
    }

    pub fn from_record(record: MapRecord) -> Result<Self> {
        if record.indices.len() != record.dim {
            return Err(Error::DimensionMismatch {
                expected: record.dim,
                found: record.indices.len(),
            });
        }
        let sets = record
            .indices
            .into_iter()
            .enumerate()
            .map(|(i, idx)| MultiIndexSet::from_indices(record.dim, i, record.order, idx))
            .collect::<Result<Vec<_>>>()?;
        let mut map = Self::from_coefficients(
            record.order,
            record.preconditioner,
            sets,
            record.coefficients,
        )?;
        map.hull = record.hull;
        Ok(map)
    }
}

#[inline]
pub(crate) fn monomial(idx: &[u32], pow: &[Vec<f64>], upto: usize) -> f64 {
    let mut v = 1.0;
    for k in 0..=upto {
        let e = idx[k] as usize;
        if e != 0 {
            v *= pow[k][e];
        }
    }
    v
}

#[inline]
pub(crate) fn monomial_partial(idx: &[u32], pow: &[Vec<f64>], i: usize) -> f64 {
    let ei = idx[i] as usize;
    if ei == 0 {
        return 0.0;
    }
    let mut v = ei as f64 * pow[i][ei - 1];
    for k in 0..i {
        let e = idx[k] as usize;
        if e != 0 {
            v *= pow[k][e];
        }
    }
    v
}

const MAX_DOUBLINGS: usize = 10;

fn solve_component(
    coeffs: &[f64],
    lo: f64,
    hi: f64,
    tol: f64,
) -> std::result::Result<f64, &'static str> {
    // start from the sample range and grow each end separately while the
    // polynomial is still increasing there
    let mut step = (hi - lo).max(1e-8);
    let (mut a, mut b) = if hi > lo {
        (lo, hi)
    } else {
        (lo - step, hi + step)
    };
    let (mut fa, mut fb) = (poly::eval(coeffs, a), poly::eval(coeffs, b));
    let mut doublings = 0;
    while fa > 0.0 || fb < 0.0 {
        if doublings == MAX_DOUBLINGS {
            return Err("no sign change within bracket");
        }
        if fa > 0.0 {
            if poly::eval_with_derivative(coeffs, a).1 <= 0.0 {
                return Err("map not increasing below the bracket");
            }
            a -= step;
            fa = poly::eval(coeffs, a);
        }
        if fb < 0.0 {
            if poly::eval_with_derivative(coeffs, b).1 <= 0.0 {
                return Err("map not increasing above the bracket");
            }
            b += step;
            fb = poly::eval(coeffs, b);
        }
        step *= 2.0;
        doublings += 1;
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if poly::count_roots(coeffs, a, b) > 1 {
        return Err("multiple roots in bracket");
    }
    let t = poly::solve_bracketed(coeffs, a, b, tol * 1e-3);
    if poly::eval(coeffs, t).abs() > tol {
        return Err("root-finding tolerance not reached");
    }
    Ok(t)
}

/// Serializable form of a fitted map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub dim: usize,
    pub order: usize,
    pub preconditioner: Preconditioner,
    pub indices: Vec<Vec<Vec<u32>>>,
    pub coefficients: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<Vec<(f64, f64)>>,
}
