//! Per-component map-fitting objective
//! `C(γ) = (1/2w̄) γᵀFᵀWFγ − (wᵀ/w̄) log(Gγ) + β‖γ − ι‖²`, `w̄ = Σ w`,
//! with its exact gradient and Hessian.

use nalgebra::{DMatrix, DVector};

use super::basis::ComponentBasis;
use crate::error::{Error, Result};

fn check_shapes(
    gamma: &[f64],
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    w: &[f64],
    iota: Option<&[f64]>,
) -> Result<f64> {
    let m = gamma.len();
    for cols in [f.ncols(), g.ncols()] {
        if cols != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: cols,
            });
        }
    }
    for rows in [f.nrows(), g.nrows()] {
        if rows != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found: rows,
            });
        }
    }
    if let Some(iota) = iota {
        if iota.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: iota.len(),
            });
        }
    }
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParameter(
            "weights must be non-negative".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "no strictly positive weight".into(),
        ));
    }
    Ok(total)
}

/// Objective value; `+inf` when `(Gγ)_k <= 0` at a sample with positive weight.
pub fn objective(
    gamma: &[f64],
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    w: &[f64],
    beta: f64,
    iota: &[f64],
) -> Result<f64> {
    let total = check_shapes(gamma, f, g, w, Some(iota))?;
    let gv = DVector::from_column_slice(gamma);
    let fg = f * &gv;
    let gg = g * &gv;
    let mut quad = 0.0;
    let mut barrier = 0.0;
    for k in 0..w.len() {
        if w[k] == 0.0 {
            continue;
        }
        if !(gg[k] > 0.0) {
            return Ok(f64::INFINITY);
        }
        quad += w[k] * fg[k] * fg[k];
        barrier += w[k] * gg[k].ln();
    }
    let reg: f64 = gamma.iter().zip(iota).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * quad / total - barrier / total + beta * reg)
}

/// Gradient `(1/w̄)[FᵀWFγ − GᵀW(Gγ)⁻¹] + 2β(γ − ι)`.
pub fn gradient(
    gamma: &[f64],
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    w: &[f64],
    beta: f64,
    iota: &[f64],
) -> Result<DVector<f64>> {
    let total = check_shapes(gamma, f, g, w, Some(iota))?;
    let gv = DVector::from_column_slice(gamma);
    let fg = f * &gv;
    let gg = g * &gv;
    let mut a = DVector::zeros(w.len());
    let mut b = DVector::zeros(w.len());
    for k in 0..w.len() {
        if w[k] == 0.0 {
            continue;
        }
        if !(gg[k] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "G gamma is not positive at sample {k}"
            )));
        }
        a[k] = w[k] * fg[k];
        b[k] = w[k] / gg[k];
    }
    let grad = (f.transpose() * a - g.transpose() * b) / total;
    Ok(grad + (gv - DVector::from_column_slice(iota)) * (2.0 * beta))
}

/// Hessian `(1/w̄)[FᵀWF + GᵀW diag(Gγ)⁻² G] + 2βI`.
pub fn hessian(
    gamma: &[f64],
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    w: &[f64],
    beta: f64,
) -> Result<DMatrix<f64>> {
    let total = check_shapes(gamma, f, g, w, None)?;
    let gv = DVector::from_column_slice(gamma);
    let gg = g * &gv;
    let mut wf = f.clone();
    let mut wg = g.clone();
    for k in 0..w.len() {
        if w[k] != 0.0 && !(gg[k] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "G gamma is not positive at sample {k}"
            )));
        }
        let s = if w[k] == 0.0 {
            0.0
        } else {
            w[k] / (gg[k] * gg[k])
        };
        wf.row_mut(k).scale_mut(w[k]);
        wg.row_mut(k).scale_mut(s);
    }
    let h = (f.transpose() * wf + g.transpose() * wg) / total;
    let m = gamma.len();
    Ok(h + DMatrix::identity(m, m) * (2.0 * beta))
}

/// Objective evaluator over the compact storage of [`ComponentBasis`].
pub(crate) struct ComponentObjective<'a> {
    basis: &'a ComponentBasis,
    weights: &'a [f64],
    /// `FᵀWF / w̄`.
    gram: DMatrix<f64>,
    /// `w / w̄`.
    probs: Vec<f64>,
    beta: f64,
    iota: Vec<f64>,
}

impl<'a> ComponentObjective<'a> {
    pub(crate) fn new(
        basis: &'a ComponentBasis,
        weights: &'a [f64],
        beta: f64,
        iota: Vec<f64>,
    ) -> Self {
        let total: f64 = weights.iter().sum();
        Self {
            basis,
            weights,
            gram: &basis.gram / total,
            probs: weights.iter().map(|w| w / total).collect(),
            beta,
            iota,
        }
    }

    fn active_gamma(&self, gamma: &[f64]) -> Vec<f64> {
        self.basis.active.iter().map(|&c| gamma[c]).collect()
    }

    /// `Gγ` at every sample, or `None` if some entry is not positive.
    pub(crate) fn diagonal(&self, gamma: &[f64]) -> Option<Vec<f64>> {
        let ga = self.active_gamma(gamma);
        let mut out = Vec::with_capacity(self.weights.len());
        for k in 0..self.weights.len() {
            let v: f64 = self
                .basis
                .g_row(k)
                .iter()
                .zip(&ga)
                .map(|(a, b)| a * b)
                .sum();
            if !(v > 0.0) {
                return None;
            }
            out.push(v);
        }
        Some(out)
    }

    /// Largest `t` keeping `G(γ + t s)` positive, given `diag = Gγ`.
    pub(crate) fn max_step(&self, diag: &[f64], step: &[f64]) -> f64 {
        let sa = self.active_gamma(step);
        let mut t_max = f64::INFINITY;
        for (k, d) in diag.iter().enumerate() {
            let rate: f64 = self
                .basis
                .g_row(k)
                .iter()
                .zip(&sa)
                .map(|(a, b)| a * b)
                .sum();
            if rate < 0.0 {
                t_max = t_max.min(-d / rate);
            }
        }
        t_max
    }

    pub(crate) fn value(&self, gamma: &[f64]) -> f64 {
        let Some(diag) = self.diagonal(gamma) else {
            return f64::INFINITY;
        };
        let gv = DVector::from_column_slice(gamma);
        let quad = gv.dot(&(&self.gram * &gv));
        let barrier: f64 = self.probs.iter().zip(&diag).map(|(p, d)| p * d.ln()).sum();
        let reg: f64 = gamma
            .iter()
            .zip(&self.iota)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        0.5 * quad - barrier + self.beta * reg
    }

    /// Gradient and Hessian at a feasible point with its `Gγ` values.
    pub(crate) fn derivatives(&self, gamma: &[f64], diag: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let m = gamma.len();
        let a = self.basis.active.len();
        let gv = DVector::from_column_slice(gamma);
        let mut grad = &self.gram * &gv;
        let mut hess = self.gram.clone();
        let mut g_lin = vec![0.0; a];
        let mut h_act = DMatrix::<f64>::zeros(a, a);
        for k in 0..self.weights.len() {
            let row = self.basis.g_row(k);
            let s = self.probs[k] / diag[k];
            let s2 = s / diag[k];
            for (x, r) in g_lin.iter_mut().zip(row) {
                *x += s * r;
            }
            for q in 0..a {
                let rq = s2 * row[q];
                if rq == 0.0 {
                    continue;
                }
                for p in q..a {
                    h_act[(p, q)] += row[p] * rq;
                }
            }
        }
        for q in 0..a {
            grad[self.basis.active[q]] -= g_lin[q];
            for p in q..a {
                let v = h_act[(p, q)];
                let (ip, iq) = (self.basis.active[p], self.basis.active[q]);
                hess[(ip, iq)] += v;
                if ip != iq {
                    hess[(iq, ip)] += v;
                }
            }
        }
        for j in 0..m {
            grad[j] += 2.0 * self.beta * (gamma[j] - self.iota[j]);
            hess[(j, j)] += 2.0 * self.beta;
        }
        (grad, hess)
    }
}
