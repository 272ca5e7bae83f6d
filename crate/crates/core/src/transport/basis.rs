use nalgebra::DMatrix;

use super::index::MultiIndexSet;
use super::map::{monomial, monomial_partial, Preconditioner};
use crate::error::{Error, Result};

/// Basis evaluations for one map component.
#[derive(Debug, Clone)]
pub(crate) struct ComponentBasis {
    /// `K x M_i`, row-major: `psi_j(u_k)`.
    pub(crate) f: Vec<f64>,
    /// Columns of `G_i` that are not identically zero.
    pub(crate) active: Vec<usize>,
    /// `K x active.len()`, row-major: `d psi_j / d u_i (u_k)`.
    pub(crate) g: Vec<f64>,
    /// Running `F^T W F`.
    pub(crate) gram: DMatrix<f64>,
    pub(crate) width: usize,
}

impl ComponentBasis {
    fn new(set: &MultiIndexSet) -> Self {
        let active = set
            .indices()
            .iter()
            .enumerate()
            .filter(|(_, idx)| idx[set.component()] > 0)
            .map(|(k, _)| k)
            .collect();
        Self {
            f: Vec::new(),
            active,
            g: Vec::new(),
            gram: DMatrix::zeros(set.len(), set.len()),
            width: set.len(),
        }
    }

    pub(crate) fn g_row(&self, k: usize) -> &[f64] {
        let a = self.active.len();
        &self.g[k * a..(k + 1) * a]
    }
}

/// Basis matrices `F_i`, `G_i` and Gram accumulators `F_i^T W F_i` for a
/// growing set of weighted samples.
///
/// Weights are held relative to a running log offset so importance weights
/// from different iterations share one scale. Samples whose weight is
/// exactly zero are never stored.
#[derive(Debug, Clone)]
pub struct BasisMatrices {
    order: usize,
    preconditioner: Preconditioner,
    sets: Vec<MultiIndexSet>,
    pub(crate) components: Vec<ComponentBasis>,
    /// Preconditioned sample coordinates, row-major `K x d`.
    points: Vec<f64>,
    pub(crate) weights: Vec<f64>,
    log_offset: f64,
    filtered: usize,
    capacity: Option<usize>,
    floor: f64,
}

impl BasisMatrices {
    pub fn new(dim: usize, order: usize, preconditioner: Preconditioner) -> Result<Self> {
        let sets = (0..dim)
            .map(|i| MultiIndexSet::total_order(dim, i, order))
            .collect::<Result<Vec<_>>>()?;
        let components = sets.iter().map(ComponentBasis::new).collect();
        Ok(Self {
            order,
            preconditioner,
            sets,
            components,
            points: Vec::new(),
            weights: Vec::new(),
            log_offset: f64::NEG_INFINITY,
            filtered: 0,
            capacity: None,
            floor: 0.0,
        })
    }

    /// Keep at most `capacity` of the most recent samples.
    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }

    /// Drop samples whose weight is below `floor` times the largest weight seen.
    pub fn with_weight_floor(mut self, floor: f64) -> Self {
        self.floor = floor.max(0.0);
        self
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

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of samples dropped because their weight was zero.
    pub fn filtered(&self) -> usize {
        self.filtered
    }

    pub fn gram(&self, i: usize) -> &DMatrix<f64> {
        &self.components[i].gram
    }

    /// Dense `F_i`.
    pub fn f_matrix(&self, i: usize) -> DMatrix<f64> {
        let c = &self.components[i];
        DMatrix::from_row_slice(self.len(), c.width, &c.f)
    }

    /// Dense `G_i`, including its identically-zero columns.
    pub fn g_matrix(&self, i: usize) -> DMatrix<f64> {
        let c = &self.components[i];
        let mut g = DMatrix::zeros(self.len(), c.width);
        for k in 0..self.len() {
            for (a, &col) in c.active.iter().enumerate() {
                g[(k, col)] = c.g_row(k)[a];
            }
        }
        g
    }

    /// Preconditioned sample `k`.
    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.points[k * d..(k + 1) * d]
    }

    /// Per-coordinate range of the stored samples in preconditioned space.
    pub fn hull(&self) -> Vec<(f64, f64)> {
        let d = self.dim();
        let mut hull = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for k in 0..self.len() {
            for (h, &x) in hull.iter_mut().zip(self.point(k)) {
                h.0 = h.0.min(x);
                h.1 = h.1.max(x);
            }
        }
        hull
    }

    /// Appends samples with plain non-negative weights.
    pub fn append(&mut self, states: &[Vec<f64>], weights: &[f64]) -> Result<()> {
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        let logs: Vec<f64> = weights
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect();
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("negative or NaN weight".into()));
        }
        self.append_log(states, &logs)
    }

    /// Appends samples given log weights (`-inf` for zero weight).
    pub fn append_log(&mut self, states: &[Vec<f64>], log_weights: &[f64]) -> Result<()> {
        if states.len() != log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: log_weights.len(),
            });
        }
        let d = self.dim();
        let mut prepared = Vec::with_capacity(states.len());
        for (theta, &lw) in states.iter().zip(log_weights) {
            if theta.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: theta.len(),
                });
            }
            if lw.is_nan() {
                return Err(Error::InvalidParameter("NaN log weight".into()));
            }
            if lw == f64::NEG_INFINITY {
                self.filtered += 1;
                continue;
            }
            prepared.push((self.preconditioner.forward(theta)?, lw));
        }
        let new_max = prepared
            .iter()
            .map(|(_, lw)| *lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if new_max > self.log_offset {
            if self.log_offset.is_finite() {
                let scale = (self.log_offset - new_max).exp();
                self.rescale(scale);
            }
            self.log_offset = new_max;
        }
        for (u, lw) in prepared {
            let w = (lw - self.log_offset).exp();
            if w == 0.0 || w < self.floor {
                self.filtered += 1;
                continue;
            }
            self.push_row(&u, w);
        }
        if let Some(cap) = self.capacity {
            if self.len() > cap {
                self.drop_oldest(self.len() - cap);
            }
        }
        Ok(())
    }

    fn rescale(&mut self, scale: f64) {
        for w in &mut self.weights {
            *w *= scale;
        }
        for c in &mut self.components {
            c.gram *= scale;
        }
        if self.weights.iter().any(|&w| w == 0.0 || w < self.floor) {
            self.compact();
        }
    }

    /// Removes rows whose weight fell to zero or below the floor and rebuilds the Gram matrices.
    fn compact(&mut self) {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&k| self.weights[k] > 0.0 && self.weights[k] >= self.floor)
            .collect();
        self.filtered += self.len() - keep.len();
        self.retain_rows(&keep);
    }

    fn drop_oldest(&mut self, n: usize) {
        let keep: Vec<usize> = (n..self.len()).collect();
        self.retain_rows(&keep);
    }

    fn retain_rows(&mut self, keep: &[usize]) {
        let d = self.dim();
        let points: Vec<f64> = keep
            .iter()
            .flat_map(|&k| self.points[k * d..(k + 1) * d].iter().copied())
            .collect();
        let weights: Vec<f64> = keep.iter().map(|&k| self.weights[k]).collect();
        for c in &mut self.components {
            let a = c.active.len();
            c.f = keep
                .iter()
                .flat_map(|&k| c.f[k * c.width..(k + 1) * c.width].iter().copied())
                .collect();
            c.g = keep
                .iter()
                .flat_map(|&k| c.g[k * a..(k + 1) * a].iter().copied())
                .collect();
            c.gram.fill(0.0);
            for (r, &w) in weights.iter().enumerate() {
                let row = &c.f[r * c.width..(r + 1) * c.width];
                rank_one_update(&mut c.gram, row, w);
            }
        }
        self.points = points;
        self.weights = weights;
    }

    fn push_row(&mut self, u: &[f64], w: f64) {
        let pow: Vec<Vec<f64>> = u
            .iter()
            .map(|&x| {
                let mut p = Vec::with_capacity(self.order + 1);
                let mut acc = 1.0;
                for _ in 0..=self.order {
                    p.push(acc);
                    acc *= x;
                }
                p
            })
            .collect();
        for (i, (set, c)) in self.sets.iter().zip(&mut self.components).enumerate() {
            let start = c.f.len();
            c.f.extend(set.indices().iter().map(|idx| monomial(idx, &pow, i)));
            c.g.extend(
                c.active
                    .iter()
                    .map(|&col| monomial_partial(&set.indices()[col], &pow, i)),
            );
            let row = c.f[start..].to_vec();
            rank_one_update(&mut c.gram, &row, w);
        }
        self.points.extend_from_slice(u);
        self.weights.push(w);
    }
}

fn rank_one_update(gram: &mut DMatrix<f64>, row: &[f64], w: f64) {
    let n = row.len();
    for b in 0..n {
        let wb = w * row[b];
        if wb == 0.0 {
            continue;
        }
        for a in b..n {
            let v = row[a] * wb;
            gram[(a, b)] += v;
            if a != b {
                gram[(b, a)] += v;
            }
        }
    }
}
