//! Sample-quality metrics: effective sample size, histogram L² error,
//! Mahalanobis convergence curves and importance-sampling evidence.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogDensity;
use crate::samplers::WeightedEnsemble;

/// `(Σw)² / Σw²`.
pub fn ess(weights: &[f64]) -> f64 {
    let (s, s2) = weights
        .iter()
        .fold((0.0, 0.0), |(s, s2), &w| (s + w, s2 + w * w));
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// [`ess`] from log weights, stable for any offset.
pub fn ess_from_log_weights(log_weights: &[f64]) -> f64 {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let w: Vec<f64> = log_weights.iter().map(|v| (v - max).exp()).collect();
    ess(&w)
}

/// Standard error of an overall mean from the means of `B` contiguous,
/// equally sized batches: `sd(batch means) / √B`. Needs at least two batches.
pub fn batch_means_std_error(batch_means: &[f64]) -> Result<f64> {
    let b = batch_means.len();
    if b < 2 {
        return Err(Error::EmptySample);
    }
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok((var / b as f64).sqrt())
}

/// Quantile `q ∈ [0, 1]` of a weighted scalar sample (inverse of the
/// weighted empirical CDF).
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            found: weights.len(),
        });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile {q}")));
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::EmptySample);
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = order.iter().map(|&i| weights[i]).sum();
    let target = q * total;
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= target {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().expect("non-empty")])
}

/// Mode of a weighted scalar sample: the centre of the heaviest of `bins`
/// equal-width bins spanning the central 99% of the weight.
pub fn weighted_mode(values: &[f64], weights: &[f64], bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::InvalidParameter("zero bins".into()));
    }
    let lo = weighted_quantile(values, weights, 0.005)?;
    let hi = weighted_quantile(values, weights, 0.995)?;
    if !(hi > lo) {
        return Ok(lo);
    }
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    for (&v, &w) in values.iter().zip(weights) {
        if w > 0.0 && (lo..=hi).contains(&v) {
            mass[(((v - lo) / width) as usize).min(bins - 1)] += w;
        }
    }
    let best = (0..bins)
        .max_by(|&a, &b| mass[a].total_cmp(&mass[b]))
        .expect("bins > 0");
    Ok(lo + (best as f64 + 0.5) * width)
}

/// Regular grid of histogram bins on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bins: Vec<usize>,
}

impl HistogramSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != bins.len() || lower.is_empty() {
            return Err(Error::InvalidParameter(
                "histogram bounds and bins disagree".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(b > a)) || bins.contains(&0) {
            return Err(Error::InvalidParameter("empty histogram box".into()));
        }
        Ok(Self { lower, upper, bins })
    }

    pub fn dim(&self) -> usize {
        self.bins.len()
    }

    pub fn n_bins(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|c| (self.upper[c] - self.lower[c]) / self.bins[c] as f64)
            .collect()
    }

    /// Volume of one bin.
    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    /// Flat (row-major, last coordinate fastest) index of the bin holding `x`.
    pub fn bin_index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for c in 0..self.dim() {
            if !(x[c] >= self.lower[c] && x[c] < self.upper[c]) {
                return None;
            }
            let width = (self.upper[c] - self.lower[c]) / self.bins[c] as f64;
            let b = (((x[c] - self.lower[c]) / width) as usize).min(self.bins[c] - 1);
            idx = idx * self.bins[c] + b;
        }
        Some(idx)
    }

    fn bin_lower(&self, flat: usize) -> Vec<f64> {
        let widths = self.widths();
        let mut rest = flat;
        let mut corner = vec![0.0; self.dim()];
        for c in (0..self.dim()).rev() {
            let b = rest % self.bins[c];
            rest /= self.bins[c];
            corner[c] = self.lower[c] + b as f64 * widths[c];
        }
        corner
    }

    /// Fraction of the total weight falling in each bin, plus the fraction outside the box.
    pub fn bin_masses(&self, states: &[Vec<f64>], weights: &[f64]) -> Result<(Vec<f64>, f64)> {
        if states.is_empty() {
            return Err(Error::EmptySample);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateEnsemble);
        }
        let mut masses = vec![0.0; self.n_bins()];
        let mut outside = 0.0;
        for (x, w) in states.iter().zip(weights) {
            match self.bin_index(x) {
                Some(b) => masses[b] += w / total,
                None => outside += w / total,
            }
        }
        Ok((masses, outside))
    }
}

/// Probability of each bin under a density, by 5-point tensor Gauss-Legendre
/// quadrature per bin.
pub fn bin_probabilities<D: LogDensity + ?Sized>(density: &D, spec: &HistogramSpec) -> Vec<f64> {
    use rayon::prelude::*;
    let (nodes, weights) = gauss_legendre_5();
    let widths = spec.widths();
    let d = spec.dim();
    let points = 5usize.pow(d as u32);
    (0..spec.n_bins())
        .into_par_iter()
        .map(|b| {
            let corner = spec.bin_lower(b);
            let mut total = 0.0;
            let mut x = vec![0.0; d];
            for q in 0..points {
                let mut rest = q;
                let mut w = 1.0;
                for c in 0..d {
                    let n = rest % 5;
                    rest /= 5;
                    x[c] = corner[c] + widths[c] * 0.5 * (1.0 + nodes[n]);
                    w *= 0.5 * weights[n];
                }
                total += w * density.log_density(&x).exp();
            }
            total * spec.volume()
        })
        .collect()
}

pub(crate) fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
    ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
}

/// Relative L² histogram error and the sample mass that fell outside the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Error {
    pub error: f64,
    pub outside_mass: f64,
}

/// `E² = Σ (P_i − v B_i)² / Σ P_i²`, where `P_i` are the true bin
/// probabilities and `v B_i` the weighted sample fraction in bin `i`.
pub fn histogram_l2_error(
    states: &[Vec<f64>],
    weights: &[f64],
    truth: &[f64],
    spec: &HistogramSpec,
) -> Result<L2Error> {
    if truth.len() != spec.n_bins() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_bins(),
            found: truth.len(),
        });
    }
    let (masses, outside) = spec.bin_masses(states, weights)?;
    let num: f64 = truth
        .iter()
        .zip(&masses)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    let den: f64 = truth.iter().map(|p| p * p).sum();
    Ok(L2Error {
        error: (num / den).sqrt(),
        outside_mass: outside,
    })
}

/// `sqrt((m − μ)ᵀ Σ⁻¹ (m − μ))`.
pub fn mahalanobis_distance(m: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    let chol = sigma.clone().cholesky().ok_or(Error::SingularCovariance)?;
    Ok(mahalanobis_with(&chol, m, mu))
}

fn mahalanobis_with(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, m: &[f64], mu: &[f64]) -> f64 {
    let diff = DVector::from_iterator(m.len(), m.iter().zip(mu).map(|(a, b)| a - b));
    let z = chol
        .l()
        .solve_lower_triangular(&diff)
        .expect("Cholesky factor has a positive diagonal");
    z.norm()
}

/// Mahalanobis distance of running means to `mu`, averaged over repeats.
/// `running_means[r][j]` is repeat `r`'s running mean at checkpoint `j`.
pub fn mahalanobis_convergence(
    running_means: &[Vec<Vec<f64>>],
    mu: &[f64],
    sigma: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let chol = sigma.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let first = running_means.first().ok_or(Error::EmptySample)?;
    let n = first.len();
    if running_means.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter(
            "repeats have different checkpoint counts".into(),
        ));
    }
    let reps = running_means.len() as f64;
    Ok((0..n)
        .map(|j| {
            running_means
                .iter()
                .map(|r| mahalanobis_with(&chol, &r[j], mu))
                .sum::<f64>()
                / reps
        })
        .collect())
}

/// Geometric checkpoints with `per_decade` points per factor of ten, from 1
/// to `max` inclusive, deduplicated after rounding.
pub fn checkpoints(max: usize, per_decade: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if max == 0 {
        return out;
    }
    let mut j = 0usize;
    loop {
        let n = 10f64.powf(j as f64 / per_decade as f64).round() as usize;
        if n > max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        j += 1;
    }
    if out.last() != Some(&max) {
        out.push(max);
    }
    out
}

/// Running weighted mean of a stream of weighted samples, recorded at given
/// sample counts. Weights are pooled through their logs.
#[derive(Debug, Clone)]
pub struct RunningMean {
    sum: Vec<f64>,
    total: f64,
    log_offset: f64,
    count: usize,
    checkpoints: Vec<usize>,
    next: usize,
    recorded: Vec<Vec<f64>>,
}

impl RunningMean {
    pub fn new(dim: usize, checkpoints: Vec<usize>) -> Self {
        Self {
            sum: vec![0.0; dim],
            total: 0.0,
            log_offset: f64::NEG_INFINITY,
            count: 0,
            checkpoints,
            next: 0,
            recorded: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], log_weight: f64) {
        if log_weight > self.log_offset {
            if self.log_offset.is_finite() {
                let scale = (self.log_offset - log_weight).exp();
                self.sum.iter_mut().for_each(|s| *s *= scale);
                self.total *= scale;
            }
            self.log_offset = log_weight;
        }
        if log_weight > f64::NEG_INFINITY {
            let w = (log_weight - self.log_offset).exp();
            for (s, v) in self.sum.iter_mut().zip(x) {
                *s += w * v;
            }
            self.total += w;
        }
        self.count += 1;
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] == self.count {
            self.recorded.push(self.mean());
            self.next += 1;
        }
    }

    pub fn push_ensemble(&mut self, sample: &WeightedEnsemble) {
        for (x, lw) in sample.states.iter().zip(&sample.log_weights) {
            self.push(x, *lw);
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.total).collect()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Means at the checkpoints reached so far.
    pub fn recorded(&self) -> &[Vec<f64>] {
        &self.recorded
    }
}

/// Weighted histogram of a stream of samples, with weights pooled through
/// their logs as in [`RunningMean`].
#[derive(Debug, Clone)]
pub struct RunningHistogram {
    spec: HistogramSpec,
    mass: Vec<f64>,
    outside: f64,
    log_offset: f64,
}

impl RunningHistogram {
    pub fn new(spec: HistogramSpec) -> Self {
        let n = spec.n_bins();
        Self {
            spec,
            mass: vec![0.0; n],
            outside: 0.0,
            log_offset: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, x: &[f64], log_weight: f64) {
        if log_weight == f64::NEG_INFINITY {
            return;
        }
        if log_weight > self.log_offset {
            if self.log_offset.is_finite() {
                let scale = (self.log_offset - log_weight).exp();
                self.mass.iter_mut().for_each(|m| *m *= scale);
                self.outside *= scale;
            }
            self.log_offset = log_weight;
        }
        let w = (log_weight - self.log_offset).exp();
        match self.spec.bin_index(x) {
            Some(b) => self.mass[b] += w,
            None => self.outside += w,
        }
    }

    /// Relative L² error against true bin probabilities `truth`.
    pub fn l2_error(&self, truth: &[f64]) -> Result<L2Error> {
        if truth.len() != self.mass.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mass.len(),
                found: truth.len(),
            });
        }
        let total = self.mass.iter().sum::<f64>() + self.outside;
        if !(total > 0.0) {
            return Err(Error::EmptySample);
        }
        let num: f64 = truth
            .iter()
            .zip(&self.mass)
            .map(|(p, m)| (p - m / total).powi(2))
            .sum();
        let den: f64 = truth.iter().map(|p| p * p).sum();
        Ok(L2Error {
            error: (num / den).sqrt(),
            outside_mass: self.outside / total,
        })
    }
}

/// Evidence estimate with a jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub log_evidence: f64,
    /// Standard error of the evidence divided by the evidence.
    pub relative_std_error: f64,
}

impl EvidenceEstimate {
    pub fn evidence(&self) -> f64 {
        self.log_evidence.exp()
    }

    pub fn std_error(&self) -> f64 {
        self.relative_std_error * self.evidence()
    }
}

/// Importance-sampling evidence `Ẑ = mean_k w_k` from unnormalized log
/// weights `log w_k = log L(θ_k) + log π₀(θ_k) − log q(θ_k)`, given in
/// blocks (for example one block per iteration). The standard error is the
/// delete-one-block jackknife.
pub fn marginal_likelihood(blocks: &[Vec<f64>]) -> Result<EvidenceEstimate> {
    let blocks: Vec<&Vec<f64>> = blocks.iter().filter(|b| !b.is_empty()).collect();
    if blocks.is_empty() {
        return Err(Error::EmptySample);
    }
    let max = blocks
        .iter()
        .flat_map(|b| b.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::DegenerateEnsemble);
    }
    let sums: Vec<(f64, usize)> = blocks
        .iter()
        .map(|b| (b.iter().map(|v| (v - max).exp()).sum::<f64>(), b.len()))
        .collect();
    let total: f64 = sums.iter().map(|s| s.0).sum();
    let count: usize = sums.iter().map(|s| s.1).sum();
    let mean = total / count as f64;
    let nb = sums.len();
    let relative_std_error = if nb > 1 {
        let loo: Vec<f64> = sums
            .iter()
            .map(|(s, n)| (total - s) / (count - n) as f64)
            .collect();
        let loo_mean = loo.iter().sum::<f64>() / nb as f64;
        let var =
            (nb as f64 - 1.0) / nb as f64 * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
        var.sqrt() / mean
    } else {
        f64::NAN
    };
    Ok(EvidenceEstimate {
        log_evidence: max + mean.ln(),
        relative_std_error,
    })
}

/// Per-sample log importance weights `log L + log π₀ − log q`.
pub fn importance_log_weights(
    log_likelihood: &[f64],
    log_prior: &[f64],
    log_proposal: &[f64],
) -> Result<Vec<f64>> {
    if log_likelihood.len() != log_prior.len() || log_prior.len() != log_proposal.len() {
        return Err(Error::DimensionMismatch {
            expected: log_likelihood.len(),
            found: log_proposal.len(),
        });
    }
    Ok(log_likelihood
        .iter()
        .zip(log_prior)
        .zip(log_proposal)
        .map(|((l, p), q)| {
            let v = l + p - q;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect())
}

/// `Z_a / Z_b`.
pub fn bayes_factor(a: &EvidenceEstimate, b: &EvidenceEstimate) -> f64 {
    (a.log_evidence - b.log_evidence).exp()
}

/// One row of a metric series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n: usize,
    pub metric: String,
    pub value: f64,
    pub repeat: usize,
}

/// Writes `N, metric, value, repeat` rows.
pub fn write_metrics_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "metric", "value", "repeat"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.metric.clone(),
            format!("{:.16e}", r.value),
            r.repeat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnDensity, RosenbrockDensity};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn batch_means_of_constant_batches() {
        assert_eq!(batch_means_std_error(&[2.0; 10]).unwrap(), 0.0);
        let se = batch_means_std_error(&[1.0, 3.0]).unwrap();
        assert_relative_eq!(se, 1.0, epsilon = 1e-12);
        assert!(batch_means_std_error(&[1.0]).is_err());
    }

    #[test]
    fn weighted_quantile_examples() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(weighted_quantile(&v, &[1.0; 4], 0.5).unwrap(), 2.0);
        assert_eq!(
            weighted_quantile(&v, &[0.0, 0.0, 0.0, 1.0], 0.1).unwrap(),
            4.0
        );
        assert_eq!(
            weighted_quantile(&v, &[1.0, 1.0, 5.0, 1.0], 0.5).unwrap(),
            2.0
        );
        assert_eq!(weighted_quantile(&v, &[1.0; 4], 0.0).unwrap(), 1.0);
        assert!(weighted_quantile(&v, &[0.0; 4], 0.5).is_err());
    }

    #[test]
    fn weighted_mode_finds_heavy_region() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let weights: Vec<f64> = values
            .iter()
            .map(|v| (-(v - 0.3f64).powi(2) * 200.0).exp())
            .collect();
        let mode = weighted_mode(&values, &weights, 40).unwrap();
        assert!((mode - 0.3).abs() < 0.02, "mode {mode}");
    }

    #[test]
    fn running_histogram_matches_batch_error() {
        let spec = HistogramSpec::new(vec![0.0], vec![1.0], vec![4]).unwrap();
        let states: Vec<Vec<f64>> = [0.1, 0.3, 0.6, 0.9, 1.5].iter().map(|v| vec![*v]).collect();
        let lw = [0.0, -1.0, 2.0, -0.5, 0.3];
        let mut running = RunningHistogram::new(spec.clone());
        for (x, w) in states.iter().zip(&lw) {
            running.push(x, *w);
        }
        let w: Vec<f64> = lw.iter().map(|v: &f64| v.exp()).collect();
        let truth = [0.25; 4];
        let a = running.l2_error(&truth).unwrap();
        let b = histogram_l2_error(&states, &w, &truth, &spec).unwrap();
        assert_relative_eq!(a.error, b.error, epsilon = 1e-12);
        assert_relative_eq!(a.outside_mass, b.outside_mass, epsilon = 1e-12);
    }

    #[test]
    fn ess_examples() {
        assert_relative_eq!(ess(&[1.0; 150]), 150.0, epsilon = 1e-9);
        assert_eq!(ess(&[0.0, 3.0, 0.0]), 1.0);
        assert_relative_eq!(ess(&[2.0, 1.0, 1.0]), 16.0 / 6.0);
        assert_relative_eq!(ess(&[4.0, 2.0, 2.0]), 16.0 / 6.0);
        assert_relative_eq!(ess_from_log_weights(&[1000.0, 1000.0]), 2.0);
    }

    #[test]
    fn histogram_exact_match_and_concentrated_sample() {
        let spec = HistogramSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 5]).unwrap();
        let n = spec.n_bins();
        let uniform = FnDensity::new(2, |_: &[f64]| 0.0);
        let truth = bin_probabilities(&uniform, &spec);
        for p in &truth {
            assert_relative_eq!(*p, 1.0 / n as f64, epsilon = 1e-12);
        }
        // one point at the centre of every bin reproduces the truth
        let w = spec.widths();
        let mut states = Vec::new();
        for a in 0..4 {
            for b in 0..5 {
                states.push(vec![(a as f64 + 0.5) * w[0], (b as f64 + 0.5) * w[1]]);
            }
        }
        let e = histogram_l2_error(&states, &vec![1.0; n], &truth, &spec).unwrap();
        assert!(e.error < 1e-12);
        let one = vec![vec![0.1, 0.1]; 7];
        let e = histogram_l2_error(&one, &[1.0; 7], &truth, &spec).unwrap();
        assert_relative_eq!(e.error, ((n - 1) as f64).sqrt(), epsilon = 1e-12);
        assert!(histogram_l2_error(&[], &[], &truth, &spec).is_err());
    }

    #[test]
    fn rosenbrock_oracle_histogram() {
        let spec = HistogramSpec::new(vec![-2.0, -1.0], vec![3.0, 8.0], vec![100, 100]).unwrap();
        let truth = bin_probabilities(&RosenbrockDensity, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let states: Vec<Vec<f64>> = (0..1_000_000)
            .map(|_| RosenbrockDensity.sample(&mut rng).to_vec())
            .collect();
        let big = histogram_l2_error(&states, &vec![1.0; states.len()], &truth, &spec).unwrap();
        assert!(big.error <= 0.05, "E = {}", big.error);
        let small =
            histogram_l2_error(&states[..10_000], &vec![1.0; 10_000], &truth, &spec).unwrap();
        assert!(small.error > big.error);
        let scaled =
            histogram_l2_error(&states[..10_000], &vec![3.7; 10_000], &truth, &spec).unwrap();
        assert_relative_eq!(scaled.error, small.error, epsilon = 1e-12);
    }

    #[test]
    fn mahalanobis_examples() {
        let sigma = DMatrix::identity(2, 2);
        assert_eq!(
            mahalanobis_distance(&[1.0, 2.0], &[1.0, 2.0], &sigma).unwrap(),
            0.0
        );
        assert_relative_eq!(
            mahalanobis_distance(&[1.0, 0.0], &[0.0, 0.0], &sigma).unwrap(),
            1.0
        );
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            mahalanobis_distance(&[0.0, 0.0], &[0.0, 0.0], &singular),
            Err(Error::SingularCovariance)
        ));
        // affine invariance
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[1.5, -0.4, 0.2, 3.0]);
        let (m, mu) = (
            DVector::from_vec(vec![0.7, -0.2]),
            DVector::from_vec(vec![0.1, 0.4]),
        );
        let d1 = mahalanobis_distance(m.as_slice(), mu.as_slice(), &s).unwrap();
        let (am, amu) = (&a * &m, &a * &mu);
        let d2 = mahalanobis_distance(am.as_slice(), amu.as_slice(), &(&a * &s * a.transpose()))
            .unwrap();
        assert_relative_eq!(d1, d2, epsilon = 1e-12);
    }

    #[test]
    fn iid_running_mean_decays_at_root_n() {
        let cps = checkpoints(1_000_000, 20);
        let reps = 8;
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let l = sigma.clone().cholesky().unwrap().l();
        let means: Vec<Vec<Vec<f64>>> = (0..reps)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(r);
                let mut rm = RunningMean::new(2, cps.clone());
                for _ in 0..1_000_000 {
                    let z = DVector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
                    let x = &l * z;
                    rm.push(x.as_slice(), 0.0);
                }
                rm.recorded().to_vec()
            })
            .collect();
        let curve = mahalanobis_convergence(&means, &[0.0, 0.0], &sigma).unwrap();
        let pts: Vec<(f64, f64)> = cps
            .iter()
            .zip(&curve)
            .filter(|(n, _)| **n >= 1000)
            .map(|(n, d)| ((*n as f64).ln(), d.ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn checkpoint_schedule() {
        let c = checkpoints(1000, 20);
        assert_eq!(c[0], 1);
        assert_eq!(*c.last().unwrap(), 1000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        let above_100 = c.iter().filter(|&&n| n >= 100).count();
        assert_eq!(above_100, 21);
    }

    #[test]
    fn constant_likelihood_gives_constant_evidence() {
        let c: f64 = 0.37;
        let log_prior = [-1.0, -2.5, -0.3, -4.0];
        let lw = importance_log_weights(&[c.ln(); 4], &log_prior, &log_prior).unwrap();
        let est = marginal_likelihood(&[lw[..2].to_vec(), lw[2..].to_vec()]).unwrap();
        assert_relative_eq!(est.evidence(), c, epsilon = 1e-15);
        assert!(est.relative_std_error.abs() < 1e-15);
    }

    #[test]
    fn gamma_poisson_evidence_matches_closed_form() {
        // λ ~ Gamma(a, b), y_1..y_n ~ Poisson(λ); proposal = prior
        use statrs::function::gamma::ln_gamma;
        let (a, b) = (3.0, 2.0);
        let ys = [1.0, 2.0, 0.0, 3.0, 1.0];
        let (n, s) = (ys.len() as f64, ys.iter().sum::<f64>());
        let log_fact: f64 = ys.iter().map(|y| ln_gamma(y + 1.0)).sum();
        let exact =
            a * f64::ln(b) - ln_gamma(a) + ln_gamma(a + s) - (a + s) * (b + n).ln() - log_fact;
        let prior = crate::model::GammaPrior::new(a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let blocks: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                (0..2000)
                    .map(|_| {
                        let lam = prior.sample(&mut rng);
                        s * lam.ln() - n * lam - log_fact
                    })
                    .collect()
            })
            .collect();
        let est = marginal_likelihood(&blocks).unwrap();
        let diff = (est.evidence() - exact.exp()).abs();
        assert!(
            diff <= 2.0 * est.std_error(),
            "{} vs {} (se {})",
            est.evidence(),
            exact.exp(),
            est.std_error()
        );
    }
}
