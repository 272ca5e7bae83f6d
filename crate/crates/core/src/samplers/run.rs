use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ensemble::{relative_weights, step, WeightedEnsemble};
use super::kernel::ProposalKernel;
use super::mh::{mh_step, MhState};
use crate::error::{Error, Result};
use crate::model::LogDensity;
use crate::resampling::{Resampler, SpaceTag};
use crate::rng::{substream, StreamRng};
use crate::transport::{
    fit_map, BasisMatrices, FitOptions, FitReport, MapRecord, Preconditioner, TriangularMap,
};

/// Sampler family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Random-walk Metropolis-Hastings.
    Mh,
    /// Metropolis-Hastings with an adaptive transport map.
    Tmh,
    #[default]
    Etais,
    /// Transport ETAIS, resampling the target-space proposals.
    Tetais1,
    /// Transport ETAIS, resampling in reference space.
    Tetais2,
}

impl Algorithm {
    pub fn is_ensemble(&self) -> bool {
        !matches!(self, Algorithm::Mh | Algorithm::Tmh)
    }

    pub fn adapts_map(&self) -> bool {
        matches!(
            self,
            Algorithm::Tmh | Algorithm::Tetais1 | Algorithm::Tetais2
        )
    }
}

/// Settings for [`run_sampler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Ensemble size `M` (ignored by the MH samplers).
    pub ensemble_size: usize,
    /// Iterations `N`.
    pub iterations: usize,
    /// Proposal scale: the kernel covariance is `beta² Σ`.
    pub beta: f64,
    /// Kernel covariance `Σ`; identity when absent.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Refit the map every `map_update_interval` iterations ...
    pub map_update_interval: usize,
    /// ... while the iteration index is below this; defaults to `N/2`.
    pub map_stop: Option<usize>,
    pub map_order: usize,
    pub beta_reg: f64,
    pub preconditioner: Preconditioner,
    pub resampler: Resampler,
    /// Fraction of iterations during which the kernel covariance is adapted.
    pub burn_in_fraction: f64,
    pub adapt_covariance: bool,
    pub sample_cap: usize,
    /// Map-fit samples lighter than this fraction of the heaviest are dropped.
    pub weight_floor: f64,
    pub keep_samples: bool,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Etais,
            ensemble_size: 150,
            iterations: 1000,
            beta: 1.0,
            covariance: None,
            map_update_interval: 25,
            map_stop: None,
            map_order: 3,
            beta_reg: 1.0,
            preconditioner: Preconditioner::None,
            resampler: Resampler::Mt,
            burn_in_fraction: 0.1,
            adapt_covariance: false,
            sample_cap: 200_000,
            weight_floor: 1e-12,
            keep_samples: true,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.algorithm.is_ensemble() && self.ensemble_size < 2 {
            return bad(format!("ensemble_size {} < 2", self.ensemble_size));
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta {}", self.beta));
        }
        if self.map_update_interval == 0 {
            return bad("map_update_interval must be positive".into());
        }
        if self.map_stop.is_some_and(|s| s > self.iterations) {
            return bad("map_stop exceeds iterations".into());
        }
        if self.map_order.is_multiple_of(2) {
            return bad(format!("map_order {} is even", self.map_order));
        }
        if !(0.0..=1.0).contains(&self.burn_in_fraction) {
            return bad(format!("burn_in_fraction {}", self.burn_in_fraction));
        }
        if !(self.beta_reg >= 0.0) {
            return bad(format!("beta_reg {}", self.beta_reg));
        }
        if !(0.0..1.0).contains(&self.weight_floor) {
            return bad(format!("weight_floor {}", self.weight_floor));
        }
        Ok(())
    }

    pub fn resolved_map_stop(&self) -> usize {
        self.map_stop.unwrap_or(self.iterations / 2)
    }

    pub fn burn_in_iterations(&self) -> usize {
        (self.burn_in_fraction * self.iterations as f64).floor() as usize
    }

    pub fn kernel(&self, dim: usize) -> Result<ProposalKernel> {
        match &self.covariance {
            None => ProposalKernel::isotropic(dim, self.beta),
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: rows.len(),
                    });
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                ProposalKernel::new(self.beta, DMatrix::from_row_slice(dim, dim, &flat))
            }
        }
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            order: self.map_order,
            beta_reg: self.beta_reg,
            preconditioner: self.preconditioner,
            sample_cap: self.sample_cap,
            weight_floor: self.weight_floor,
            ..FitOptions::default()
        }
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub ess: f64,
    /// Largest weight divided by the total weight.
    pub max_weight: f64,
    /// `log` of the mean unnormalized weight (an evidence estimate).
    pub log_mean_weight: f64,
    pub refit: bool,
    pub inversion_failures: usize,
    pub accepted: bool,
}

/// Result of one map refit during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitRecord {
    pub iteration: usize,
    pub converged: bool,
    pub report: FitReport,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLog {
    pub config: SamplerConfig,
    pub dim: usize,
    /// Weighted proposals per iteration (empty unless `keep_samples`).
    pub samples: Vec<WeightedEnsemble>,
    pub summaries: Vec<IterationSummary>,
    pub acceptances: usize,
    pub refits: Vec<RefitRecord>,
    pub final_map: MapRecord,
    pub kernel_covariance: Vec<Vec<f64>>,
}

impl SampleLog {
    pub fn iterations_completed(&self) -> usize {
        self.summaries.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptances as f64 / self.summaries.len().max(1) as f64
    }

    /// Mean ESS ratio `ess / M` over iterations `from..`.
    pub fn mean_ess_ratio(&self, from: usize) -> f64 {
        let m = self.config.ensemble_size as f64;
        let tail = &self.summaries[from.min(self.summaries.len())..];
        tail.iter().map(|s| s.ess / m).sum::<f64>() / tail.len().max(1) as f64
    }

    /// Weighted mean and covariance of the kept samples from iteration index
    /// `from` on, pooling iterations through their unnormalized weights.
    pub fn weighted_moments(&self, from: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let kept = &self.samples[from.min(self.samples.len())..];
        let all_lw: Vec<f64> = kept
            .iter()
            .flat_map(|s| s.log_weights.iter().copied())
            .collect();
        if all_lw.is_empty() {
            return Err(Error::EmptySample);
        }
        let w = relative_weights(&all_lw);
        let states = kept.iter().flat_map(|s| s.states.iter());
        weighted_moments(states, &w, self.dim)
    }

    /// Batch-means standard errors of the posterior mean of `f`, splitting
    /// iterations `from..` into `batches` contiguous groups, together with
    /// the overall weighted mean.
    pub fn batch_std_errors(
        &self,
        from: usize,
        batches: usize,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let kept = &self.samples[from.min(self.samples.len())..];
        if batches < 2 || kept.len() < batches {
            return Err(Error::EmptySample);
        }
        let max = kept
            .iter()
            .flat_map(|s| s.log_weights.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateEnsemble);
        }
        let per = kept.len() / batches;
        let mut batch_means: Vec<Vec<f64>> = Vec::with_capacity(batches);
        let mut sum: Vec<f64> = Vec::new();
        let mut total = 0.0;
        for b in 0..batches {
            let end = if b + 1 == batches {
                kept.len()
            } else {
                (b + 1) * per
            };
            let mut bsum: Vec<f64> = Vec::new();
            let mut btotal = 0.0;
            for s in &kept[b * per..end] {
                for (theta, lw) in s.states.iter().zip(&s.log_weights) {
                    let w = (lw - max).exp();
                    if w == 0.0 {
                        continue;
                    }
                    let v = f(theta);
                    if bsum.is_empty() {
                        bsum = vec![0.0; v.len()];
                    }
                    bsum.iter_mut().zip(&v).for_each(|(a, x)| *a += w * x);
                    btotal += w;
                }
            }
            if !(btotal > 0.0) {
                return Err(Error::DegenerateEnsemble);
            }
            if sum.is_empty() {
                sum = vec![0.0; bsum.len()];
            }
            sum.iter_mut().zip(&bsum).for_each(|(a, x)| *a += x);
            total += btotal;
            batch_means.push(bsum.iter().map(|x| x / btotal).collect());
        }
        let mean = sum.iter().map(|x| x / total).collect();
        let se = (0..sum.len())
            .map(|c| {
                let col: Vec<f64> = batch_means.iter().map(|m| m[c]).collect();
                crate::diagnostics::batch_means_std_error(&col)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((mean, se))
    }
}

pub(crate) fn weighted_moments<'a>(
    states: impl Iterator<Item = &'a Vec<f64>> + Clone,
    w: &[f64],
    dim: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateEnsemble);
    }
    let mut mean = vec![0.0; dim];
    for (s, wi) in states.clone().zip(w) {
        for c in 0..dim {
            mean[c] += wi * s[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = DMatrix::zeros(dim, dim);
    for (s, wi) in states.zip(w) {
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += wi * (s[a] - mean[a]) * (s[b] - mean[b]);
            }
        }
    }
    Ok((mean, cov / total))
}

/// A run that stopped early, with everything recorded up to the failure.
pub struct PartialRun {
    pub log: Box<SampleLog>,
    pub error: Error,
}

impl std::fmt::Debug for PartialRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartialRun")
            .field("iterations_completed", &self.log.iterations_completed())
            .field("error", &self.error)
            .finish()
    }
}

impl std::fmt::Display for PartialRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "sampler stopped after {} iterations: {}",
            self.log.iterations_completed(),
            self.error
        )
    }
}

impl std::error::Error for PartialRun {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// `m` initial states drawn with per-state substreams of `seed`.
pub fn draw_initial(
    m: usize,
    seed: u64,
    draw: impl Fn(&mut StreamRng) -> Vec<f64>,
) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| draw(&mut substream(seed, 0, i as u64)))
        .collect()
}

/// Runs the configured sampler from `initial` (the ensemble, or the chain's
/// starting point as its first entry).
pub fn run_sampler<D: LogDensity + ?Sized>(
    config: &SamplerConfig,
    target: &D,
    initial: Vec<Vec<f64>>,
) -> std::result::Result<SampleLog, PartialRun> {
    run_sampler_with(config, target, initial, |_| {})
}

/// [`run_sampler`] calling `observe` on each iteration's weighted sample.
pub fn run_sampler_with<D: LogDensity + ?Sized>(
    config: &SamplerConfig,
    target: &D,
    initial: Vec<Vec<f64>>,
    mut observe: impl FnMut(&WeightedEnsemble),
) -> std::result::Result<SampleLog, PartialRun> {
    let dim = target.dim();
    let mut log = SampleLog {
        config: config.clone(),
        dim,
        samples: Vec::new(),
        summaries: Vec::new(),
        acceptances: 0,
        refits: Vec::new(),
        final_map: MapRecord {
            dim,
            order: config.map_order,
            preconditioner: config.preconditioner,
            indices: Vec::new(),
            coefficients: Vec::new(),
            hull: None,
        },
        kernel_covariance: Vec::new(),
    };
    let mut runner = match Runner::new(config, dim, initial, target) {
        Ok(r) => r,
        Err(error) => {
            return Err(PartialRun {
                log: Box::new(log),
                error,
            })
        }
    };
    let result = runner.run(config, target, &mut log, &mut observe);
    log.final_map = runner.map.to_record();
    log.kernel_covariance = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| runner.kernel.covariance()[(r, c)])
                .collect()
        })
        .collect();
    match result {
        Ok(()) => Ok(log),
        Err(error) => Err(PartialRun {
            log: Box::new(log),
            error,
        }),
    }
}

/// Smallest factor by which one adaptation may scale a kernel variance. A
/// degenerate window (a stuck chain, one dominant weight) would otherwise
/// collapse the kernel to a point.
const MAX_VARIANCE_SHRINK: f64 = 0.01;

struct Runner {
    map: TriangularMap,
    kernel: ProposalKernel,
    basis: Option<BasisMatrices>,
    pending_states: Vec<Vec<f64>>,
    pending_log_weights: Vec<f64>,
    window: VecDeque<WeightedEnsemble>,
    ensemble: Option<WeightedEnsemble>,
    chain: Option<MhState>,
}

impl Runner {
    fn new<D: LogDensity + ?Sized>(
        config: &SamplerConfig,
        dim: usize,
        initial: Vec<Vec<f64>>,
        target: &D,
    ) -> Result<Self> {
        config.validate()?;
        let map = TriangularMap::identity(dim, config.map_order, config.preconditioner)?;
        let kernel = config.kernel(dim)?;
        let basis = if config.algorithm.adapts_map() {
            Some(
                BasisMatrices::new(dim, config.map_order, config.preconditioner)?
                    .with_capacity(config.sample_cap)
                    .with_weight_floor(config.weight_floor),
            )
        } else {
            None
        };
        let (ensemble, chain) = if config.algorithm.is_ensemble() {
            if initial.len() != config.ensemble_size {
                return Err(Error::DimensionMismatch {
                    expected: config.ensemble_size,
                    found: initial.len(),
                });
            }
            (Some(WeightedEnsemble::uniform(initial, 1)?), None)
        } else {
            let start = initial.into_iter().next().ok_or(Error::EmptySample)?;
            (None, Some(MhState::new(start, target)?))
        };
        if let Some(e) = &ensemble {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
        }
        Ok(Self {
            map,
            kernel,
            basis,
            pending_states: Vec::new(),
            pending_log_weights: Vec::new(),
            window: VecDeque::new(),
            ensemble,
            chain,
        })
    }

    fn run<D: LogDensity + ?Sized>(
        &mut self,
        config: &SamplerConfig,
        target: &D,
        log: &mut SampleLog,
        observe: &mut impl FnMut(&WeightedEnsemble),
    ) -> Result<()> {
        let space = match config.algorithm {
            Algorithm::Tetais2 => SpaceTag::Reference,
            _ => SpaceTag::Target,
        };
        let k_stop = config.resolved_map_stop();
        let burn_in = config.burn_in_iterations();
        for k in 1..=config.iterations {
            let (sample, failures, accepted) = if let Some(ens) = &self.ensemble {
                let out = step(
                    ens,
                    target,
                    &self.kernel,
                    Some(&self.map),
                    space,
                    config.resampler,
                    config.seed,
                )?;
                self.ensemble = Some(out.ensemble);
                (out.sample, out.inversion_failures, false)
            } else {
                let state = self.chain.as_ref().expect("chain state");
                let mut rng = substream(config.seed, k as u64, 0);
                let (next, accepted) =
                    mh_step(state, target, &self.kernel, Some(&self.map), &mut rng)?;
                let sample = WeightedEnsemble {
                    states: vec![next.theta.clone()],
                    log_weights: vec![0.0],
                    iteration: k,
                };
                self.chain = Some(next);
                (sample, 0, accepted)
            };
            observe(&sample);
            let weights = sample.normalized_weights();
            let mut summary = IterationSummary {
                iteration: k,
                ess: crate::diagnostics::ess(&weights),
                max_weight: weights.iter().copied().fold(0.0, f64::max),
                log_mean_weight: sample.log_mean_weight(),
                refit: false,
                inversion_failures: failures,
                accepted,
            };
            log.acceptances += usize::from(accepted);
            if self.basis.is_some() {
                self.pending_states.extend(sample.states.iter().cloned());
                self.pending_log_weights
                    .extend(sample.log_weights.iter().copied());
            }
            if config.adapt_covariance && k <= burn_in {
                self.window.push_back(sample.clone());
                while self.window.len() > config.map_update_interval {
                    self.window.pop_front();
                }
            }
            if k % config.map_update_interval == 0 {
                if k < k_stop && self.basis.is_some() {
                    summary.refit = self.refit(config, k, log)?;
                }
                if config.adapt_covariance && k <= burn_in {
                    self.adapt_kernel(config)?;
                }
            }
            log.summaries.push(summary);
            if config.keep_samples {
                log.samples.push(sample);
            }
        }
        Ok(())
    }

    fn refit(&mut self, config: &SamplerConfig, k: usize, log: &mut SampleLog) -> Result<bool> {
        let basis = self.basis.as_mut().expect("adaptive run");
        basis.append_log(&self.pending_states, &self.pending_log_weights)?;
        self.pending_states.clear();
        self.pending_log_weights.clear();
        match fit_map(basis, &config.fit_options(), Some(&self.map)) {
            Ok((map, report)) => {
                self.map = map;
                log.refits.push(RefitRecord {
                    iteration: k,
                    converged: true,
                    report,
                });
                Ok(true)
            }
            Err(Error::Underdetermined { .. }) => Ok(false),
            Err(Error::NotConverged { report, .. }) => {
                log.refits.push(RefitRecord {
                    iteration: k,
                    converged: false,
                    report: *report,
                });
                Ok(false)
            }
            Err(e) => Err(e),
        }
    }

    /// Sets the kernel covariance to the diagonal of the weighted sample
    /// covariance of the recent window, in the current kernel coordinates,
    /// shrinking by at most [`MAX_VARIANCE_SHRINK`] per call.
    fn adapt_kernel(&mut self, config: &SamplerConfig) -> Result<()> {
        let mut states = Vec::new();
        let mut log_weights = Vec::new();
        for s in &self.window {
            for (theta, &lw) in s.states.iter().zip(&s.log_weights) {
                if lw == f64::NEG_INFINITY {
                    continue;
                }
                if let Ok(r) = self.map.evaluate(theta) {
                    states.push(r);
                    log_weights.push(lw);
                }
            }
        }
        let dim = self.kernel.dim();
        if states.len() <= dim {
            return Ok(());
        }
        let w = relative_weights(&log_weights);
        let (_, cov) = weighted_moments(states.iter(), &w, dim)?;
        let old = self.kernel.covariance().diagonal();
        let diag = cov
            .diagonal()
            .zip_map(&old, |v, prev| v.max(MAX_VARIANCE_SHRINK * prev));
        if diag.iter().all(|v| *v > 0.0 && v.is_finite()) {
            self.kernel = ProposalKernel::new(config.beta, DMatrix::from_diagonal(&diag))?;
        }
        Ok(())
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per `(iteration, particle)`: `k, i, theta_1..theta_d,
/// weight, log_weight`, where `weight` is normalized within the iteration.
pub fn write_samples_csv(log: &SampleLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string(), "i".to_string()];
    header.extend((1..=log.dim).map(|c| format!("theta_{c}")));
    header.push("weight".into());
    header.push("log_weight".into());
    w.write_record(&header)?;
    for s in &log.samples {
        let norm = s.normalized_weights();
        for (i, (theta, lw)) in s.states.iter().zip(&s.log_weights).enumerate() {
            let mut row = vec![s.iteration.to_string(), i.to_string()];
            row.extend(theta.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(norm[i]));
            row.push(fmt_f64(*lw));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per iteration with ESS, weight summaries and flags.
pub fn write_summary_csv(log: &SampleLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "ess",
        "ess_ratio",
        "max_weight",
        "log_mean_weight",
        "map_refit",
        "inversion_failures",
        "accepted",
    ])?;
    let m = if log.config.algorithm.is_ensemble() {
        log.config.ensemble_size as f64
    } else {
        1.0
    };
    for s in &log.summaries {
        w.write_record([
            s.iteration.to_string(),
            fmt_f64(s.ess),
            fmt_f64(s.ess / m),
            fmt_f64(s.max_weight),
            fmt_f64(s.log_mean_weight),
            u8::from(s.refit).to_string(),
            s.inversion_failures.to_string(),
            u8::from(s.accepted).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    record
        .get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("malformed CSV field {i} in {record:?}")))
}

/// Reads a file written by [`write_samples_csv`] back into per-iteration
/// samples. Floats round-trip exactly.
pub fn read_samples_csv(path: &Path) -> Result<Vec<WeightedEnsemble>> {
    let mut r = csv::Reader::from_path(path)?;
    let dim = r
        .headers()?
        .len()
        .checked_sub(4)
        .ok_or(Error::EmptySample)?;
    let mut out: Vec<WeightedEnsemble> = Vec::new();
    for record in r.records() {
        let record = record?;
        let k: usize = parse_field(&record, 0)?;
        let theta = (0..dim)
            .map(|c| parse_field(&record, 2 + c))
            .collect::<Result<Vec<f64>>>()?;
        let lw: f64 = parse_field(&record, 3 + dim)?;
        match out.last_mut() {
            Some(last) if last.iteration == k => {
                last.states.push(theta);
                last.log_weights.push(lw);
            }
            _ => out.push(WeightedEnsemble {
                states: vec![theta],
                log_weights: vec![lw],
                iteration: k,
            }),
        }
    }
    Ok(out)
}

/// Reads a file written by [`write_summary_csv`].
pub fn read_summary_csv(path: &Path) -> Result<Vec<IterationSummary>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|record| {
            let record = record?;
            Ok(IterationSummary {
                iteration: parse_field(&record, 0)?,
                ess: parse_field(&record, 1)?,
                max_weight: parse_field(&record, 3)?,
                log_mean_weight: parse_field(&record, 4)?,
                refit: parse_field::<u8>(&record, 5)? == 1,
                inversion_failures: parse_field(&record, 6)?,
                accepted: parse_field::<u8>(&record, 7)? == 1,
            })
        })
        .collect()
}
