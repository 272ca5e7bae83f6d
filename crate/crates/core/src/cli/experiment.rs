use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig};
use super::problem::{load_dataset, Problem};
use crate::diagnostics::{
    bin_probabilities, checkpoints, mahalanobis_convergence, marginal_likelihood,
    write_metrics_csv, MetricRow, RunningHistogram, RunningMean,
};
use crate::error::{Error, Result};
use crate::samplers::{
    read_samples_csv, read_summary_csv, run_sampler, weighted_moments, write_samples_csv,
    write_summary_csv, IterationSummary, RefitRecord, SampleLog, WeightedEnsemble,
};
use crate::transport::MapRecord;

/// Build identifiers recorded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub package: String,
    pub version: String,
    pub git: String,
}

impl BuildInfo {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            git: option_env!("ETAIS_GIT_REVISION")
                .unwrap_or("unknown")
                .into(),
        }
    }
}

/// Outcome of one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub index: usize,
    pub seed: u64,
    pub directory: String,
    pub iterations_completed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything needed to re-run an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub build: BuildInfo,
    pub command: String,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub repeats: Vec<RepeatRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct MapArtifact<'a> {
    final_map: &'a MapRecord,
    refits: &'a [RefitRecord],
    kernel_covariance: &'a [Vec<f64>],
}

/// Summary of a finished `run`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub output: PathBuf,
    pub repeats: Vec<RepeatRecord>,
    pub metrics: Vec<MetricRow>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.repeats.iter().filter(|r| r.error.is_some()).count()
    }
}

fn repeat_dir(r: usize) -> String {
    format!("repeat_{r:03}")
}

/// Per-repeat metrics plus the running means the Mahalanobis series needs.
struct RepeatMetrics {
    repeat: usize,
    rows: Vec<MetricRow>,
    counts: Vec<usize>,
    running_means: Vec<Vec<f64>>,
    moments: Option<(Vec<f64>, DMatrix<f64>)>,
}

fn metrics_for(
    problem: &Problem,
    config: &ExperimentConfig,
    truth_bins: Option<&[f64]>,
    samples: &[WeightedEnsemble],
    summaries: &[IterationSummary],
    repeat: usize,
) -> Result<RepeatMetrics> {
    let burn_in = config
        .diagnostics
        .burn_in
        .unwrap_or_else(|| config.sampler.burn_in_iterations());
    let kept = &samples[burn_in.min(samples.len())..];
    let tail = &summaries[burn_in.min(summaries.len())..];
    let total: usize = kept.iter().map(|s| s.len()).sum();
    let mut rows = Vec::new();
    let mut row = |n: usize, metric: String, value: f64| {
        rows.push(MetricRow {
            n,
            metric,
            value,
            repeat,
        })
    };
    if config.sampler.algorithm.is_ensemble() {
        let m = config.sampler.ensemble_size as f64;
        let ratio = tail.iter().map(|s| s.ess / m).sum::<f64>() / tail.len().max(1) as f64;
        row(total, "ess_ratio".into(), ratio);
        let mut max_w: Vec<f64> = tail.iter().map(|s| s.max_weight).collect();
        max_w.sort_by(f64::total_cmp);
        if !max_w.is_empty() {
            row(total, "max_weight_median".into(), max_w[max_w.len() / 2]);
        }
        if let Some(offset) = problem.evidence_offset {
            let blocks: Vec<Vec<f64>> = kept.iter().map(|s| s.log_weights.clone()).collect();
            if let Ok(z) = marginal_likelihood(&blocks) {
                row(total, "log_evidence".into(), z.log_evidence + offset);
                row(total, "evidence_rel_se".into(), z.relative_std_error);
            }
        }
    } else {
        let accepted = summaries.iter().filter(|s| s.accepted).count();
        row(
            total,
            "acceptance_rate".into(),
            accepted as f64 / summaries.len().max(1) as f64,
        );
    }
    if let Some(z) = problem.exact_log_evidence {
        row(total, "exact_log_evidence".into(), z);
    }

    let dim = problem.dim();
    let counts = checkpoints(total, config.diagnostics.per_decade.max(1));
    let mut running = RunningMean::new(dim, counts.clone());
    let mut hist = config
        .diagnostics
        .histogram
        .clone()
        .filter(|_| truth_bins.is_some())
        .map(RunningHistogram::new);
    let mut next = 0;
    let mut seen = 0;
    for s in kept {
        for (x, lw) in s.states.iter().zip(&s.log_weights) {
            running.push(x, *lw);
            seen += 1;
            if let Some(h) = hist.as_mut() {
                h.push(x, *lw);
                if next < counts.len() && counts[next] == seen {
                    if let Ok(e) = h.l2_error(truth_bins.expect("histogram has a truth")) {
                        row(seen, "l2_error".into(), e.error);
                        row(seen, "outside_mass".into(), e.outside_mass);
                    }
                }
            }
            while next < counts.len() && counts[next] == seen {
                next += 1;
            }
        }
    }
    let moments = if total > 0 {
        let all_lw: Vec<f64> = kept
            .iter()
            .flat_map(|s| s.log_weights.iter().copied())
            .collect();
        let max = all_lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = all_lw.iter().map(|v| (v - max).exp()).collect();
        let states = kept.iter().flat_map(|s| s.states.iter());
        weighted_moments(states, &w, dim).ok()
    } else {
        None
    };
    if let Some((mean, cov)) = &moments {
        for c in 0..dim {
            row(total, format!("mean_{}", c + 1), mean[c]);
            row(total, format!("var_{}", c + 1), cov[(c, c)]);
        }
    }
    let reached = running.recorded().len();
    Ok(RepeatMetrics {
        repeat,
        rows,
        counts: counts[..reached].to_vec(),
        running_means: running.recorded().to_vec(),
        moments,
    })
}

/// Mahalanobis reference: the exact moments when known, otherwise the
/// moments pooled over repeats (equal weight per repeat).
fn mahalanobis_reference(
    problem: &Problem,
    metrics: &[RepeatMetrics],
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    if let Some(r) = &problem.reference {
        return Some(r.clone());
    }
    let moments: Vec<&(Vec<f64>, DMatrix<f64>)> =
        metrics.iter().filter_map(|m| m.moments.as_ref()).collect();
    let first = moments.first()?;
    let d = first.0.len();
    let n = moments.len() as f64;
    let mut mean = vec![0.0; d];
    for (m, _) in &moments {
        for c in 0..d {
            mean[c] += m[c] / n;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for (m, s) in &moments {
        cov += s / n;
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (m[a] - mean[a]) * (m[b] - mean[b]) / n;
            }
        }
    }
    Some((mean, cov))
}

/// Writes per-repeat and pooled metric files under `dir`; returns all rows.
fn write_metrics(
    dir: &Path,
    problem: &Problem,
    config: &ExperimentConfig,
    metrics: Vec<RepeatMetrics>,
) -> Result<Vec<MetricRow>> {
    let mut all = Vec::new();
    let reference = if config.diagnostics.mahalanobis {
        mahalanobis_reference(problem, &metrics)
    } else {
        None
    };
    let mut series: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut shortest: Option<Vec<usize>> = None;
    for m in metrics {
        let mut rows = m.rows;
        if let Some((mu, sigma)) = &reference {
            let dist = mahalanobis_convergence(std::slice::from_ref(&m.running_means), mu, sigma)?;
            for (n, v) in m.counts.iter().zip(dist) {
                rows.push(MetricRow {
                    n: *n,
                    metric: "mahalanobis".into(),
                    value: v,
                    repeat: m.repeat,
                });
            }
            if shortest.as_ref().is_none_or(|s| m.counts.len() < s.len()) {
                shortest = Some(m.counts.clone());
            }
            series.push(m.running_means);
        }
        all.extend(rows);
    }
    write_metrics_csv(&all, &dir.join("metrics.csv"))?;
    if let (Some((mu, sigma)), Some(counts)) = (&reference, shortest) {
        let trimmed: Vec<Vec<Vec<f64>>> = series
            .into_iter()
            .map(|s| s[..counts.len()].to_vec())
            .collect();
        let avg = mahalanobis_convergence(&trimmed, mu, sigma)?;
        let mut w = csv::Writer::from_path(dir.join("mahalanobis.csv"))?;
        w.write_record(["N", "mean_distance"])?;
        for (n, v) in counts.iter().zip(avg) {
            w.write_record([n.to_string(), format!("{v:.16e}")])?;
        }
        w.flush()?;
    }
    Ok(all)
}

fn truth_bins(problem: &Problem, config: &ExperimentConfig) -> Option<Vec<f64>> {
    let spec = config.diagnostics.histogram.as_ref()?;
    let truth = problem.truth.as_ref()?;
    (spec.dim() == problem.dim()).then(|| bin_probabilities(truth.as_ref(), spec))
}

/// Runs every repeat (in parallel on the current thread pool) and writes the
/// artifact tree under `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let problem = Problem::build(&config.problem)?;
    let out = config.output.clone();
    std::fs::create_dir_all(&out)?;
    if let Some(data) = &problem.dataset {
        write_json(&out.join("dataset.json"), data)?;
    }
    let bins = truth_bins(&problem, config);
    let results: Vec<(RepeatRecord, Option<RepeatMetrics>)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| run_repeat(&problem, config, bins.as_deref(), &out, r))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut per_repeat = Vec::new();
    for (record, metrics) in results {
        records.push(record);
        per_repeat.extend(metrics);
    }
    let metrics = write_metrics(&out, &problem, config, per_repeat)?;
    Manifest {
        build: BuildInfo::current(),
        command: "run".into(),
        config: config.clone(),
        repeats: records.clone(),
    }
    .write(&out)?;
    Ok(RunReport {
        output: out,
        repeats: records,
        metrics,
    })
}

fn run_repeat(
    problem: &Problem,
    config: &ExperimentConfig,
    bins: Option<&[f64]>,
    out: &Path,
    r: usize,
) -> Result<(RepeatRecord, Option<RepeatMetrics>)> {
    let seed = config.repeat_seed(r);
    let sampler = crate::samplers::SamplerConfig {
        seed,
        ..config.sampler.clone()
    };
    let initial = problem.initial(config, seed)?;
    let (log, error) = match run_sampler(&sampler, problem.target.as_ref(), initial) {
        Ok(log) => (log, None),
        Err(partial) => (*partial.log, Some(partial.error.to_string())),
    };
    let dir = out.join(repeat_dir(r));
    std::fs::create_dir_all(&dir)?;
    write_repeat(&dir, &log)?;
    let metrics = if error.is_none() {
        Some(metrics_for(
            problem,
            config,
            bins,
            &log.samples,
            &log.summaries,
            r,
        )?)
    } else {
        None
    };
    Ok((
        RepeatRecord {
            index: r,
            seed,
            directory: repeat_dir(r),
            iterations_completed: log.iterations_completed(),
            error,
        },
        metrics,
    ))
}

fn write_repeat(dir: &Path, log: &SampleLog) -> Result<()> {
    if log.config.keep_samples {
        write_samples_csv(log, &dir.join("samples.csv"))?;
    }
    write_summary_csv(log, &dir.join("summary.csv"))?;
    write_json(
        &dir.join("map.json"),
        &MapArtifact {
            final_map: &log.final_map,
            refits: &log.refits,
            kernel_covariance: &log.kernel_covariance,
        },
    )
}

/// Recomputes the metrics of a finished run from its stored logs into
/// `<dir>/diagnostics/`.
pub fn diagnose(dir: &Path) -> Result<Vec<MetricRow>> {
    let manifest = Manifest::load(dir)?;
    let mut config = manifest.config.clone();
    let stored = dir.join("dataset.json");
    if config.problem.data().is_some() && stored.exists() {
        set_data_source(&mut config, DataSource::File(stored));
    }
    let problem = Problem::build(&config.problem)?;
    let bins = truth_bins(&problem, &config);
    let per_repeat: Vec<RepeatMetrics> = manifest
        .repeats
        .par_iter()
        .filter(|r| r.error.is_none())
        .map(|r| {
            let rdir = dir.join(&r.directory);
            let samples = read_samples_csv(&rdir.join("samples.csv"))?;
            let summaries = read_summary_csv(&rdir.join("summary.csv"))?;
            metrics_for(
                &problem,
                &config,
                bins.as_deref(),
                &samples,
                &summaries,
                r.index,
            )
        })
        .collect::<Result<_>>()?;
    let target = dir.join("diagnostics");
    std::fs::create_dir_all(&target)?;
    write_metrics(&target, &problem, &config, per_repeat)
}

fn set_data_source(config: &mut ExperimentConfig, source: DataSource) {
    use super::config::ProblemConfig as P;
    match &mut config.problem {
        P::SrnFull { data } | P::SrnQea { data } | P::SrnCma { data } | P::Grn { data } => {
            *data = source
        }
        _ => {}
    }
}

/// Files written by [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub dataset: PathBuf,
    pub trajectory: PathBuf,
    pub events: usize,
}

/// Simulates the configured reaction-network dataset and stores it with its
/// trajectory, sufficient statistics and observed projection.
pub fn simulate(config: &ExperimentConfig) -> Result<SimulationReport> {
    if !matches!(config.problem.data(), Some(DataSource::Simulate { .. })) {
        return Err(Error::Config(format!(
            "{} has no simulation settings",
            config.problem.name()
        )));
    }
    config.validate()?;
    let data = load_dataset(&config.problem)?;
    let out = &config.output;
    std::fs::create_dir_all(out)?;
    let dataset = out.join("dataset.json");
    write_json(&dataset, &data)?;
    let trajectory = out.join("trajectory.csv");
    data.path.write_trajectory_csv(&data.network, &trajectory)?;
    Manifest {
        build: BuildInfo::current(),
        command: "simulate".into(),
        config: config.clone(),
        repeats: Vec::new(),
    }
    .write(out)?;
    Ok(SimulationReport {
        dataset,
        trajectory,
        events: data.path.events.len(),
    })
}

/// One pilot run of [`tune`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotResult {
    pub beta: f64,
    /// ESS ratio (ensemble samplers) or acceptance rate (MH samplers);
    /// `None` when the pilot failed.
    pub metric: Option<f64>,
}

/// Pilot table and the selected scale.
#[derive(Debug, Clone)]
pub struct TuneReport {
    pub pilots: Vec<PilotResult>,
    pub selected: f64,
    pub resolved: ExperimentConfig,
    /// Ensemble samplers only: whether the ESS curve over the grid rises
    /// then falls.
    pub unimodal: bool,
}

/// Runs a short pilot per grid value and selects the ESS-maximizing scale
/// (ensemble samplers) or the one whose acceptance rate is closest to the
/// target (MH samplers). Writes `tune.csv` and `tuned_config.json`.
pub fn tune(config: &ExperimentConfig) -> Result<TuneReport> {
    config.validate()?;
    if config.tune.grid.is_empty() {
        return Err(Error::Config("empty tuning grid".into()));
    }
    let problem = Problem::build(&config.problem)?;
    let pilots: Vec<PilotResult> = config
        .tune
        .grid
        .par_iter()
        .map(|&beta| {
            let sampler = crate::samplers::SamplerConfig {
                beta,
                iterations: config.tune.pilot_iterations,
                map_stop: None,
                keep_samples: false,
                seed: config.seed,
                ..config.sampler.clone()
            };
            let metric = problem
                .initial(config, config.seed)
                .ok()
                .and_then(|init| run_sampler(&sampler, problem.target.as_ref(), init).ok())
                .map(|log| {
                    if sampler.algorithm.is_ensemble() {
                        log.mean_ess_ratio(log.summaries.len() / 2)
                    } else {
                        log.acceptance_rate()
                    }
                })
                .filter(|v| v.is_finite());
            PilotResult { beta, metric }
        })
        .collect();
    let ok: Vec<(f64, f64)> = pilots
        .iter()
        .filter_map(|p| p.metric.map(|m| (p.beta, m)))
        .collect();
    let score = |m: f64| {
        if config.sampler.algorithm.is_ensemble() {
            m
        } else {
            -(m - config.tune.target_acceptance).abs()
        }
    };
    let selected = ok
        .iter()
        .copied()
        .max_by(|a, b| score(a.1).total_cmp(&score(b.1)))
        .ok_or_else(|| Error::Config("every pilot run failed".into()))?
        .0;
    let mut sorted = ok.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = sorted
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map_or(0, |(i, _)| i);
    let unimodal = sorted[..=peak].windows(2).all(|w| w[0].1 <= w[1].1)
        && sorted[peak..].windows(2).all(|w| w[0].1 >= w[1].1);

    let out = &config.output;
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("tune.csv"))?;
    let label = if config.sampler.algorithm.is_ensemble() {
        "ess_ratio"
    } else {
        "acceptance_rate"
    };
    w.write_record(["beta", label, "selected"])?;
    for p in &pilots {
        w.write_record([
            format!("{:.16e}", p.beta),
            p.metric.map_or("failed".into(), |m| format!("{m:.16e}")),
            u8::from(p.beta == selected).to_string(),
        ])?;
    }
    w.flush()?;
    let mut resolved = config.clone();
    resolved.sampler.beta = selected;
    write_json(&out.join("tuned_config.json"), &resolved)?;
    Ok(TuneReport {
        pilots,
        selected,
        resolved,
        unimodal,
    })
}
