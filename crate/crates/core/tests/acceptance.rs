//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::error::Error;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use etais::cli::{run_experiment, tune, ExperimentConfig, TuneReport};
use etais::diagnostics::{marginal_likelihood, weighted_mode, weighted_quantile};
use etais::model::{LogDensity, ProductPrior, RosenbrockDensity};
use etais::resampling::{dimensionwise_transform, etpf_1d, mt_resample, ResampleRequest, SpaceTag};
use etais::rng::substream;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SampleLog, SamplerConfig};
use etais::srn::{
    build_posterior, conjugate_posterior, full_model_slow_log_evidence, EffectiveRate,
    EffectiveVariant, Experiment, SyntheticData,
};
use etais::transport::{
    fit_map, gradient, hessian, objective, BasisMatrices, FitOptions, Preconditioner,
};

type Check = Result<(bool, String), Box<dyn Error>>;

const BATCHES: usize = 20;

fn report(id: usize, name: &str, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let (pass, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} {id:>2} {name} [{:.1?}]: {detail}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed()
    );
    pass
}

fn temp_dir() -> Result<tempfile::TempDir, Box<dyn Error>> {
    Ok(tempfile::tempdir()?)
}

/// Compares estimated posterior means and variances with the exact Gamma
/// posterior: `|z| ≤ 3` against batch-means standard errors (the standard
/// error implied by the effective sample size of the correlated output) and
/// variances within 10%.
fn conjugate_agreement(
    log: &SampleLog,
    exact: &ProductPrior,
    from: usize,
) -> Result<(bool, f64, f64), Box<dyn Error>> {
    let (_, cov) = log.weighted_moments(from)?;
    let (mean, se) = log.batch_std_errors(from, BATCHES, |k| k.to_vec())?;
    let mut worst_z: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (j, g) in exact.components.iter().enumerate() {
        worst_z = worst_z.max(((mean[j] - g.mean()) / se[j]).abs());
        worst_var = worst_var.max((cov[(j, j)] / g.variance() - 1.0).abs());
    }
    Ok((worst_z <= 3.0 && worst_var <= 0.10, worst_z, worst_var))
}

fn reaction_config(
    algorithm: Algorithm,
    beta: f64,
    m: usize,
    n: usize,
    seed: u64,
) -> SamplerConfig {
    SamplerConfig {
        algorithm,
        ensemble_size: m,
        iterations: n,
        beta,
        preconditioner: Preconditioner::Logarithmic,
        adapt_covariance: true,
        burn_in_fraction: 0.2,
        seed,
        ..SamplerConfig::default()
    }
}

fn full_conjugate_run(
    data: &SyntheticData,
    prior: &ProductPrior,
    config: &SamplerConfig,
) -> Result<(bool, f64, f64), Box<dyn Error>> {
    let exact = conjugate_posterior(&data.stats, prior)?;
    let target = build_posterior(
        Experiment::Full,
        &data.view(Experiment::Full)?,
        prior.clone(),
        None,
    )?;
    let m = if config.algorithm.is_ensemble() {
        config.ensemble_size
    } else {
        1
    };
    let initial = draw_initial(m, config.seed, |rng| prior.sample(rng));
    let log = run_sampler(config, &target, initial)?;
    conjugate_agreement(&log, &exact, config.burn_in_iterations())
}

fn conjugate_oracle() -> Check {
    let start = Instant::now();
    let data = SyntheticData::two_species_default(100.0, 1)?;
    let prior = ProductPrior::two_species();
    let (etais_ok, ez, ev) = full_conjugate_run(
        &data,
        &prior,
        &reaction_config(Algorithm::Etais, 1.0, 500, 400, 1),
    )?;
    let (mh_ok, mz, mv) = full_conjugate_run(
        &data,
        &prior,
        &reaction_config(Algorithm::Mh, 1.2, 1, 200_000, 1),
    )?;
    let elapsed = start.elapsed();
    Ok((
        etais_ok && mh_ok && elapsed <= Duration::from_secs(300),
        format!(
            "ETAIS max |z| {ez:.2}, max var error {:.1}%; MH max |z| {mz:.2}, max var error {:.1}%",
            100.0 * ev,
            100.0 * mv
        ),
    ))
}

fn rosenbrock_tuning(algorithm: Algorithm, out: &Path) -> Result<TuneReport, Box<dyn Error>> {
    let mut config = ExperimentConfig::preset("rosenbrock")?;
    config.sampler.algorithm = algorithm;
    config.tune.grid = vec![0.05, 0.1, 0.2, 0.3, 0.5];
    config.tune.pilot_iterations = 2000;
    config.seed = 1;
    config.output = out.to_path_buf();
    Ok(tune(&config)?)
}

fn best(report: &TuneReport) -> f64 {
    report
        .pilots
        .iter()
        .filter_map(|p| p.metric)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn rosenbrock_ess(tuned: &mut Option<(f64, f64)>) -> Check {
    let start = Instant::now();
    let dir = temp_dir()?;
    let plain = rosenbrock_tuning(Algorithm::Etais, &dir.path().join("etais"))?;
    let opt1 = rosenbrock_tuning(Algorithm::Tetais1, &dir.path().join("tetais1"))?;
    let opt2 = rosenbrock_tuning(Algorithm::Tetais2, &dir.path().join("tetais2"))?;
    *tuned = Some((plain.selected, opt2.selected));
    let (e, t1, t2) = (best(&plain), best(&opt1), best(&opt2));
    let pass =
        t1 >= 0.5 && t2 >= 0.55 && e < t1.min(t2) && start.elapsed() <= Duration::from_secs(600);
    Ok((
        pass,
        format!(
            "ESS ratio option 1 {t1:.3} (beta {}), option 2 {t2:.3} (beta {}), plain {e:.3} (beta {})",
            opt1.selected, opt2.selected, plain.selected
        ),
    ))
}

fn normal_start(m: usize, seed: u64) -> Vec<Vec<f64>> {
    let start = Normal::new(0.0, 1.0).expect("unit normal");
    draw_initial(m, seed, |rng| vec![start.sample(rng), start.sample(rng)])
}

fn transport_mh_acceptance() -> Check {
    let start = Instant::now();
    let config = SamplerConfig {
        algorithm: Algorithm::Tmh,
        iterations: 100_000,
        beta: 1.0,
        keep_samples: false,
        seed: 1,
        ..SamplerConfig::default()
    };
    let log = run_sampler(&config, &RosenbrockDensity, normal_start(1, 1))?;
    let rate = log.acceptance_rate();
    Ok((
        (rate - 0.23).abs() <= 0.05 && start.elapsed() <= Duration::from_secs(120),
        format!("acceptance {rate:.3}"),
    ))
}

fn rosenbrock_samples(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, 0, 0);
    (0..n)
        .map(|_| RosenbrockDensity.sample(&mut rng).to_vec())
        .collect()
}

fn pushforward_quality() -> Check {
    let n = 1_000_000;
    let states = rosenbrock_samples(n, 7);
    let options = FitOptions {
        order: 3,
        beta_reg: 1e-4,
        sample_cap: n,
        ..FitOptions::default()
    };
    let (map, _) = etais::transport::fit_map_to_samples(&states, &vec![1.0; n], &options, None)?;
    let mut pass = true;
    let mut detail = Vec::new();
    for c in 0..2 {
        let pushed: Vec<f64> = states
            .iter()
            .map(|s| map.evaluate(s).map(|r| r[c]))
            .collect::<Result<_, _>>()?;
        let mean = pushed.iter().sum::<f64>() / n as f64;
        let sd = (pushed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        pass &= mean.abs() <= 0.1 && (sd - 1.0).abs() <= 0.15;
        detail.push(format!("dim {}: mean {mean:+.4} sd {sd:.4}", c + 1));
    }
    Ok((pass, detail.join(", ")))
}

/// Rosenbrock draws reweighted from a wide Gaussian proposal.
fn importance_samples(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = substream(seed, 0, 1);
    let (sx, sy): (f64, f64) = (2.0, 4.0);
    let x = Normal::new(1.0, sx).expect("valid");
    let y = Normal::new(1.5, sy).expect("valid");
    (0..n)
        .map(|_| {
            let s = vec![x.sample(&mut rng), y.sample(&mut rng)];
            let log_q = -0.5 * (((s[0] - 1.0) / sx).powi(2) + ((s[1] - 1.5) / sy).powi(2));
            let w = (RosenbrockDensity.log_density(&s) - log_q).exp();
            (s, w)
        })
        .unzip()
}

fn newton_behavior() -> Check {
    let mut cold = Vec::new();
    let mut warm = Vec::new();
    let mut cases: Vec<(Vec<Vec<f64>>, Vec<f64>)> = Vec::new();
    for (i, &n) in [1_100, 11_000, 110_000].iter().enumerate() {
        let exact = rosenbrock_samples(n, 20 + i as u64);
        cases.push((exact, vec![1.0; n]));
        cases.push(importance_samples(n, 30 + i as u64));
    }
    for (states, weights) in &cases {
        for beta_reg in [1e-4, 1e-2, 1.0] {
            let options = FitOptions {
                beta_reg,
                ..FitOptions::default()
            };
            let initial = states.len() * 10 / 11;
            let mut basis =
                BasisMatrices::new(2, 3, Preconditioner::None)?.with_capacity(options.sample_cap);
            basis.append(&states[..initial], &weights[..initial])?;
            let (map, report) = fit_map(&basis, &options, None)?;
            cold.extend(report.iterations);
            basis.append(&states[initial..], &weights[initial..])?;
            let (_, report) = fit_map(&basis, &options, Some(&map))?;
            warm.extend(report.iterations);
        }
    }
    cold.sort_unstable();
    let median = cold[cold.len() / 2];
    let cold_max = *cold.last().expect("fits ran");
    let warm_max = *warm.iter().max().expect("fits ran");
    Ok((
        cold_max <= 30 && (10..=15).contains(&median) && warm_max <= 5,
        format!(
            "cold start median {median}, max {cold_max} over {} fits (typical band 10-15); warm start max {warm_max}",
            cold.len()
        ),
    ))
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

fn finite_differences() -> Check {
    let cases = [(1, 1), (1, 3), (2, 1), (2, 3), (4, 1), (4, 3)];
    let mut rng = substream(11, 0, 0);
    let unit = Normal::new(0.0, 1.0)?;
    let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
    let mut checked = 0;
    while checked < 50 {
        let (d, p) = cases[checked % cases.len()];
        let component = rng.random_range(0..d);
        let states: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..d).map(|_| unit.sample(&mut rng)).collect())
            .collect();
        let weights: Vec<f64> = (0..200).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut basis = BasisMatrices::new(d, p, Preconditioner::None)?;
        basis.append(&states, &weights)?;
        let f = basis.f_matrix(component);
        let g = basis.g_matrix(component);
        let iota = basis.index_sets()[component].identity_coefficients();
        let w = basis.weights().to_vec();
        let beta = rng.random_range(0.0..1.0);
        let gamma: Vec<f64> = iota
            .iter()
            .map(|c| c + 0.1 * unit.sample(&mut rng))
            .collect();
        if !objective(&gamma, &f, &g, &w, beta, &iota)?.is_finite() {
            continue;
        }
        let grad = gradient(&gamma, &f, &g, &w, beta, &iota)?;
        let hess = hessian(&gamma, &f, &g, &w, beta)?;
        let n = gamma.len();
        // keep every stencil point well inside the barrier
        let gg = &g * nalgebra::DVector::from_column_slice(&gamma);
        let room = (0..g.nrows())
            .map(|k| gg[k] / g.row(k).abs().sum())
            .fold(f64::INFINITY, f64::min);
        let h = 1e-3 * room.min(1.0);
        let shifted = |j: usize, s: f64| {
            let mut x = gamma.clone();
            x[j] += s * h;
            x
        };
        let stencil = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
        let mut fd_grad = vec![0.0; n];
        let mut fd_hess = vec![0.0; n * n];
        let mut exact_hess = Vec::with_capacity(n * n);
        for j in 0..n {
            for (s, c) in stencil {
                let x = shifted(j, s);
                fd_grad[j] += c * objective(&x, &f, &g, &w, beta, &iota)? / (12.0 * h);
                let gx = gradient(&x, &f, &g, &w, beta, &iota)?;
                for i in 0..n {
                    fd_hess[j * n + i] += c * gx[i] / (12.0 * h);
                }
            }
            for i in 0..n {
                exact_hess.push(hess[(i, j)]);
            }
        }
        worst_g = worst_g.max(relative_error(&fd_grad, grad.as_slice()));
        worst_h = worst_h.max(relative_error(&fd_hess, &exact_hess));
        checked += 1;
    }
    Ok((
        worst_g <= 1e-5 && worst_h <= 1e-4,
        format!("worst relative error: gradient {worst_g:.2e}, Hessian {worst_h:.2e}"),
    ))
}

fn resampler_properties() -> Check {
    let mut failures = Vec::new();
    if etpf_1d(&[0.0, 4.0], &[1.0, 0.0])? != [0.0, 0.0] {
        failures.push("(1, 0) trace");
    }
    if etpf_1d(&[0.0, 4.0], &[0.75, 0.25])? != [0.0, 2.0] {
        failures.push("(0.75, 0.25) trace");
    }
    let mut rng = substream(5, 0, 0);
    let unit = Normal::new(0.0, 1.0)?;
    let mut worst: f64 = 0.0;
    let mut sorted_ok = true;
    for _ in 0..1000 {
        let m = rng.random_range(2..60);
        let d = rng.random_range(1..4);
        let states: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..d).map(|_| unit.sample(&mut rng)).collect())
            .collect();
        let weights: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();
        if !(weights.iter().sum::<f64>() > 0.0) {
            continue;
        }
        let total: f64 = weights.iter().sum();
        let target_mean: Vec<f64> = (0..d)
            .map(|c| {
                states
                    .iter()
                    .zip(&weights)
                    .map(|(s, w)| s[c] * w)
                    .sum::<f64>()
                    / total
            })
            .collect();
        let mean_of = |xs: &[Vec<f64>]| -> Vec<f64> {
            (0..d)
                .map(|c| xs.iter().map(|x| x[c]).sum::<f64>() / xs.len() as f64)
                .collect()
        };
        let gap = |xs: &[Vec<f64>]| -> f64 {
            mean_of(xs)
                .iter()
                .zip(&target_mean)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let first: Vec<f64> = states.iter().map(|s| s[0]).collect();
        let one_d = etpf_1d(&first, &weights)?;
        let one_d_mean = one_d.iter().sum::<f64>() / m as f64;
        worst = worst.max((one_d_mean - target_mean[0]).abs());
        let target = ResampleRequest::new(&states, &weights, SpaceTag::Target)?;
        worst = worst.max(gap(&mt_resample(&target)));
        let reference = ResampleRequest::new(&states, &weights, SpaceTag::Reference)?;
        worst = worst.max(gap(&dimensionwise_transform(&reference)?));

        let mut sorted = first.clone();
        sorted.sort_by(f64::total_cmp);
        sorted_ok &= etpf_1d(&first, &vec![1.0; m])? == sorted;
    }
    if !sorted_ok {
        failures.push("equal weights");
    }
    Ok((
        failures.is_empty() && worst <= 1e-12,
        if failures.is_empty() {
            format!("hand traces exact, equal weights sorted, worst mean gap {worst:.1e}")
        } else {
            format!(
                "failed: {}; worst mean gap {worst:.1e}",
                failures.join(", ")
            )
        },
    ))
}

fn cma_rate(k: &[f64]) -> f64 {
    EffectiveVariant::Cma.effective_rate(k)
}

struct ReducedFit {
    log_evidence: f64,
    mode: f64,
    q25: f64,
    q75: f64,
    sd: f64,
}

fn reduced_fit(
    data: &SyntheticData,
    experiment: Experiment,
    seed: u64,
) -> Result<ReducedFit, Box<dyn Error>> {
    let prior = ProductPrior::two_species();
    let target = build_posterior(experiment, &data.view(experiment)?, prior.clone(), None)?;
    let config = SamplerConfig {
        map_update_interval: 10,
        ..reaction_config(Algorithm::Tetais1, 0.5, 500, 200, seed)
    };
    let log = run_sampler(
        &config,
        &target,
        draw_initial(500, seed, |rng| prior.sample(rng)),
    )?;
    let from = config.burn_in_iterations();
    let kept = &log.samples[from..];
    let blocks: Vec<Vec<f64>> = kept.iter().map(|s| s.log_weights.clone()).collect();
    let z = marginal_likelihood(&blocks)?;
    let max = kept
        .iter()
        .flat_map(|s| s.log_weights.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let (values, weights): (Vec<f64>, Vec<f64>) = kept
        .iter()
        .flat_map(|s| s.states.iter().zip(&s.log_weights))
        .map(|(k, lw)| (cma_rate(k), (lw - max).exp()))
        .unzip();
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(&weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(ReducedFit {
        log_evidence: z.log_evidence,
        mode: weighted_mode(&values, &weights, 60)?,
        q25: weighted_quantile(&values, &weights, 0.25)?,
        q75: weighted_quantile(&values, &weights, 0.75)?,
        sd: var.sqrt(),
    })
}

fn multiscale_ordering() -> Check {
    let prior = ProductPrior::two_species();
    let datasets = 5;
    let (mut ordered, mut covered, mut biased) = (0, 0, 0);
    let mut lines = Vec::new();
    for seed in 1..=datasets {
        let data = SyntheticData::two_species_default(100.0, seed)?;
        let full = full_model_slow_log_evidence(&data.stats, &prior)?;
        let exact = conjugate_posterior(&data.stats, &prior)?;
        let mut rng = substream(seed, u64::MAX, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| cma_rate(&exact.sample(&mut rng)))
            .collect();
        let full_mode = weighted_mode(&draws, &vec![1.0; draws.len()], 60)?;
        let cma = reduced_fit(&data, Experiment::Cma, seed)?;
        let qea = reduced_fit(&data, Experiment::Qea, seed)?;
        let o = full > cma.log_evidence && cma.log_evidence > qea.log_evidence;
        let c = cma.q25 <= full_mode && full_mode <= cma.q75;
        let b = (qea.mode - full_mode).abs() >= cma.sd;
        ordered += usize::from(o);
        covered += usize::from(c);
        biased += usize::from(b);
        lines.push(format!(
            "#{seed}: dlogZ {:.2}/{:.2}, QEA shift {:.1} sd",
            full - cma.log_evidence,
            cma.log_evidence - qea.log_evidence,
            (qea.mode - full_mode).abs() / cma.sd
        ));
    }
    let n = datasets as usize;
    Ok((
        ordered >= 4 && covered == n && biased == n,
        format!(
            "ordering {ordered}/{n}, CMA IQR covers full mode {covered}/{n}, QEA biased {biased}/{n} ({})",
            lines.join("; ")
        ),
    ))
}

fn cma_tuning(algorithm: Algorithm, out: &Path) -> Result<TuneReport, Box<dyn Error>> {
    let mut config = ExperimentConfig::preset("srn-cma")?;
    config.sampler.algorithm = algorithm;
    config.tune.grid = vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0];
    config.tune.pilot_iterations = 200;
    config.seed = 1;
    config.output = out.to_path_buf();
    Ok(tune(&config)?)
}

fn multiscale_efficiency() -> Check {
    let dir = temp_dir()?;
    let rw = cma_tuning(Algorithm::Etais, &dir.path().join("rw"))?;
    let trw = cma_tuning(Algorithm::Tetais2, &dir.path().join("trw"))?;
    let (a, b) = (best(&rw), best(&trw));
    Ok((
        b >= 2.0 * a,
        format!(
            "ESS/M log random walk {a:.3} (beta {}), log transport {b:.3} (beta {}), factor {:.1}",
            rw.selected,
            trw.selected,
            b / a
        ),
    ))
}

fn max_weight_stability(tuned: Option<(f64, f64)>) -> Check {
    let (plain_beta, transport_beta) =
        tuned.ok_or("needs the tuned scales from the Rosenbrock ESS criterion")?;
    let collect = |algorithm: Algorithm, beta: f64| -> Result<(Vec<f64>, usize), Box<dyn Error>> {
        let mut pooled = Vec::new();
        let mut heavy = 0;
        for seed in 1..=8 {
            let config = SamplerConfig {
                algorithm,
                ensemble_size: 150,
                iterations: 2000,
                beta,
                keep_samples: false,
                seed,
                ..SamplerConfig::default()
            };
            let log = run_sampler(&config, &RosenbrockDensity, normal_start(150, seed))?;
            let tail: Vec<f64> = log.summaries[200..].iter().map(|s| s.max_weight).collect();
            heavy += usize::from(tail.iter().any(|w| *w > 0.5));
            pooled.extend(tail);
        }
        pooled.sort_by(f64::total_cmp);
        Ok((pooled, heavy))
    };
    let (plain, plain_heavy) = collect(Algorithm::Etais, plain_beta)?;
    let (transport, transport_heavy) = collect(Algorithm::Tetais2, transport_beta)?;
    let (mp, mt) = (plain[plain.len() / 2], transport[transport.len() / 2]);
    Ok((
        mt < mp && plain_heavy > transport_heavy,
        format!(
            "median max weight transport {mt:.4} vs plain {mp:.4}; repeats with a weight > 0.5: transport {transport_heavy}, plain {plain_heavy}"
        ),
    ))
}

fn gene_regulatory() -> Check {
    let data = SyntheticData::gene_regulatory_default(500.0, 1)?;
    let prior = ProductPrior::gene_regulatory();
    let (oracle_ok, z, v) = full_conjugate_run(
        &data,
        &prior,
        &reaction_config(Algorithm::Etais, 1.0, 500, 400, 1),
    )?;
    let dir = temp_dir()?;
    let mut config = ExperimentConfig::preset("grn")?;
    config.sampler.ensemble_size = 200;
    config.sampler.iterations = 60;
    config.repeats = 1;
    config.seed = 1;
    config.output = dir.path().to_path_buf();
    let run = run_experiment(&config)?;
    let value = |name: &str| {
        run.metrics
            .iter()
            .find(|r| r.metric == name)
            .map(|r| r.value)
    };
    let log_z = value("log_evidence");
    let ess = value("ess_ratio");
    let pipeline_ok =
        run.failures() == 0 && log_z.is_some_and(f64::is_finite) && ess.is_some_and(|e| e > 0.0);
    Ok((
        oracle_ok && pipeline_ok,
        format!(
            "full data: max |z| {z:.2}, max var error {:.1}%; reduced pipeline: failures {}, log Z {:.2}, ESS ratio {:.3}",
            100.0 * v,
            run.failures(),
            log_z.unwrap_or(f64::NAN),
            ess.unwrap_or(f64::NAN)
        ),
    ))
}

fn run_in_pool(config: &ExperimentConfig, threads: usize) -> Result<(), Box<dyn Error>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    pool.install(|| run_experiment(config))?;
    Ok(())
}

fn sample_logs(dir: &Path, repeats: usize) -> Result<Vec<Vec<u8>>, Box<dyn Error>> {
    let mut files = Vec::new();
    for r in 0..repeats {
        for name in ["samples.csv", "summary.csv", "map.json"] {
            files.push(std::fs::read(
                dir.join(format!("repeat_{r:03}")).join(name),
            )?);
        }
    }
    Ok(files)
}

fn determinism() -> Check {
    let dir = temp_dir()?;
    let mut configs = Vec::new();
    let mut cma = ExperimentConfig::preset("srn-cma")?;
    cma.sampler.ensemble_size = 100;
    cma.sampler.iterations = 40;
    configs.push(cma);
    let mut banana = ExperimentConfig::preset("rosenbrock")?;
    banana.sampler.ensemble_size = 50;
    banana.sampler.iterations = 120;
    configs.push(banana);
    let mut mh = ExperimentConfig::preset("rosenbrock")?;
    mh.sampler.algorithm = Algorithm::Tmh;
    mh.sampler.iterations = 3000;
    configs.push(mh);
    let mut identical = 0;
    for (i, mut config) in configs.into_iter().enumerate() {
        config.repeats = 3;
        config.seed = 5;
        let mut logs = Vec::new();
        for (run, threads) in [1, 4, 1].into_iter().enumerate() {
            config.output = dir.path().join(format!("{i}_{run}"));
            run_in_pool(&config, threads)?;
            logs.push(sample_logs(&config.output, config.repeats)?);
        }
        identical += usize::from(logs[0] == logs[1] && logs[0] == logs[2]);
    }
    Ok((
        identical == 3,
        format!("{identical}/3 experiments byte-identical across 1, 4 and 1 threads"),
    ))
}

fn main() {
    let mut tuned = None;
    let results = [
        report(1, "conjugate oracle", conjugate_oracle),
        report(2, "Rosenbrock ESS ratios", || rosenbrock_ess(&mut tuned)),
        report(3, "transport MH acceptance", transport_mh_acceptance),
        report(4, "pushforward quality", pushforward_quality),
        report(5, "map-fit Newton behavior", newton_behavior),
        report(6, "gradient/Hessian finite differences", finite_differences),
        report(7, "resampler properties", resampler_properties),
        report(8, "multiscale ordering", multiscale_ordering),
        report(9, "multiscale ESS ordering", multiscale_efficiency),
        report(10, "max-weight stability", || max_weight_stability(tuned)),
        report(11, "gene regulatory network", gene_regulatory),
        report(12, "determinism across thread counts", determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
