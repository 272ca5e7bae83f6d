//! Compares the full two-species model with its QEA and CMA reductions on
//! synthetic data: evidences, and the marginal of the CMA effective
//! degradation rate under each posterior.
//!
//! cargo run --release --example model_comparison -- [datasets] [T] [algorithm] [beta] [M] [N]

use etais::diagnostics::{marginal_likelihood, weighted_mode, weighted_quantile};
use etais::model::ProductPrior;
use etais::rng::substream;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SampleLog, SamplerConfig};
use etais::srn::{
    build_posterior, conjugate_posterior, full_model_slow_log_evidence, EffectiveRate,
    EffectiveVariant, Experiment, SyntheticData,
};
use etais::transport::Preconditioner;

fn cma_rate(k: &[f64]) -> f64 {
    EffectiveVariant::Cma.effective_rate(k)
}

/// Pooled post-burn-in values of `k̂4^CMA` with their relative weights.
fn functional_sample(log: &SampleLog, from: usize) -> (Vec<f64>, Vec<f64>) {
    let kept = &log.samples[from..];
    let max = kept
        .iter()
        .flat_map(|s| s.log_weights.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    kept.iter()
        .flat_map(|s| s.states.iter().zip(&s.log_weights))
        .map(|(k, lw)| (cma_rate(k), (lw - max).exp()))
        .unzip()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let datasets: u64 = args.first().map_or(Ok(5), |s| s.parse())?;
    let t_end: f64 = args.get(1).map_or(Ok(100.0), |s| s.parse())?;
    let algorithm: Algorithm = serde_json::from_str(&format!(
        "\"{}\"",
        args.get(2).map_or("tetais1", String::as_str)
    ))?;
    let beta: f64 = args.get(3).map_or(Ok(0.5), |s| s.parse())?;
    let m: usize = args.get(4).map_or(Ok(500), |s| s.parse())?;
    let n: usize = args.get(5).map_or(Ok(200), |s| s.parse())?;

    let prior = ProductPrior::two_species();
    for seed in 1..=datasets {
        let data = SyntheticData::two_species_default(t_end, seed)?;
        let log_full = full_model_slow_log_evidence(&data.stats, &prior)?;
        let exact = conjugate_posterior(&data.stats, &prior)?;
        let mut rng = substream(seed, u64::MAX, 0);
        let full_draws: Vec<f64> = (0..100_000)
            .map(|_| cma_rate(&exact.sample(&mut rng)))
            .collect();
        let full_mode = weighted_mode(&full_draws, &vec![1.0; full_draws.len()], 60)?;
        println!("dataset {seed}: log Z full {log_full:.3}, full mode of k4_cma {full_mode:.4}");

        for experiment in [Experiment::Cma, Experiment::Qea] {
            let target = build_posterior(experiment, &data.view(experiment)?, prior.clone(), None)?;
            let config = SamplerConfig {
                algorithm,
                ensemble_size: m,
                iterations: n,
                beta,
                preconditioner: Preconditioner::Logarithmic,
                map_update_interval: 10,
                adapt_covariance: true,
                burn_in_fraction: 0.2,
                seed,
                ..SamplerConfig::default()
            };
            let t = std::time::Instant::now();
            let initial = draw_initial(m, seed, |rng| prior.sample(rng));
            let log = run_sampler(&config, &target, initial)?;
            let from = config.burn_in_iterations();
            let blocks: Vec<Vec<f64>> = log.samples[from..]
                .iter()
                .map(|s| s.log_weights.clone())
                .collect();
            let z = marginal_likelihood(&blocks)?;
            let (values, weights) = functional_sample(&log, from);
            let q25 = weighted_quantile(&values, &weights, 0.25)?;
            let q75 = weighted_quantile(&values, &weights, 0.75)?;
            let mode = weighted_mode(&values, &weights, 60)?;
            let (mean_f, _) = log.batch_std_errors(from, 10, |k| {
                let f = cma_rate(k);
                vec![f, f * f]
            })?;
            let sd = (mean_f[1] - mean_f[0] * mean_f[0]).max(0.0).sqrt();
            println!(
                "  {experiment:?}: log Z {:.3} (rel se {:.3}) ESS/M {:.3} | k4_cma mode {mode:.4} sd {sd:.4} IQR [{q25:.4}, {q75:.4}] | {:.1?}",
                z.log_evidence,
                z.relative_std_error,
                log.mean_ess_ratio(from),
                t.elapsed()
            );
        }
    }
    Ok(())
}
