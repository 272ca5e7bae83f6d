//! Infers the eight rates of the gene regulatory network from observations
//! of the total protein level only, with the quasi-equilibrium switch model
//! plugged in for the unobserved gene states.
//!
//! cargo run --release --example gene_regulatory -- [T] [M] [N] [seed]

use std::sync::Arc;

use etais::diagnostics::marginal_likelihood;
use etais::model::ProductPrior;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SamplerConfig};
use etais::srn::{build_posterior, Experiment, QeaGeneSwitch, SyntheticData, GRN_RATES};
use etais::transport::Preconditioner;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t_end: f64 = args.first().map_or(Ok(500.0), |s| s.parse())?;
    let m: usize = args.get(1).map_or(Ok(400), |s| s.parse())?;
    let n: usize = args.get(2).map_or(Ok(150), |s| s.parse())?;
    let seed: u64 = args.get(3).map_or(Ok(1), |s| s.parse())?;

    let data = SyntheticData::gene_regulatory_default(t_end, seed)?;
    let prior = ProductPrior::gene_regulatory();
    let target = build_posterior(
        Experiment::Grn,
        &data.view(Experiment::Grn)?,
        prior.clone(),
        Some(Arc::new(QeaGeneSwitch::default())),
    )?;
    let config = SamplerConfig {
        algorithm: Algorithm::Tetais2,
        ensemble_size: m,
        iterations: n,
        beta: 0.5,
        preconditioner: Preconditioner::Logarithmic,
        map_update_interval: 10,
        adapt_covariance: true,
        burn_in_fraction: 0.2,
        seed,
        ..SamplerConfig::default()
    };
    let t = std::time::Instant::now();
    let log = run_sampler(
        &config,
        &target,
        draw_initial(m, seed, |rng| prior.sample(rng)),
    )?;
    let from = config.burn_in_iterations();
    let blocks: Vec<Vec<f64>> = log.samples[from..]
        .iter()
        .map(|s| s.log_weights.clone())
        .collect();
    let z = marginal_likelihood(&blocks)?;
    println!(
        "{n} iterations in {:.1?}: ESS/M {:.3}, log evidence {:.2} (rel. se {:.3})",
        t.elapsed(),
        log.mean_ess_ratio(from),
        z.log_evidence,
        z.relative_std_error
    );
    let (mean, cov) = log.weighted_moments(from)?;
    for (j, truth) in GRN_RATES.iter().enumerate() {
        println!(
            "k{}: {:>10.4} +- {:<9.4} prior mean {:>9.4}, simulated with {truth}",
            j + 1,
            mean[j],
            cov[(j, j)].sqrt(),
            prior.components[j].mean()
        );
    }
    Ok(())
}
