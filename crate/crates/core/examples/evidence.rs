//! Estimates the evidence of a fully observed reaction path from the ETAIS
//! weights and follows the Mahalanobis distance of the running mean from the
//! exact posterior mean as samples accumulate.
//!
//! cargo run --release --example evidence -- [M] [N] [seed]

use etais::diagnostics::{checkpoints, mahalanobis_convergence, marginal_likelihood, RunningMean};
use etais::model::ProductPrior;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SamplerConfig};
use etais::srn::{
    build_posterior, channel_log_evidence, conjugate_posterior, Experiment, SyntheticData,
};
use etais::transport::Preconditioner;
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().map_or(Ok(500), |s| s.parse())?;
    let n: usize = args.get(1).map_or(Ok(200), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(1), |s| s.parse())?;

    let data = SyntheticData::two_species_default(100.0, seed)?;
    let prior = ProductPrior::two_species();
    let target = build_posterior(
        Experiment::Full,
        &data.view(Experiment::Full)?,
        prior.clone(),
        None,
    )?;
    let config = SamplerConfig {
        algorithm: Algorithm::Etais,
        ensemble_size: m,
        iterations: n,
        beta: 1.0,
        preconditioner: Preconditioner::Logarithmic,
        adapt_covariance: true,
        burn_in_fraction: 0.2,
        seed,
        ..SamplerConfig::default()
    };
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
    let estimate = marginal_likelihood(&blocks)?;
    let exact: f64 = (0..4)
        .map(|j| channel_log_evidence(&data.stats, j, &prior.components[j]))
        .sum();
    println!(
        "log evidence {:.4} (rel. se {:.2e}), exact {exact:.4}",
        estimate.log_evidence + data.stats.log_constant(),
        estimate.relative_std_error
    );

    let post = conjugate_posterior(&data.stats, &prior)?;
    let mu = post.means();
    let sigma = DMatrix::from_diagonal(&DVector::from_iterator(
        4,
        post.components.iter().map(|g| g.variance()),
    ));
    let total = (n - from) * m;
    let counts = checkpoints(total, 2);
    let mut running = RunningMean::new(4, counts.clone());
    for s in &log.samples[from..] {
        running.push_ensemble(s);
    }
    let distance = mahalanobis_convergence(&[running.recorded().to_vec()], &mu, &sigma)?;
    for (count, d) in counts.iter().zip(distance) {
        println!("{count:>8} samples: Mahalanobis distance {d:.4}");
    }
    Ok(())
}
