//! Samples a fully observed reaction-network posterior and compares the
//! estimated moments with the exact Gamma posterior.
//!
//! cargo run --release --example conjugate_check -- [algorithm] [beta] [M] [N] [T] [seed] [two-species|grn]

use etais::model::ProductPrior;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SamplerConfig};
use etais::srn::{build_posterior, conjugate_posterior, Experiment, SyntheticData};
use etais::transport::Preconditioner;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let algorithm: Algorithm = serde_json::from_str(&format!(
        "\"{}\"",
        args.first().map_or("etais", String::as_str)
    ))?;
    let beta: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let m: usize = args.get(2).map_or(Ok(500), |s| s.parse())?;
    let n: usize = args.get(3).map_or(Ok(400), |s| s.parse())?;
    let t_end: f64 = args.get(4).map_or(Ok(100.0), |s| s.parse())?;
    let seed: u64 = args.get(5).map_or(Ok(1), |s| s.parse())?;
    let network = args.get(6).map_or("two-species", String::as_str);

    let (data, prior) = match network {
        "grn" => (
            SyntheticData::gene_regulatory_default(t_end, seed)?,
            ProductPrior::gene_regulatory(),
        ),
        _ => (
            SyntheticData::two_species_default(t_end, seed)?,
            ProductPrior::two_species(),
        ),
    };
    let exact = conjugate_posterior(&data.stats, &prior)?;
    let target = build_posterior(
        Experiment::Full,
        &data.view(Experiment::Full)?,
        prior.clone(),
        None,
    )?;
    let config = SamplerConfig {
        algorithm,
        ensemble_size: m,
        iterations: n,
        beta,
        preconditioner: Preconditioner::Logarithmic,
        adapt_covariance: true,
        burn_in_fraction: 0.2,
        seed,
        ..SamplerConfig::default()
    };
    let initial = draw_initial(if algorithm.is_ensemble() { m } else { 1 }, seed, |rng| {
        prior.sample(rng)
    });
    let t = std::time::Instant::now();
    let log = run_sampler(&config, &target, initial)?;
    println!("ran in {:.2?}", t.elapsed());
    let from = config.burn_in_iterations();
    let (_, cov) = log.weighted_moments(from)?;
    let (mean, se) = log.batch_std_errors(from, 20, |k| k.to_vec())?;
    if algorithm.is_ensemble() {
        println!("ESS ratio {:.3}", log.mean_ess_ratio(from));
    } else {
        println!("acceptance {:.3}", log.acceptance_rate());
    }
    for (j, g) in exact.components.iter().enumerate() {
        println!(
            "k{}: mean {:.5} exact {:.5} z {:+.2} | var ratio {:.3}",
            j + 1,
            mean[j],
            g.mean(),
            (mean[j] - g.mean()) / se[j],
            cov[(j, j)] / g.variance()
        );
    }
    Ok(())
}
