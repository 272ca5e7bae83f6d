//! Samples the Rosenbrock banana with a chosen sampler and reports the
//! steady-state ESS ratio (ensemble samplers) or acceptance rate (MH).
//!
//! cargo run --release --example rosenbrock -- [algorithm] [beta] [M] [N] [seed]

use etais::model::RosenbrockDensity;
use etais::samplers::{draw_initial, run_sampler, Algorithm, SamplerConfig};
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let algorithm: Algorithm = serde_json::from_str(&format!(
        "\"{}\"",
        args.first().map_or("tetais2", String::as_str)
    ))?;
    let beta: f64 = args.get(1).map_or(Ok(0.5), |s| s.parse())?;
    let m: usize = args.get(2).map_or(Ok(150), |s| s.parse())?;
    let n: usize = args.get(3).map_or(Ok(2000), |s| s.parse())?;
    let seed: u64 = args.get(4).map_or(Ok(1), |s| s.parse())?;

    let config = SamplerConfig {
        algorithm,
        ensemble_size: m,
        iterations: n,
        beta,
        seed,
        keep_samples: true,
        ..SamplerConfig::default()
    };
    let start = Normal::new(0.0, 1.0)?;
    let initial = draw_initial(m, seed, |rng| vec![start.sample(rng), start.sample(rng)]);
    let log = run_sampler(&config, &RosenbrockDensity, initial)?;
    let half = n / 2;
    let (mean, _) = log.weighted_moments(half)?;
    if algorithm.is_ensemble() {
        println!(
            "ESS ratio after iteration {half}: {:.3}",
            log.mean_ess_ratio(half)
        );
    } else {
        println!("acceptance rate: {:.3}", log.acceptance_rate());
    }
    let max_w: Vec<f64> = log.summaries[half..].iter().map(|s| s.max_weight).collect();
    let mut sorted = max_w.clone();
    sorted.sort_by(f64::total_cmp);
    println!(
        "median max weight {:.4}, worst {:.4}",
        sorted[sorted.len() / 2],
        sorted[sorted.len() - 1]
    );
    println!(
        "mean estimate ({:.3}, {:.3}); exact (1, 1.5)",
        mean[0], mean[1]
    );
    println!("map refits: {}", log.refits.len());
    if let Some(r) = log.refits.last() {
        println!(
            "last refit iterations {:?} converged {}",
            r.report.iterations, r.converged
        );
        println!("final map {:?}", log.final_map.coefficients);
    }
    Ok(())
}
