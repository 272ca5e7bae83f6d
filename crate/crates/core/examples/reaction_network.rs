//! Simulates the two-species network with the Gillespie algorithm, reduces
//! the path to sufficient statistics and prints the exact Gamma posterior
//! next to the rates used for the simulation.
//!
//! cargo run --release --example reaction_network -- [T] [seed]

use etais::model::ProductPrior;
use etais::srn::{
    conjugate_posterior, project_to_slow, ssa_simulate, sufficient_stats, ReactionNetwork,
    TWO_SPECIES_RATES,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t_end: f64 = args.first().map_or(Ok(100.0), |s| s.parse())?;
    let seed: u64 = args.get(1).map_or(Ok(1), |s| s.parse())?;

    let network = ReactionNetwork::two_species(TWO_SPECIES_RATES)?;
    let mut rng = etais::rng::substream(seed, 0, 0);
    let path = ssa_simulate(&network, &[0, 0], t_end, &mut rng)?;
    println!("{} events up to T = {t_end}", path.events.len());

    let stats = sufficient_stats(&path, &network)?;
    let slow = project_to_slow(&path, &network)?;
    println!(
        "slow variable: {} births, {} deaths, time-average {:.2}",
        slow.births,
        slow.deaths,
        slow.occupancy / t_end
    );

    let posterior = conjugate_posterior(&stats, &ProductPrior::two_species())?;
    for (j, g) in posterior.components.iter().enumerate() {
        println!(
            "k{}: R = {:>7}, G = {:>11.2}, posterior {:.4} +- {:.4} (simulated with {})",
            j + 1,
            stats.r[j],
            stats.g[j],
            g.mean(),
            g.variance().sqrt(),
            TWO_SPECIES_RATES[j]
        );
    }
    Ok(())
}
