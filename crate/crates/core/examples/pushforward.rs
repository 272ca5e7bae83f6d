//! Fits a cubic map to exact Rosenbrock samples and checks how close the
//! pushforward sample is to a standard normal.
//!
//! cargo run --release --example pushforward -- [samples] [beta_reg]

use etais::model::RosenbrockDensity;
use etais::rng::substream;
use etais::transport::{fit_map_to_samples, FitOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(1_000_000), |s| s.parse())?;
    let beta_reg: f64 = args.get(1).map_or(Ok(1e-4), |s| s.parse())?;
    let mut rng = substream(7, 0, 0);
    let states: Vec<Vec<f64>> = (0..n)
        .map(|_| RosenbrockDensity.sample(&mut rng).to_vec())
        .collect();
    let weights = vec![1.0; n];
    let options = FitOptions {
        order: 3,
        beta_reg,
        sample_cap: n,
        ..FitOptions::default()
    };
    let t = std::time::Instant::now();
    let (map, report) = fit_map_to_samples(&states, &weights, &options, None)?;
    println!(
        "fit in {:.2?}, Newton iterations {:?}",
        t.elapsed(),
        report.iterations
    );
    for c in 0..2 {
        let pushed: Vec<f64> = states
            .iter()
            .map(|s| map.evaluate(s).map(|r| r[c]))
            .collect::<Result<_, _>>()?;
        let mean = pushed.iter().sum::<f64>() / n as f64;
        let sd = (pushed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        println!(
            "dimension {}: pushforward mean {mean:+.4}, std {sd:.4}",
            c + 1
        );
    }
    let mut worst: f64 = 0.0;
    for s in states.iter().take(1000) {
        let back = map.invert(&map.evaluate(s)?)?;
        worst = worst.max((back[0] - s[0]).abs().max((back[1] - s[1]).abs()));
    }
    println!("round-trip error on 1000 samples: {worst:.2e}");
    Ok(())
}
