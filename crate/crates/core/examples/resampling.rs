//! Resamples one importance-weighted ensemble with every scheme and compares
//! the first two moments of the outputs with the weighted input.
//!
//! cargo run --release --example resampling -- [M] [seed]

use etais::resampling::{etpf_1d, ResampleRequest, Resampler, SpaceTag};
use etais::rng::substream;
use rand_distr::{Distribution, Normal};

fn moments(points: &[Vec<f64>], weights: &[f64], c: usize) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = points
        .iter()
        .zip(weights)
        .map(|(p, w)| w * p[c])
        .sum::<f64>()
        / total;
    let var = points
        .iter()
        .zip(weights)
        .map(|(p, w)| w * (p[c] - mean).powi(2))
        .sum::<f64>()
        / total;
    (mean, var)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().map_or(Ok(200), |s| s.parse())?;
    let seed: u64 = args.get(1).map_or(Ok(1), |s| s.parse())?;

    // standard normal draws weighted towards N((1, -0.5), 0.5 I)
    let mut rng = substream(seed, 0, 0);
    let normal = Normal::new(0.0, 1.0)?;
    let states: Vec<Vec<f64>> = (0..m)
        .map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let weights: Vec<f64> = states
        .iter()
        .map(|x| {
            let target = -((x[0] - 1.0).powi(2) + (x[1] + 0.5).powi(2));
            let proposal = -0.5 * (x[0] * x[0] + x[1] * x[1]);
            (target - proposal).exp()
        })
        .collect();
    let even = vec![1.0; m];
    println!(
        "{m} weighted points, ESS {:.1}",
        etais::diagnostics::ess(&weights)
    );
    for c in 0..2 {
        let (mean, var) = moments(&states, &weights, c);
        println!("  input     theta_{}: mean {mean:+.4} var {var:.4}", c + 1);
    }

    for (name, resampler, space) in [
        ("multinomial", Resampler::Multinomial, SpaceTag::Target),
        ("mt", Resampler::Mt, SpaceTag::Target),
        (
            "dimensionwise",
            Resampler::Dimensionwise,
            SpaceTag::Reference,
        ),
    ] {
        let request = ResampleRequest::new(&states, &weights, space)?;
        let out = resampler.resample(&request, &mut substream(seed, 1, 0))?;
        for c in 0..2 {
            let (mean, var) = moments(&out, &even, c);
            println!("  {name:<13} theta_{}: mean {mean:+.4} var {var:.4}", c + 1);
        }
    }

    let first: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let transformed = etpf_1d(&first, &weights)?;
    let mean = transformed.iter().sum::<f64>() / m as f64;
    println!(
        "  1-D transform of theta_1: mean {mean:+.4}, output sorted: {}",
        transformed.windows(2).all(|w| w[0] <= w[1])
    );
    Ok(())
}
