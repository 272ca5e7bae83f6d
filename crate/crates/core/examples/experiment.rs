//! Drives the experiment runner from code: tunes the proposal scale of a
//! preset, runs the repeats and prints the pooled metrics. With `--presets
//! DIR` it only writes every built-in configuration to DIR as JSON.
//!
//! cargo run --release --example experiment -- [preset] [output-dir]
//! cargo run --release --example experiment -- --presets configs

use std::collections::BTreeMap;
use std::path::PathBuf;

use etais::cli::{run_experiment, tune, ExperimentConfig, PRESETS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.first().map(String::as_str) == Some("--presets") {
        let dir = PathBuf::from(args.get(1).map_or("configs", String::as_str));
        std::fs::create_dir_all(&dir)?;
        for name in PRESETS {
            let json = serde_json::to_string_pretty(&ExperimentConfig::preset(name)?)?;
            std::fs::write(dir.join(format!("{name}.json")), json + "\n")?;
        }
        println!("wrote {} presets to {}", PRESETS.len(), dir.display());
        return Ok(());
    }
    let preset = args.first().map_or("srn-cma", String::as_str);
    let out = args.get(1).map_or_else(
        || std::env::temp_dir().join("etais-experiment"),
        PathBuf::from,
    );

    let mut config = ExperimentConfig::preset(preset)?;
    config.repeats = 4;
    config.output = out.join("tune");
    config.tune.pilot_iterations = config.sampler.iterations / 2;
    let tuned = tune(&config)?;
    for p in &tuned.pilots {
        println!("beta {:<5} pilot metric {:?}", p.beta, p.metric);
    }
    println!(
        "selected beta {} (unimodal curve: {})",
        tuned.selected, tuned.unimodal
    );

    let mut config = tuned.resolved;
    config.output = out.join("run");
    let report = run_experiment(&config)?;
    let mut pooled: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in &report.metrics {
        if !matches!(
            row.metric.as_str(),
            "mahalanobis" | "l2_error" | "outside_mass"
        ) {
            pooled
                .entry(row.metric.as_str())
                .or_default()
                .push(row.value);
        }
    }
    for (metric, values) in pooled {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!("{metric:<20} mean over {} rows {mean:.6}", values.len());
    }
    println!("artifacts in {}", report.output.display());
    Ok(())
}
