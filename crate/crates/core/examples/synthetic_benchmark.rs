//! Trains and scores one preset on an injected planted-partition graph.
//!
//! cargo run --release -p mag-core --example synthetic_benchmark -- m-mag 100 64

use std::time::Instant;

use mag_core::contrast::Preset;
use mag_core::injection::{inject_benchmark, InjectionSpec};
use mag_core::scoring::{score, ScoreConfig};
use mag_core::synthetic::PlantedPartition;
use mag_core::trainer::{train, TrainConfig};
use mag_core::Execution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = Preset::parse(&args.next().unwrap_or_else(|| "cola".into()))?;
    let epochs: usize = args.next().map_or(Ok(100), |s| s.parse())?;
    let rounds: usize = args.next().map_or(Ok(64), |s| s.parse())?;

    let base = PlantedPartition {
        nodes: 1000,
        dim: 200,
        ..Default::default()
    }
    .generate()?;
    let spec = InjectionSpec {
        clique_size: 10,
        num_cliques: 3,
        contextual_count: 30,
        candidate_pool: 50,
        seed: 1,
    };
    let g = inject_benchmark(&base, &spec)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::from_preset(preset)
    };

    let start = Instant::now();
    let (params, log) = train(&g, &cfg, Execution::Parallel)?;
    let losses = log.losses();
    println!(
        "{}: trained {epochs} epochs in {:.1} s, loss {:.4} -> {:.4}",
        preset.name(),
        start.elapsed().as_secs_f64(),
        losses[0],
        losses[losses.len() - 1]
    );
    let start = Instant::now();
    let sc = ScoreConfig {
        rounds,
        ..Default::default()
    };
    let report = score(&g, &params, &cfg, &sc, Execution::Parallel)?;
    println!(
        "scored {rounds} rounds in {:.1} s, AUC {:.2}%",
        start.elapsed().as_secs_f64(),
        100.0 * report.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}
