use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mag_core::contrast::Preset;
use mag_core::graph::Graph;
use mag_core::injection::{inject_benchmark, InjectionSpec};
use mag_core::model::ModelParams;
use mag_core::scoring::{score_rounds, ScoreConfig};
use mag_core::synthetic::PlantedPartition;
use mag_core::trainer::{train, TrainConfig};
use mag_core::Execution;

fn graph() -> Graph {
    let g = PlantedPartition {
        nodes: 1000,
        dim: 200,
        ..Default::default()
    }
    .generate()
    .expect("synthetic graph");
    inject_benchmark(
        &g,
        &InjectionSpec {
            clique_size: 10,
            num_cliques: 3,
            contextual_count: 30,
            candidate_pool: 50,
            seed: 1,
        },
    )
    .expect("injection")
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn training_epoch(c: &mut Criterion) {
    let g = graph();
    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    for preset in [Preset::Cola, Preset::Gradate] {
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::from_preset(preset)
        };
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, preset.name()), &cfg, |b, cfg| {
                b.iter(|| train(&g, cfg, exec).expect("training"))
            });
        }
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let g = graph();
    let cfg = TrainConfig::from_preset(Preset::MMag);
    let params = ModelParams::init(g.dim(), cfg.hidden_dim, cfg.combination.len(), 0);
    let sc = ScoreConfig {
        rounds: 8,
        ..Default::default()
    };
    let mut group = c.benchmark_group("score_rounds_8");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| score_rounds(&g, &params, &cfg, &sc, exec).expect("scoring"))
        });
    }
    group.finish();
}

criterion_group!(benches, training_epoch, scoring);
criterion_main!(benches);
