use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mag_core::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use mag_core::experiment::{self, SeedStats, Table};
use mag_core::graph::{load_graph, save_graph, validate_graph, Graph};
use mag_core::injection::inject_benchmark;
use mag_core::scoring::{self, ScoreConfig};
use mag_core::trainer::{train_with, TrainConfig};
use mag_core::Execution;
use serde_json::json;

use crate::config::{DatasetSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, write_json};
use crate::Common;

/// Graphs above this size are refused unless `--large` is given.
pub const LARGE_GRAPH_NODES: usize = 10_000;

struct Context {
    config: RunConfig,
    out: PathBuf,
    seeds: Vec<u64>,
    exec: Execution,
    large: bool,
}

impl Context {
    fn new(common: &Common) -> CliResult<Self> {
        let mut config = RunConfig::load(&common.config)?;
        if let Some(name) = &common.dataset {
            config.dataset = Some(name.clone());
            config.validate()?;
        }
        let out = common
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs"));
        output::ensure_dir(&out)?;
        let seeds = match common.seed {
            Some(s) => vec![s],
            None => config.seeds.clone(),
        };
        Ok(Context {
            config,
            out,
            seeds,
            exec: if common.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            large: common.large,
        })
    }

    fn load(&self, name: &str, spec: &DatasetSpec) -> CliResult<Graph> {
        let labels = spec.labels();
        let labels = labels.exists().then_some(labels);
        let g = load_graph(spec.edges(), spec.features(), labels.as_deref())?;
        if g.n() > LARGE_GRAPH_NODES {
            if !self.large {
                return Err(CliError::TooLarge {
                    name: name.to_string(),
                    nodes: g.n(),
                    limit: LARGE_GRAPH_NODES,
                });
            }
            eprintln!(
                "warning: {name} has {} nodes; expect hours of CPU time at the default rounds",
                g.n()
            );
        }
        Ok(g)
    }

    fn selected(&self) -> CliResult<(String, Graph)> {
        let (name, spec) = self.config.selected_dataset()?;
        Ok((name.to_string(), self.load(name, spec)?))
    }

    fn provenance(&self, command: &str) -> CliResult<()> {
        write_json(
            &self.out.join("provenance.json"),
            &output::provenance(command, &self.config, &self.seeds),
        )
    }

    fn score_config(&self, seed: u64) -> ScoreConfig {
        ScoreConfig {
            seed,
            ..self.config.score_config()
        }
    }

    /// Config for sweeps: hyperparameters from the file, augmentation only
    /// when given explicitly.
    fn template(&self) -> CliResult<TrainConfig> {
        let mut t = self.config.train_config()?;
        t.augmentation = self.config.augmentation.clone().unwrap_or_default();
        t.combination = mag_core::contrast::Preset::Cola.combination();
        Ok(t)
    }
}

fn seed_dir(out: &Path, seed: u64) -> CliResult<PathBuf> {
    let dir = out.join(format!("seed-{seed}"));
    output::ensure_dir(&dir)?;
    Ok(dir)
}

pub fn inject(common: &Common) -> CliResult<()> {
    let ctx = Context::new(common)?;
    ctx.provenance("inject")?;
    let names: Vec<String> = match &common.dataset {
        Some(n) => vec![n.clone()],
        None => ctx.config.datasets.keys().cloned().collect(),
    };
    for name in names {
        let spec = &ctx.config.datasets[&name];
        let g = ctx.load(&name, spec)?;
        let mut injection = ctx.config.injection_for(&name);
        if let Some(s) = common.seed {
            injection.seed = s;
        }
        let injected = inject_benchmark(&g, &injection)?;
        let dir = ctx.out.join(&name);
        output::ensure_dir(&dir)?;
        let target = DatasetSpec { dir: dir.clone() };
        save_graph(
            &injected,
            target.edges(),
            target.features(),
            Some(&target.labels()),
        )?;
        let report = validate_graph(&injected)?;
        write_json(
            &dir.join("provenance.json"),
            &json!({
                "source": spec.dir,
                "injection": injection,
                "report": report,
            }),
        )?;
        println!(
            "{name}: {} nodes, {} edges, {} anomalies ({} structural, {} contextual) -> {}",
            report.nodes,
            report.edges,
            report.anomalies,
            report.structural,
            report.contextual,
            dir.display()
        );
    }
    Ok(())
}

pub fn train(common: &Common) -> CliResult<()> {
    let ctx = Context::new(common)?;
    ctx.provenance("train")?;
    let (name, g) = ctx.selected()?;
    let base = ctx.config.train_config()?;
    for &seed in &ctx.seeds {
        let cfg = TrainConfig {
            seed,
            ..base.clone()
        };
        let dir = seed_dir(&ctx.out, seed)?;
        let (params, mut log) = train_with(&g, &cfg, ctx.exec, |e| {
            eprintln!("[{name} seed {seed}] epoch {} loss {:.6}", e.epoch, e.loss);
        })?;
        let ckpt = dir.join("checkpoint.bin");
        save_checkpoint(&ckpt, &params, &cfg)?;
        log.checkpoint = Some(ckpt.clone());
        output::write_train_log(&dir.join("train_log.csv"), &log)?;
        println!("seed {seed}: checkpoint {}", ckpt.display());
    }
    Ok(())
}

fn score_one(
    ctx: &Context,
    g: &Graph,
    ckpt: &Checkpoint,
    seed: u64,
    dir: &Path,
) -> CliResult<Option<f64>> {
    let scoring = ctx.score_config(seed);
    let report = scoring::score(g, &ckpt.params, &ckpt.config, &scoring, ctx.exec)?;
    output::write_scores(
        &dir.join("scores.csv"),
        &report,
        &ckpt.config.combination,
        g,
    )?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "auc": report.auc,
            "auc_percent": report.auc.map(|a| 100.0 * a),
            "rounds": report.rounds,
            "seed": seed,
            "combination": ckpt.config.combination.label(),
            "train_config": ckpt.config,
            "score_config": scoring,
        }),
    )?;
    match report.auc {
        Some(a) => println!("seed {seed}: AUC {:.2}% -> {}", 100.0 * a, dir.display()),
        None => println!("seed {seed}: scores -> {}", dir.display()),
    }
    Ok(report.auc)
}

pub fn score(common: &Common, checkpoint: Option<&Path>) -> CliResult<()> {
    let ctx = Context::new(common)?;
    ctx.provenance("score")?;
    let (_, g) = ctx.selected()?;
    if let Some(path) = checkpoint {
        let ckpt = load_checkpoint(path)?;
        let seed = common.seed.unwrap_or(ckpt.config.seed);
        score_one(&ctx, &g, &ckpt, seed, &ctx.out)?;
        return Ok(());
    }
    let mut aucs = Vec::new();
    for &seed in &ctx.seeds {
        let dir = ctx.out.join(format!("seed-{seed}"));
        let ckpt = load_checkpoint(&dir.join("checkpoint.bin"))?;
        if let Some(a) = score_one(&ctx, &g, &ckpt, seed, &dir)? {
            aucs.push(100.0 * a);
        }
    }
    if aucs.len() == ctx.seeds.len() {
        let stats = SeedStats::from_aucs(ctx.seeds.clone(), aucs);
        println!(
            "AUC over {} seeds: {:.2} ± {:.2}",
            stats.seeds.len(),
            stats.mean,
            stats.std
        );
        write_json(
            &ctx.out.join("summary.json"),
            &json!({
                "auc_percent_mean": stats.mean,
                "auc_percent_std": stats.std,
                "per_seed": stats,
                "rounds": ctx.config.rounds,
            }),
        )?;
    }
    Ok(())
}

pub fn sweep_single(common: &Common) -> CliResult<()> {
    let ctx = Context::new(common)?;
    ctx.provenance("sweep-single")?;
    let (name, g) = ctx.selected()?;
    let template = ctx.template()?;
    let mut sink = output::heatmap_sink(&ctx.out.join("heatmap.csv"))?;
    let mut sink_err = None;
    let cells = experiment::sweep_single(
        &g,
        &template,
        &ctx.score_config(0),
        &ctx.seeds,
        &experiment::all_pairs(),
        ctx.exec,
        |cell| {
            eprintln!("[{name}] [{},{}] {:.2}", cell.i, cell.j, cell.stats.mean);
            if let Err(e) = output::heatmap_row(&mut sink, cell) {
                sink_err = Some(e);
            }
            Ok(())
        },
    )?;
    if let Some(e) = sink_err {
        return Err(e);
    }
    for (scale, mean) in experiment::scale_means(&cells) {
        println!("{:<5} {:.2}", scale.short_name(), mean);
    }
    Ok(())
}

pub fn sweep_augmentation(common: &Common) -> CliResult<()> {
    let ctx = Context::new(common)?;
    ctx.provenance("sweep-augmentation")?;
    let (name, g) = ctx.selected()?;
    let template = ctx.template()?;
    let mut sink = output::augmentation_sink(&ctx.out.join("augmentation.csv"))?;
    let mut sink_err = None;
    experiment::sweep_augmentation(
        &g,
        &template,
        &ctx.score_config(0),
        &ctx.seeds,
        ctx.exec,
        |cell| {
            println!(
                "[{name}] {} {}: {:.2}",
                cell.combination, cell.augmentation, cell.stats.mean
            );
            if let Err(e) = output::augmentation_row(&mut sink, cell) {
                sink_err = Some(e);
            }
            Ok(())
        },
    )?;
    sink_err.map_or(Ok(()), Err)
}

pub fn reproduce(common: &Common, table: &str) -> CliResult<()> {
    let table = Table::parse(table)?;
    let ctx = Context::new(common)?;
    ctx.provenance(&format!("reproduce {}", table.name()))?;
    let wanted: Vec<&str> = experiment::references(table)
        .iter()
        .map(|r| r.dataset)
        .collect();
    let mut graphs = BTreeMap::new();
    for (name, spec) in &ctx.config.datasets {
        let key = name.to_ascii_lowercase();
        if !wanted.contains(&key.as_str()) {
            continue;
        }
        if key == "pubmed" && !ctx.large {
            eprintln!("skipping pubmed: pass --large to include it");
            continue;
        }
        graphs.insert(key, ctx.load(name, spec)?);
    }
    let template = ctx.template()?;
    let csv_path = ctx.out.join(format!("table_{}.csv", table.name()));
    let mut rows_sink = output::table_sink(&csv_path)?;
    let mut heat = if table == Table::T3 {
        Some(output::heatmap_sink(&ctx.out.join("heatmap.csv"))?)
    } else {
        None
    };
    let mut sink_err: Option<CliError> = None;
    let mut cell_err: Option<CliError> = None;
    let rows = experiment::reproduce(
        table,
        &graphs,
        &template,
        &ctx.score_config(0),
        &ctx.seeds,
        ctx.exec,
        |row| {
            println!(
                "{} {}: published {:.2}, reproduced {:.2} ± {:.2}",
                row.dataset, row.label, row.published, row.reproduced, row.std
            );
            if let Err(e) = output::table_row(&mut rows_sink, row) {
                sink_err = Some(e);
            }
            Ok(())
        },
        |cell| {
            eprintln!("[{},{}] {:.2}", cell.i, cell.j, cell.stats.mean);
            if let Some(h) = heat.as_mut() {
                if let Err(e) = output::heatmap_row(h, cell) {
                    cell_err = Some(e);
                }
            }
            Ok(())
        },
    )?;
    if let Some(e) = sink_err.or(cell_err) {
        return Err(e);
    }
    let md = output::table_markdown(&format!("Reproduction of {}", table.name()), &rows);
    let md_path = ctx.out.join(format!("table_{}.md", table.name()));
    fs::write(&md_path, md).map_err(|e| CliError::io(&md_path, e))?;
    Ok(())
}
