//! Multi-seed evaluation, the single-pair and augmentation sweeps, and the
//! preset comparisons behind the reproduced tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentStep;
use crate::contrast::{default_augmentation, CombinationConfig, ContrastPair, Preset, Scale};
use crate::error::{MagError, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::scoring::{score, ScoreConfig, ScoreReport};
use crate::trainer::{train, TrainConfig, TrainLog};

/// AUCs of one configuration over several seeds, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub seeds: Vec<u64>,
    pub aucs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (0 for a single seed).
    pub std: f64,
}

impl SeedStats {
    pub fn from_aucs(seeds: Vec<u64>, aucs: Vec<f64>) -> Self {
        let n = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let std = if aucs.len() > 1 {
            (aucs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        SeedStats {
            seeds,
            aucs,
            mean,
            std,
        }
    }
}

/// One trained-and-scored model.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub log: TrainLog,
    pub report: ScoreReport,
}

/// Trains and scores once, with `seed` driving both phases.
pub fn run_once(
    g: &Graph,
    cfg: &TrainConfig,
    scoring: &ScoreConfig,
    seed: u64,
    exec: Execution,
) -> Result<RunOutcome> {
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    let (params, log) = train(g, &cfg, exec)?;
    let scoring = ScoreConfig {
        seed,
        ..scoring.clone()
    };
    let report = score(g, &params, &cfg, &scoring, exec)?;
    Ok(RunOutcome { seed, log, report })
}

/// Mean and spread of the AUC (percent) over `seeds`.
pub fn evaluate(
    g: &Graph,
    cfg: &TrainConfig,
    scoring: &ScoreConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<SeedStats> {
    if seeds.is_empty() {
        return Err(MagError::Config("at least one seed is required".into()));
    }
    if g.anomaly_mask().is_none() {
        return Err(MagError::Config(
            "evaluation needs an anomaly-labelled graph".into(),
        ));
    }
    let mut aucs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let out = run_once(g, cfg, scoring, seed, exec)?;
        let auc = out
            .report
            .auc
            .ok_or_else(|| MagError::Undefined("labels contain a single class".into()))?;
        aucs.push(100.0 * auc);
    }
    Ok(SeedStats::from_aucs(seeds.to_vec(), aucs))
}

/// `template` with its combination replaced. Augmentation is kept when the
/// new combination needs it (falling back to masked features plus removed
/// edges) and dropped otherwise.
pub fn with_combination(template: &TrainConfig, combination: CombinationConfig) -> TrainConfig {
    let augmentation = if !combination.uses_augmented() {
        Vec::new()
    } else if template.augmentation.is_empty() {
        default_augmentation()
    } else {
        template.augmentation.clone()
    };
    TrainConfig {
        combination,
        augmentation,
        ..template.clone()
    }
}

pub fn with_preset(template: &TrainConfig, preset: Preset) -> TrainConfig {
    with_combination(template, preset.combination())
}

/// The 66 unordered pairs of distinct views, row-major.
pub fn all_pairs() -> Vec<ContrastPair> {
    (1..=12u8)
        .flat_map(|i| ((i + 1)..=12).map(move |j| ContrastPair::new(i, j).expect("valid ids")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub i: u8,
    pub j: u8,
    pub scale: Scale,
    pub stats: SeedStats,
}

/// Trains and scores every single pair; `on_cell` sees each result as soon
/// as it is available.
pub fn sweep_single<F: FnMut(&SweepCell) -> Result<()>>(
    g: &Graph,
    template: &TrainConfig,
    scoring: &ScoreConfig,
    seeds: &[u64],
    pairs: &[ContrastPair],
    exec: Execution,
    mut on_cell: F,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let combination = CombinationConfig::uniform(&[(pair.first().get(), pair.second().get())])?;
        let cfg = with_combination(template, combination);
        let cell = SweepCell {
            i: pair.first().get(),
            j: pair.second().get(),
            scale: pair.scale(),
            stats: evaluate(g, &cfg, scoring, seeds, exec)?,
        };
        on_cell(&cell)?;
        cells.push(cell);
    }
    Ok(cells)
}

/// Mean cell AUC per contrast scale (scales without cells are omitted).
pub fn scale_means(cells: &[SweepCell]) -> BTreeMap<Scale, f64> {
    let mut acc: BTreeMap<Scale, (f64, usize)> = BTreeMap::new();
    for c in cells {
        let e = acc.entry(c.scale).or_default();
        e.0 += c.stats.mean;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(s, (sum, n))| (s, sum / n as f64))
        .collect()
}

/// The five augmentations compared in the augmentation sweep.
pub fn augmentation_variants() -> Vec<(&'static str, Vec<AugmentStep>)> {
    let mf = AugmentStep::MaskFeatures {
        p: 0.2,
        per_node: false,
    };
    let re = AugmentStep::RemoveEdges { p: 0.2 };
    vec![
        ("MF", vec![mf.clone()]),
        ("RE", vec![re.clone()]),
        ("MF+RE", vec![mf, re]),
        (
            "PPR",
            vec![AugmentStep::Ppr {
                alpha: 0.15,
                keep_eps: 1e-4,
            }],
        ),
        (
            "HK",
            vec![AugmentStep::Heat {
                t: 5.0,
                keep_eps: 1e-4,
            }],
        ),
    ]
}

/// `[1,3]+[7,9]` and `[1,3]+[10,12]`, weighted (0.3, 0.7).
pub fn augmentation_combinations() -> Vec<CombinationConfig> {
    [[(1, 3), (7, 9)], [(1, 3), (10, 12)]]
        .iter()
        .map(|p| CombinationConfig::new(p, &[0.3, 0.7]).expect("valid"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationCell {
    pub combination: String,
    pub augmentation: String,
    pub stats: SeedStats,
}

pub fn sweep_augmentation<F: FnMut(&AugmentationCell) -> Result<()>>(
    g: &Graph,
    template: &TrainConfig,
    scoring: &ScoreConfig,
    seeds: &[u64],
    exec: Execution,
    mut on_cell: F,
) -> Result<Vec<AugmentationCell>> {
    let mut cells = Vec::new();
    for combination in augmentation_combinations() {
        for (name, steps) in augmentation_variants() {
            let cfg = TrainConfig {
                combination: combination.clone(),
                augmentation: steps,
                ..template.clone()
            };
            let cell = AugmentationCell {
                combination: combination.label(),
                augmentation: name.to_string(),
                stats: evaluate(g, &cfg, scoring, seeds, exec)?,
            };
            on_cell(&cell)?;
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Tables that can be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    T2,
    T3,
    T4,
    T5,
}

impl Table {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t2" => Ok(Table::T2),
            "t3" => Ok(Table::T3),
            "t4" => Ok(Table::T4),
            "t5" => Ok(Table::T5),
            _ => Err(MagError::Config(format!(
                "unknown table {s:?} (expected t2..t5)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Table::T2 => "t2",
            Table::T3 => "t3",
            Table::T4 => "t4",
            Table::T5 => "t5",
        }
    }
}

/// What a reference row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Preset(Preset),
    ScaleMean(Scale),
}

/// A published value to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub dataset: &'static str,
    pub label: &'static str,
    pub measure: Measure,
    pub published: f64,
}

fn preset_ref(dataset: &'static str, label: &'static str, p: Preset, v: f64) -> Reference {
    Reference {
        dataset,
        label,
        measure: Measure::Preset(p),
        published: v,
    }
}

/// Published AUCs (percent, five-seed means) for each table.
pub fn references(table: Table) -> Vec<Reference> {
    match table {
        Table::T2 => vec![
            preset_ref("cora", "CoLA", Preset::Cola, 90.3),
            preset_ref("cora", "ANEMONE", Preset::Anemone, 91.1),
            preset_ref("cora", "GRADATE", Preset::Gradate, 89.5),
        ],
        Table::T3 => [
            (Scale::NodeSubgraph, "N-NS", 90.96),
            (Scale::NodeNode, "NN", 86.03),
            (Scale::SubgraphSubgraph, "SS", 73.81),
            (Scale::MaskedNodeSubgraph, "M-NS", 69.66),
        ]
        .into_iter()
        .map(|(s, label, v)| Reference {
            dataset: "cora",
            label,
            measure: Measure::ScaleMean(s),
            published: v,
        })
        .collect(),
        Table::T4 => {
            let mut out = Vec::new();
            for (ds, vals) in [
                ("cora", [90.3, 90.0, 91.1, 91.7]),
                ("citeseer", [91.6, 90.0, 92.2, 92.5]),
            ] {
                for ((label, p), v) in [
                    ("Origin", Preset::Cola),
                    ("M-S", Preset::MS),
                    ("M-SG", Preset::MSG),
                    ("M-G", Preset::MG),
                ]
                .into_iter()
                .zip(vals)
                {
                    out.push(preset_ref(ds, label, p, v));
                }
            }
            out
        }
        Table::T5 => {
            let mut out = Vec::new();
            for (ds, l, m) in [
                ("cora", 91.4, 91.7),
                ("citeseer", 91.8, 92.5),
                ("pubmed", 95.7, 96.6),
            ] {
                out.push(preset_ref(ds, "L-MAG", Preset::LMag, l));
                out.push(preset_ref(ds, "M-MAG", Preset::MMag, m));
            }
            out
        }
    }
}

/// A reference row next to its reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub label: String,
    pub published: f64,
    pub reproduced: f64,
    /// Spread over seeds (preset rows) or over cells (scale rows).
    pub std: f64,
    pub delta: f64,
}

/// Runs everything `table` needs on the datasets available in `graphs`;
/// rows whose dataset is missing are skipped. `on_row` sees each finished
/// row; sweep cells of the single-pair table go to `on_cell`.
#[allow(clippy::too_many_arguments)]
pub fn reproduce<R, C>(
    table: Table,
    graphs: &BTreeMap<String, Graph>,
    template: &TrainConfig,
    scoring: &ScoreConfig,
    seeds: &[u64],
    exec: Execution,
    mut on_row: R,
    mut on_cell: C,
) -> Result<Vec<ComparisonRow>>
where
    R: FnMut(&ComparisonRow) -> Result<()>,
    C: FnMut(&SweepCell) -> Result<()>,
{
    let refs = references(table);
    let mut rows = Vec::new();
    let mut sweeps: BTreeMap<&str, Vec<SweepCell>> = BTreeMap::new();
    for r in &refs {
        let Some(g) = graphs.get(r.dataset) else {
            continue;
        };
        let (reproduced, std) = match r.measure {
            Measure::Preset(p) => {
                let s = evaluate(g, &with_preset(template, p), scoring, seeds, exec)?;
                (s.mean, s.std)
            }
            Measure::ScaleMean(scale) => {
                if !sweeps.contains_key(r.dataset) {
                    let cells = sweep_single(
                        g,
                        template,
                        scoring,
                        seeds,
                        &all_pairs(),
                        exec,
                        &mut on_cell,
                    )?;
                    sweeps.insert(r.dataset, cells);
                }
                let vals: Vec<f64> = sweeps[r.dataset]
                    .iter()
                    .filter(|c| c.scale == scale)
                    .map(|c| c.stats.mean)
                    .collect();
                let s = SeedStats::from_aucs(Vec::new(), vals);
                (s.mean, s.std)
            }
        };
        let row = ComparisonRow {
            dataset: r.dataset.to_string(),
            label: r.label.to_string(),
            published: r.published,
            reproduced,
            std,
            delta: reproduced - r.published,
        };
        on_row(&row)?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MagError::Config(format!(
            "none of the datasets needed for {} were supplied",
            table.name()
        )));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_six_pairs() {
        let pairs = all_pairs();
        assert_eq!(pairs.len(), 66);
        let mut counts: BTreeMap<Scale, usize> = BTreeMap::new();
        for p in &pairs {
            *counts.entry(p.scale()).or_default() += 1;
        }
        assert_eq!(counts.values().sum::<usize>(), 66);
        // 4 subgraph views, 4 masked views, 4 node views
        assert_eq!(counts[&Scale::SubgraphSubgraph], 6);
        assert_eq!(counts[&Scale::NodeSubgraph], 16);
        assert_eq!(counts[&Scale::MaskedNodeSubgraph], 16);
        assert_eq!(counts[&Scale::NodeNode], 28);
    }

    #[test]
    fn preset_swap_handles_augmentation() {
        let template = TrainConfig::from_preset(Preset::Cola);
        assert!(with_preset(&template, Preset::LMag).augmentation.len() == 2);
        let aug = TrainConfig::from_preset(Preset::LMag);
        assert!(with_preset(&aug, Preset::Cola).augmentation.is_empty());
    }

    #[test]
    fn reference_tables() {
        assert_eq!(references(Table::T2).len(), 3);
        assert_eq!(references(Table::T3).len(), 4);
        assert_eq!(references(Table::T4).len(), 8);
        assert_eq!(references(Table::T5).len(), 6);
        assert!(Table::parse("t6").is_err());
    }

    #[test]
    fn seed_stats() {
        let s = SeedStats::from_aucs(vec![0, 1], vec![90.0, 92.0]);
        assert_eq!(s.mean, 91.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
    }
}
