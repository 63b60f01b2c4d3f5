//! CSV and JSON artifacts written by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use mag_core::contrast::CombinationConfig;
use mag_core::experiment::{AugmentationCell, ComparisonRow, SweepCell};
use mag_core::graph::{AnomalyKind, Graph};
use mag_core::scoring::ScoreReport;
use mag_core::trainer::TrainLog;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// A CSV file that is flushed after every row, so partial sweeps survive.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
        writer
            .write_record(header)
            .map_err(|e| CliError::csv(path, e))?;
        let mut sink = CsvSink {
            path: path.to_path_buf(),
            writer,
        };
        sink.flush()?;
        Ok(sink)
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::csv(&self.path, e))?;
        self.flush()
    }

    fn flush(&mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn write_train_log(path: &Path, log: &TrainLog) -> CliResult<()> {
    let mut sink = CsvSink::create(path, &["epoch", "loss", "seconds"])?;
    for e in &log.epochs {
        sink.row([
            e.epoch.to_string(),
            e.loss.to_string(),
            e.seconds.to_string(),
        ])?;
    }
    Ok(())
}

fn pair_tag(combination: &CombinationConfig, k: usize) -> String {
    let p = combination.pairs()[k];
    format!("{}_{}", p.first(), p.second())
}

/// `node, f, mean_<i>_<j>, std_<i>_<j> ..., label, anomalous`.
pub fn write_scores(
    path: &Path,
    report: &ScoreReport,
    combination: &CombinationConfig,
    g: &Graph,
) -> CliResult<()> {
    let mut header = vec!["node".to_string(), "f".to_string()];
    for k in 0..combination.len() {
        let tag = pair_tag(combination, k);
        header.push(format!("mean_{tag}"));
        header.push(format!("std_{tag}"));
    }
    header.push("label".into());
    header.push("anomalous".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut sink = CsvSink::create(path, &header_refs)?;
    let labels = g.labels();
    for (i, f) in report.scores.iter().enumerate() {
        let mut row = vec![i.to_string(), f.to_string()];
        for pair in &report.per_pair {
            row.push(pair[i].mean.to_string());
            row.push(pair[i].std.to_string());
        }
        match labels {
            Some(l) => {
                row.push(l[i].as_str().to_string());
                row.push(u8::from(l[i] != AnomalyKind::Normal).to_string());
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        sink.row(row)?;
    }
    Ok(())
}

pub fn heatmap_sink(path: &Path) -> CliResult<CsvSink> {
    CsvSink::create(path, &["i", "j", "scale", "auc", "auc_std"])
}

pub fn heatmap_row(sink: &mut CsvSink, cell: &SweepCell) -> CliResult<()> {
    sink.row([
        cell.i.to_string(),
        cell.j.to_string(),
        cell.scale.short_name().to_string(),
        cell.stats.mean.to_string(),
        cell.stats.std.to_string(),
    ])
}

pub fn augmentation_sink(path: &Path) -> CliResult<CsvSink> {
    CsvSink::create(path, &["combination", "augmentation", "auc", "auc_std"])
}

pub fn augmentation_row(sink: &mut CsvSink, cell: &AugmentationCell) -> CliResult<()> {
    sink.row([
        cell.combination.clone(),
        cell.augmentation.clone(),
        cell.stats.mean.to_string(),
        cell.stats.std.to_string(),
    ])
}

pub fn table_sink(path: &Path) -> CliResult<CsvSink> {
    CsvSink::create(
        path,
        &[
            "dataset",
            "label",
            "published",
            "reproduced",
            "std",
            "delta",
        ],
    )
}

pub fn table_row(sink: &mut CsvSink, row: &ComparisonRow) -> CliResult<()> {
    sink.row([
        row.dataset.clone(),
        row.label.clone(),
        row.published.to_string(),
        row.reproduced.to_string(),
        row.std.to_string(),
        row.delta.to_string(),
    ])
}

pub fn table_markdown(title: &str, rows: &[ComparisonRow]) -> String {
    let mut out = format!("# {title}\n\n");
    out.push_str("| dataset | setting | published | reproduced | std | delta |\n");
    out.push_str("|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {:.2} | {:.2} | {:.2} | {:+.2} |\n",
            r.dataset, r.label, r.published, r.reproduced, r.std, r.delta
        ));
    }
    out
}

/// Everything needed to rerun a command.
pub fn provenance(command: &str, config: &impl Serialize, seeds: &[u64]) -> Value {
    json!({
        "command": command,
        "args": std::env::args().skip(1).collect::<Vec<_>>(),
        "seeds": seeds,
        "config": config,
        "build": {
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "profile": if cfg!(debug_assertions) { "debug" } else { "release" },
            "parallel": cfg!(feature = "parallel"),
            "target_os": std::env::consts::OS,
            "target_arch": std::env::consts::ARCH,
        },
    })
}
