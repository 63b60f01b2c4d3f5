mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "mag",
    version,
    about = "Multi-view graph contrastive anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides `out_dir`, default `runs`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Allow graphs above 10,000 nodes.
    #[arg(long)]
    pub large: bool,
    /// Dataset to use when the config lists several.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Disable data-parallel execution.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inject structural and contextual anomalies into clean datasets.
    Inject(Common),
    /// Train one model per seed and write checkpoints.
    Train(Common),
    /// Score nodes with trained checkpoints.
    Score {
        #[command(flatten)]
        common: Common,
        /// Score this checkpoint instead of the per-seed ones under --out.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and score every single view pair.
    SweepSingle(Common),
    /// Compare augmentations on the two augmented-view combinations.
    SweepAugmentation(Common),
    /// Reproduce one of the comparison tables (t2, t3, t4, t5).
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inject(c) => commands::inject(&c),
        Command::Train(c) => commands::train(&c),
        Command::Score { common, checkpoint } => commands::score(&common, checkpoint.as_deref()),
        Command::SweepSingle(c) => commands::sweep_single(&c),
        Command::SweepAugmentation(c) => commands::sweep_augmentation(&c),
        Command::Reproduce { common, table } => commands::reproduce(&common, &table),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
