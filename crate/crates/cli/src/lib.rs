//! Batch front end for the geolocation pipeline. Stages communicate only
//! through files in the working directory:
//!
//! | stage       | writes                                              |
//! |-------------|-----------------------------------------------------|
//! | `ingest`    | `documents.bin`, `split_manifest.json`              |
//! | `featurize` | `features/<view>.fs`, `mention_graph.tsv`           |
//! | `train`     | `model.ckpt`, `history.csv`, `class_table.csv`      |
//! | `evaluate`  | `eval_report.json`                                  |
//! | `predict`   | `predictions.tsv`                                   |

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use menet::pipeline::ViewKind;

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Overrides, PipelineConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "menet", version, about = "Multiview user geolocation pipeline")]
pub struct Cli {
    /// TOML pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Working directory holding every stage's inputs and outputs.
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run stochastic stages on one thread for reproducible output.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Comma-separated subset of tfidf, node2vec, doc2vec, timestamp.
    #[arg(long, global = true, value_parser = parse_views)]
    pub views: Option<ViewList>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read raw tweets, build per-user documents and the split manifest.
    Ingest {
        /// Input file, overriding `paths.input`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Compute feature files for the selected views.
    Featurize,
    /// Train the network and write the best checkpoint.
    Train,
    /// Score the test split and write the evaluation report.
    Evaluate,
    /// Write predicted classes and coordinates for every user.
    Predict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewList(pub Vec<ViewKind>);

fn parse_views(s: &str) -> Result<ViewList, String> {
    ViewKind::parse_list(s).map(ViewList).map_err(|e| e.to_string())
}

impl Cli {
    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        let base = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let input = match &self.command {
            Command::Ingest { input } => input.clone(),
            _ => None,
        };
        base.finish(&Overrides {
            workdir: self.workdir.clone(),
            input,
            seed: self.seed,
            deterministic: self.deterministic,
            views: self.views.as_ref().map(|v| v.0.clone()),
        })
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.pipeline_config()?;
    log::info!("workdir {}, seed {}", cfg.paths.workdir.display(), cfg.seed);
    match cli.command {
        Command::Ingest { .. } => commands::ingest_cmd(&cfg, out).map(drop),
        Command::Featurize => commands::featurize_cmd(&cfg, out),
        Command::Train => commands::train_cmd(&cfg, out),
        Command::Evaluate => commands::evaluate_cmd(&cfg, out).map(drop),
        Command::Predict => commands::predict_cmd(&cfg, out),
    }
}
