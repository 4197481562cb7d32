//! `casgcn`: reproducible cascade-growth runs driven by a TOML config.
//!
//! Every command writes its artifacts under `<output_root>/<name>/` along
//! with `<command>.manifest.toml`, the fully resolved configuration. Feeding
//! a manifest back through `--config` reproduces the run.
//!
//! Failures print a single line `error[<class>]: <detail>` on stderr and
//! exit with the class's status code.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Data(_) => "data",
            CliError::Model(_) => "model",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
            CliError::Model(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "casgcn", version, about = "Cascade growth prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set experiment.train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth,
    /// Convert retweet-chain sources to the interchange format.
    IngestWeibo,
    /// Build citation cascades from a paper corpus.
    IngestCitations,
    /// Train CasGCN and write a checkpoint plus training history.
    Train,
    /// Score a trained checkpoint on one split.
    Evaluate,
    /// Train every model variant and tabulate the results.
    Ablate,
    /// Compare CasGCN against the feature baselines.
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::IngestWeibo => "ingest-weibo",
            Command::IngestCitations => "ingest-citations",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Ablate => "ablate",
            Command::Compare => "compare",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = (|| {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
        let config = config::load(path, &cli.overrides)?;
        commands::run(cli.command, &config)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let detail = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {detail}", e.class());
            ExitCode::from(e.exit_code())
        }
    }
}
