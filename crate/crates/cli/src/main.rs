use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// Multimodal speech risk screening: features, fusion training, evaluation
/// and embedding projections.
#[derive(Debug, Parser)]
#[command(name = "swrisk", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Random seed [default: config `seed`, then $SW_SEED, then 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for extraction, fold training and prediction [default: all cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML run configuration; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Increase log detail (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log warnings and errors
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (embeddings, WAVs, labels, manifest)
    Synth(commands::SynthArgs),
    /// Extract handcrafted acoustic features from the WAVs of a corpus
    Extract(commands::ExtractArgs),
    /// Pool the rows of a SWEM matrix into one vector
    Pool(commands::PoolArgs),
    /// Train a fusion model (submission 1, 2 or 3)
    Train(commands::TrainArgs),
    /// Score a trained model on a labelled split
    Eval(commands::EvalArgs),
    /// Write per-subject at-risk probabilities
    Predict(commands::PredictArgs),
    /// Project raw and pre-logit embeddings with t-SNE
    Tsne(commands::TsneArgs),
}

fn init_logging(g: &GlobalArgs) {
    let level = match (g.quiet, g.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        (false, _) => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("SW_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli.global);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
