//! `toad`: preprocess, split, train, search, ablate, evaluate and analyze.

mod commands;
mod data;
mod heatmap;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toad::Error;

#[derive(Parser)]
#[command(name = "toad", version = manifest::VERSION, about = "Topic-adversarial zero-shot stance detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Directory holding corpus.tsv and optionally unlabeled.txt, keywords.tsv, embeddings.txt.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Topic held out for zero-shot evaluation (name or SemEval abbreviation).
    #[arg(long)]
    pub zero_shot_topic: String,
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone)]
pub struct OutArgs {
    /// Output directory; nothing is written elsewhere.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a dataset TSV and report rejected tweets.
    Preprocess {
        input: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the leave-one-topic-out partitions.
    Split {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train one model and score it on the held-out topic.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Random hyperparameter search.
    Search {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Trials trained at once.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// `toad` or `no-adversary`; defaults from the config's adversary switch.
        #[arg(long)]
        space: Option<String>,
    },
    /// Train component ablations.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Variant id, or `all`.
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Score a checkpoint on the held-out topic.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Topic divergence and representation probes.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Pairwise Jensen-Shannon divergence between topic word distributions.
    Divergence {
        #[arg(long)]
        data_dir: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        /// `union` or `first`.
        #[arg(long, default_value = "union")]
        convention: String,
        /// Also write divergence.ppm.
        #[arg(long)]
        heatmap: bool,
    },
    /// K-means probe of how well representations separate topics.
    Cluster {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
}

/// 2 for bad input or configuration, 3 for a diverged run, 1 otherwise.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Input(_) | Error::Ingest { .. } | Error::Usage(_) | Error::Io(_) => 2,
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> toad::Result<()> {
    match cli.command {
        Command::Preprocess { input, out } => commands::preprocess(&input, &out),
        Command::Split { data, out } => commands::split(&data, &out),
        Command::Train { config, data, out } => commands::train(config.as_deref(), &data, &out),
        Command::Search {
            config,
            data,
            out,
            trials,
            workers,
            space,
        } => commands::search(config.as_deref(), &data, &out, trials, workers, space.as_deref()),
        Command::Ablate {
            config,
            data,
            out,
            variant,
        } => commands::ablate(config.as_deref(), &data, &out, &variant),
        Command::Eval { checkpoint, data, out } => commands::eval(&checkpoint, &data, &out),
        Command::Analyze { what } => match what {
            Analyze::Divergence {
                data_dir,
                out,
                convention,
                heatmap,
            } => commands::divergence(&data_dir, &out, &convention, heatmap),
            Analyze::Cluster { checkpoint, data, out, k } => commands::cluster(&checkpoint, &data, &out, k),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOAD_LOG", "warn")).init();
    let cli = Cli::parse();
    // everything except search runs on one thread
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(1).build_global() {
        log::debug!("global thread pool already set: {e}");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("toad: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
