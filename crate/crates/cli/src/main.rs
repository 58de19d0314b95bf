use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Unsupervised discourse tree induction with a tree autoencoder.
#[derive(Parser, Debug)]
#[command(name = "tae", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides a configuration key, e.g. `--set hidden=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for per-document parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trains a model and writes the best checkpoint and the training log.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Shorthand for `--set epochs=N`.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Writes the induced tree of every document.
    Induce {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Tree file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write document encodings as JSON lines.
        #[arg(long)]
        encodings: Option<PathBuf>,
    },
    /// Scores a tree file against gold trees.
    EvalStructure {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// `include` or `exclude` the span covering the whole document.
        #[arg(long, default_value = "include")]
        root_span: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes branching baseline trees.
    Baseline {
        /// left, right, hier-left or hier-right.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trains a linear sentiment probe on frozen encodings.
    Probe {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most and least similar documents by cosine similarity.
    Nearest {
        #[arg(long)]
        encodings: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks analytic gradients against central differences.
    GradCheck {
        #[arg(long, default_value_t = 6)]
        embed_dim: usize,
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a planted-structure corpus, its gold trees and word vectors.
    GenerateSynthetic {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut overrides = cli.overrides.clone();
    if let Command::Train {
        epochs: Some(n), ..
    } = &cli.command
    {
        overrides.push(format!("epochs={n}"));
    }
    let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Train {
            corpus,
            embeddings,
            out,
            ..
        } => commands::train(&cfg, &corpus, &embeddings, &out).map(|_| true),
        Command::Induce {
            checkpoint,
            corpus,
            embeddings,
            out,
            encodings,
        } => commands::induce(
            &checkpoint,
            &corpus,
            &embeddings,
            &out,
            encodings.as_deref(),
        )
        .map(|_| true),
        Command::EvalStructure {
            pred,
            gold,
            root_span,
            out,
        } => commands::eval_structure(&cfg, &pred, &gold, &root_span, out.as_deref()).map(|_| true),
        Command::Baseline { kind, corpus, out } => {
            commands::baseline(&cfg, &kind, &corpus, &out).map(|_| true)
        }
        Command::Probe { train, eval, out } => {
            commands::probe(&cfg, &train, &eval, out.as_deref()).map(|_| true)
        }
        Command::Nearest {
            encodings,
            query,
            k,
            out,
        } => commands::nearest(&encodings, &query, k, out.as_deref()).map(|_| true),
        Command::GradCheck {
            embed_dim,
            hidden,
            tol,
            out,
        } => commands::grad_check(&cfg, embed_dim, hidden, tol, out.as_deref()),
        Command::GenerateSynthetic { out } => {
            commands::generate_synthetic(&cfg, &out).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
