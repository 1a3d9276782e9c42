mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{EvalArgs, ExportFormat, Task, TrainArgs, UpdateArgs};
use config::RunConfig;

/// Hyperbolic embeddings for temporal heterogeneous graphs.
#[derive(Parser)]
#[command(name = "chronohyp", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command. Flags override the config file.
#[derive(Args)]
struct GlobalArgs {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Initial node-type staying probability.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Initial timestamp staying probability.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    walks_per_node: Option<usize>,
    /// Maximum nodes per walk.
    #[arg(long, global = true)]
    walk_length: Option<usize>,
    /// Negatives per training pair.
    #[arg(long, global = true)]
    negatives: Option<usize>,
    /// Initial learning rate.
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Co-occurrence window radius.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Train in Euclidean space instead of the Poincaré ball.
    #[arg(long, global = true)]
    euclidean: bool,
    /// Let walks ignore the staying rule for timestamps.
    #[arg(long, global = true)]
    disable_temporal: bool,
    /// Let walks ignore node types.
    #[arg(long, global = true)]
    disable_heterogeneous: bool,
    /// Log progress (-v) or details (-vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

impl GlobalArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! override_with {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        override_with!(seed, threads, dim, alpha, beta, walks_per_node, walk_length, negatives, lr, epochs, window);
        c.euclidean |= self.euclidean;
        c.disable_temporal |= self.disable_temporal;
        c.disable_heterogeneous |= self.disable_heterogeneous;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse an edge file and write a binary index.
    Ingest {
        /// Edge file: `src dst src_type dst_type timestamp [edge_type]` per line.
        edges: PathBuf,
        /// Index prefix to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Fields are tab separated.
        #[arg(long)]
        tab: bool,
        /// Multiply fractional timestamps by this and round.
        #[arg(long)]
        time_scale: Option<f64>,
        #[arg(long)]
        directed: bool,
    },
    /// Generate a walk corpus.
    Walk {
        #[arg(long)]
        index: Option<PathBuf>,
        /// Corpus file to write.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train embeddings from a corpus, or from fresh walks.
    Train {
        #[arg(long)]
        index: Option<PathBuf>,
        /// Existing corpus; walks are generated when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Embedding file to write.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Resume from an embedding file of matching dimension.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Also save the generated corpus here.
        #[arg(long)]
        emit_corpus: Option<PathBuf>,
    },
    /// Add new edges and refresh an existing corpus in place.
    Update {
        /// Edge file with the new edges, oldest first.
        edges: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Write the corpus here instead of overwriting it.
        #[arg(long)]
        out_corpus: Option<PathBuf>,
        /// Write the index here instead of overwriting it.
        #[arg(long)]
        out_index: Option<PathBuf>,
    },
    /// Run an evaluation protocol.
    Eval {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Embeddings to classify; trained from the config when absent.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// JSON-lines metric report to write.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write embeddings with node ids and types.
    Export {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "tsv")]
        format: ExportFormat,
    },
}

fn run(cli: Cli) -> Result<String> {
    let mut config = cli.global.resolve()?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()?;
    }
    match cli.command {
        Command::Ingest {
            edges,
            out,
            tab,
            time_scale,
            directed,
        } => {
            config.tab_separated |= tab;
            config.directed |= directed;
            config.time_scale = time_scale.or(config.time_scale);
            config.validate()?;
            commands::ingest(&config, &edges, &out)
        }
        Command::Walk { index, out } => commands::walk(&config, index.as_deref(), out.as_deref()),
        Command::Train {
            index,
            corpus,
            out,
            warm_start,
            emit_corpus,
        } => commands::train(
            &config,
            TrainArgs {
                index: index.as_deref(),
                corpus: corpus.as_deref(),
                out: out.as_deref(),
                warm_start: warm_start.as_deref(),
                emit_corpus: emit_corpus.as_deref(),
            },
        ),
        Command::Update {
            edges,
            index,
            corpus,
            out_corpus,
            out_index,
        } => commands::update(
            &config,
            UpdateArgs {
                index: index.as_deref(),
                corpus: corpus.as_deref(),
                edges: &edges,
                out_corpus: out_corpus.as_deref(),
                out_index: out_index.as_deref(),
            },
        ),
        Command::Eval {
            task,
            index,
            embeddings,
            report,
        } => commands::eval(
            &config,
            EvalArgs {
                index: index.as_deref(),
                task,
                embeddings: embeddings.as_deref(),
                report: report.as_deref(),
            },
        ),
        Command::Export {
            index,
            embeddings,
            out,
            format,
        } => commands::export(&config, index.as_deref(), embeddings.as_deref(), &out, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
