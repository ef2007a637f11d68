use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topic_space::pipeline::{cmd_analyze, cmd_fit, cmd_ingest, Analysis, RunConfig, TopicRange};
use topic_space::{Error, Result};

/// Topic space embeddings of publication venues.
#[derive(Parser, Debug)]
#[command(name = "topicspace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and filter a JSONL corpus into the output directory.
    Ingest {
        #[command(flatten)]
        shared: Shared,
        /// Raw JSONL corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        min_year: Option<i32>,
        #[arg(long)]
        max_year: Option<i32>,
    },
    /// Fit a topic model, sweeping the topic count when a range is given.
    Fit {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, conflicts_with = "topic_range")]
        topics: Option<usize>,
        /// Inclusive range `lo:hi`.
        #[arg(long)]
        topic_range: Option<TopicRange>,
        #[arg(long)]
        seeds_per_t: Option<usize>,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long)]
        cv_n: Option<usize>,
        #[arg(long)]
        cv_window: Option<usize>,
        #[arg(long)]
        cv_gamma: Option<f64>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Compute analyses of a fitted model.
    Analyze {
        #[command(flatten)]
        shared: Shared,
        /// Comma-separated subset of topics, similarities, importances, map,
        /// trajectories, heatmaps, diversity, density.
        #[arg(long, value_delimiter = ',')]
        analyses: Option<Vec<Analysis>>,
        #[arg(long)]
        sample_cap: Option<usize>,
        #[arg(long)]
        kde_folds: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Shared {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_papers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    venues: Option<Vec<String>>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(shared: Shared) -> Result<RunConfig> {
    let mut c = match &shared.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    set(&mut c.seed, shared.seed);
    set(&mut c.out, shared.out);
    set(&mut c.min_papers, shared.min_papers);
    if shared.venues.is_some() {
        c.venues = shared.venues;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let outputs = match cli.command {
        Command::Ingest {
            shared,
            corpus,
            stopwords,
            min_year,
            max_year,
        } => {
            let mut c = base_config(shared)?;
            c.corpus = corpus.or(c.corpus);
            c.stopwords = stopwords.or(c.stopwords);
            c.min_year = min_year.or(c.min_year);
            c.max_year = max_year.or(c.max_year);
            cmd_ingest(&c)?
        }
        Command::Fit {
            shared,
            topics,
            topic_range,
            seeds_per_t,
            min_count,
            cv_n,
            cv_window,
            cv_gamma,
            stopwords,
            max_iter,
            rel_tol,
        } => {
            let mut c = base_config(shared)?;
            if topics.is_some() {
                c.topics = topics;
                c.topic_range = None;
            }
            if topic_range.is_some() {
                c.topic_range = topic_range;
                c.topics = None;
            }
            set(&mut c.seeds_per_t, seeds_per_t);
            set(&mut c.min_count, min_count);
            set(&mut c.cv_n, cv_n);
            set(&mut c.cv_window, cv_window);
            set(&mut c.cv_gamma, cv_gamma);
            set(&mut c.max_iter, max_iter);
            set(&mut c.rel_tol, rel_tol);
            c.stopwords = stopwords.or(c.stopwords);
            cmd_fit(&c)?
        }
        Command::Analyze {
            shared,
            analyses,
            sample_cap,
            kde_folds,
        } => {
            let mut c = base_config(shared)?;
            set(&mut c.analyses, analyses);
            set(&mut c.sample_cap, sample_cap);
            set(&mut c.kde_folds, kde_folds);
            cmd_analyze(&c)?
        }
    };
    for file in &outputs.files {
        println!("{}", file.display());
    }
    Ok(outputs.notes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(notes) => {
            for n in notes {
                eprintln!("note: {n}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &Error) -> u8 {
    e.exit_code().clamp(1, 255) as u8
}
