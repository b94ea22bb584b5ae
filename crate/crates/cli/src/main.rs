//! `wsrc`: cluster search-result snippets from the command line.
//!
//! Exit statuses: 0 success, 1 usage error, 2 data error.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;
use wsrc_core::corpus;
use wsrc_core::eval;
use wsrc_core::kmeans::Clustering;
use wsrc_core::pipeline::{self, PipelineError, RunConfig, SynthConfig};

#[derive(Parser)]
#[command(
    name = "wsrc",
    version,
    about = "Cluster short search-result documents, recovering the cluster count from population consensus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the clustering pipeline on a dataset and write a JSON report.
    Cluster {
        /// Line-delimited JSON dataset.
        #[arg(long)]
        input: PathBuf,
        /// Report destination.
        #[arg(long)]
        output: PathBuf,
        /// Nest population size.
        #[arg(long, default_value_t = 5)]
        nests: usize,
        /// Fixed k-means iteration count.
        #[arg(long, default_value_t = 4)]
        kmeans_iters: usize,
        /// Abandonment probability, in [0.1, 0.2].
        #[arg(long, default_value_t = 0.15)]
        pa: f64,
        /// Spawn/replace rounds of population evolution.
        #[arg(long, default_value_t = 10)]
        spawn_rounds: usize,
        /// Split/merge operations per spawned nest.
        #[arg(long, default_value_t = 3)]
        ops_per_spawn: usize,
        /// Majority threshold for linking a document pair.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Cap on local-search passes.
        #[arg(long, default_value_t = 50)]
        local_search_passes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Stopword file override, one word per line.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Generate a labeled planted-topic dataset.
    Gensynth {
        #[arg(long)]
        topics: usize,
        #[arg(long)]
        docs_per_topic: usize,
        /// Disjoint vocabulary size per topic.
        #[arg(long, default_value_t = 50)]
        topic_vocab: usize,
        /// Shared noise vocabulary size (0 for fully disjoint topics).
        #[arg(long, default_value_t = 20)]
        shared_vocab: usize,
        /// Tokens per document.
        #[arg(long, default_value_t = 40)]
        doc_len: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Re-score an existing report's clusters against a labeled dataset.
    Eval {
        /// Labeled line-delimited JSON dataset.
        #[arg(long)]
        input: PathBuf,
        /// Report produced by `cluster` (only `clusters` is read).
        #[arg(long)]
        report: PathBuf,
        /// Destination for the metrics JSON; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum AppError {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for AppError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::InvalidConfig(msg) => AppError::Usage(msg),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<corpus::CorpusError> for AppError {
    fn from(err: corpus::CorpusError) -> Self {
        AppError::Data(err.to_string())
    }
}

impl From<eval::EvalError> for AppError {
    fn from(err: eval::EvalError) -> Self {
        AppError::Data(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), AppError> {
    match command {
        Command::Cluster {
            input,
            output,
            nests,
            kmeans_iters,
            pa,
            spawn_rounds,
            ops_per_spawn,
            alpha,
            local_search_passes,
            seed,
            stopwords,
        } => {
            let config = RunConfig {
                input,
                output,
                nests,
                kmeans_iters,
                pa,
                spawn_rounds,
                ops_per_spawn,
                alpha,
                local_search_passes,
                seed,
                stopwords,
            };
            let report = pipeline::run_pipeline(&config)?;
            println!(
                "estimated_k = {}; report written to {}",
                report.estimated_k,
                config.output.display()
            );
            Ok(())
        }
        Command::Gensynth {
            topics,
            docs_per_topic,
            topic_vocab,
            shared_vocab,
            doc_len,
            seed,
            output,
        } => {
            let config = SynthConfig {
                topics,
                docs_per_topic,
                topic_vocab,
                shared_vocab,
                doc_len,
                seed,
            };
            pipeline::generate_synthetic(&config, &output)?;
            println!(
                "wrote {} documents to {}",
                topics * docs_per_topic,
                output.display()
            );
            Ok(())
        }
        Command::Eval {
            input,
            report,
            output,
        } => rescore(&input, &report, output.as_deref()),
    }
}

/// Minimal view of a report: only the cluster membership lists.
#[derive(Deserialize)]
struct ReportClusters {
    clusters: Vec<Vec<String>>,
}

fn rescore(
    input: &std::path::Path,
    report: &std::path::Path,
    output: Option<&std::path::Path>,
) -> Result<(), AppError> {
    let corpus = corpus::load_corpus(input)?;
    let text = std::fs::read_to_string(report)
        .map_err(|e| AppError::Data(format!("failed to read {}: {e}", report.display())))?;
    let parsed: ReportClusters = serde_json::from_str(&text)
        .map_err(|e| AppError::Data(format!("malformed report: {e}")))?;

    let index: HashMap<&str, usize> = corpus
        .documents()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    const UNASSIGNED: usize = usize::MAX;
    let mut assignment = vec![UNASSIGNED; corpus.n()];
    for (cluster, members) in parsed.clusters.iter().enumerate() {
        for id in members {
            let &doc = index
                .get(id.as_str())
                .ok_or_else(|| AppError::Data(format!("report id \"{id}\" not in dataset")))?;
            if assignment[doc] != UNASSIGNED {
                return Err(AppError::Data(format!(
                    "report lists document \"{id}\" more than once"
                )));
            }
            assignment[doc] = cluster;
        }
    }
    if let Some(missing) = assignment.iter().position(|&c| c == UNASSIGNED) {
        return Err(AppError::Data(format!(
            "report does not cover document \"{}\"",
            corpus.documents()[missing].id
        )));
    }

    let clustering = Clustering::from_assignment(&assignment);
    let metrics = eval::evaluate(&clustering, &corpus)?;
    let mut json = serde_json::to_string_pretty(&metrics).expect("metrics serialization");
    json.push('\n');
    match output {
        Some(path) => std::fs::write(path, json)
            .map_err(|e| AppError::Data(format!("failed to write {}: {e}", path.display())))?,
        None => print!("{json}"),
    }
    Ok(())
}
