//! End-to-end run: ingest, vectorize, evolve the nest pool, vote, refine,
//! score, and write a JSON report. Also hosts the planted-topic dataset
//! generator used for benchmarking without live search results.

use crate::consensus::{self, ConsensusConfig, ConsensusError};
use crate::corpus::{self, CorpusError, Preprocessor, RawDocument};
use crate::cuckoo::{self, CuckooConfig, CuckooError};
use crate::eval::{self, EvalError, EvalReport};
use crate::kmeans;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cuckoo(#[from] CuckooError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything one run needs; echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub nests: usize,
    pub kmeans_iters: usize,
    pub pa: f64,
    pub spawn_rounds: usize,
    pub ops_per_spawn: usize,
    pub alpha: f64,
    pub local_search_passes: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cuckoo = CuckooConfig::default();
        let consensus = ConsensusConfig::default();
        RunConfig {
            input: PathBuf::new(),
            output: PathBuf::new(),
            nests: cuckoo.nests,
            kmeans_iters: cuckoo.kmeans_iters,
            pa: cuckoo.pa,
            spawn_rounds: cuckoo.spawn_rounds,
            ops_per_spawn: cuckoo.ops_per_spawn,
            alpha: consensus.alpha,
            local_search_passes: consensus.max_local_search_passes,
            seed: 42,
            stopwords: None,
        }
    }
}

impl RunConfig {
    pub fn cuckoo(&self) -> CuckooConfig {
        CuckooConfig {
            nests: self.nests,
            kmeans_iters: self.kmeans_iters,
            pa: self.pa,
            spawn_rounds: self.spawn_rounds,
            ops_per_spawn: self.ops_per_spawn,
            seed: self.seed,
        }
    }

    pub fn consensus(&self) -> ConsensusConfig {
        ConsensusConfig {
            alpha: self.alpha,
            max_local_search_passes: self.local_search_passes,
        }
    }
}

/// Shape of one pool member after evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestDiagnostic {
    pub clusters: usize,
    pub sse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub nests: Vec<NestDiagnostic>,
    pub median_objective: u64,
}

/// The JSON report written by [`run_pipeline`]. `clusters` lists document
/// ids per final cluster and partitions the input exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub dataset_sha: String,
    pub estimated_k: usize,
    pub clusters: Vec<Vec<String>>,
    pub diagnostics: Diagnostics,
    pub metrics: Option<EvalReport>,
    pub duration_ms: u64,
}

/// Runs the full pipeline and writes the report to `config.output`.
/// Metrics are computed when every document carries a gold label.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let start = Instant::now();
    let cuckoo_config = config.cuckoo();
    cuckoo_config
        .validate()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    let consensus_config = config.consensus();
    consensus_config
        .validate()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;

    let bytes = std::fs::read(&config.input).map_err(|source| PipelineError::Io {
        path: config.input.display().to_string(),
        source,
    })?;
    let dataset_sha = hex(&Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8)?;
    let corpus = corpus::parse_corpus(&text)?;

    let preprocessor = match &config.stopwords {
        Some(path) => Preprocessor::from_file(path)?,
        None => Preprocessor::default(),
    };
    let (_vocabulary, vectors) = corpus::vectorize_corpus_with(&corpus, &preprocessor)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool = cuckoo::init_pool(&vectors, &cuckoo_config, &mut rng)?;
    let pool = cuckoo::evolve_pool(&vectors, pool, &cuckoo_config, &mut rng)?;

    let matrix = consensus::build_label_matrix(&pool)?;
    let voted = consensus::majority_consensus(&matrix, &consensus_config);
    let refined = consensus::local_search(&voted, &pool, &consensus_config)?;
    let median_objective = consensus::median_objective(&refined, &pool)?;

    let nests = pool
        .nests()
        .iter()
        .map(|nest| NestDiagnostic {
            clusters: nest.clustering.k(),
            sse: kmeans::sse(&vectors, &nest.clustering),
        })
        .collect();

    let metrics = if corpus.documents().iter().all(|d| d.label.is_some()) {
        Some(eval::evaluate(&refined, &corpus)?)
    } else {
        None
    };

    let clusters = refined
        .clusters()
        .into_iter()
        .map(|members| {
            members
                .into_iter()
                .map(|doc| corpus.documents()[doc].id.clone())
                .collect()
        })
        .collect();

    let report = RunReport {
        config: config.clone(),
        dataset_sha,
        estimated_k: refined.k(),
        clusters,
        diagnostics: Diagnostics {
            nests,
            median_objective,
        },
        metrics,
        duration_ms: start.elapsed().as_millis() as u64,
    };
    write_report(&report, &config.output)?;
    Ok(report)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_report(report: &RunReport, path: &Path) -> Result<(), PipelineError> {
    let mut json =
        serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    json.push('\n');
    std::fs::write(path, json).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parameters for the planted-topic generator.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub topics: usize,
    pub docs_per_topic: usize,
    /// Disjoint vocabulary size per topic.
    pub topic_vocab: usize,
    /// Noise vocabulary shared across topics; may be 0.
    pub shared_vocab: usize,
    pub doc_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 3,
            docs_per_topic: 30,
            topic_vocab: 50,
            shared_vocab: 20,
            doc_len: 40,
            seed: 42,
        }
    }
}

/// Writes a labeled line-delimited JSON dataset. Each document draws
/// `doc_len` tokens, 80% from its topic's disjoint vocabulary and 20%
/// from the shared pool; the label is the topic name.
pub fn generate_synthetic(config: &SynthConfig, path: &Path) -> Result<(), PipelineError> {
    for (name, value) in [
        ("topics", config.topics),
        ("docs_per_topic", config.docs_per_topic),
        ("topic_vocab", config.topic_vocab),
        ("doc_len", config.doc_len),
    ] {
        if value == 0 {
            return Err(PipelineError::InvalidConfig(format!(
                "{name} must be at least 1"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = String::new();
    let mut doc_no = 0usize;
    for topic in 0..config.topics {
        for _ in 0..config.docs_per_topic {
            doc_no += 1;
            let tokens: Vec<String> = (0..config.doc_len)
                .map(|_| {
                    if config.shared_vocab > 0 && rng.gen_bool(0.2) {
                        format!("shared{}", rng.gen_range(0..config.shared_vocab))
                    } else {
                        format!("t{}w{}", topic, rng.gen_range(0..config.topic_vocab))
                    }
                })
                .collect();
            let title_len = tokens.len().min(5);
            let doc = RawDocument {
                id: format!("d{doc_no:04}"),
                title: tokens[..title_len].join(" "),
                snippet: tokens[title_len..].join(" "),
                label: Some(format!("topic{topic}")),
            };
            out.push_str(&serde_json::to_string(&doc).expect("document serialization"));
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}
