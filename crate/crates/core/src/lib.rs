//! Clustering of short search-result documents without a user-supplied
//! cluster count.
//!
//! A population of seeded k-means solutions (nests) over TF-IDF vectors
//! is evolved with split and merge operations; a pairwise majority vote
//! across the population proposes a consensus partition, and local search
//! on the median-partition objective refines it. The number of clusters
//! in the result is driven by the population's agreement structure, not
//! by the k handed to k-means.
//!
//! Modules follow the pipeline stages:
//!
//! - [`corpus`]: dataset ingestion, preprocessing, TF-IDF vectors, cosine
//! - [`kmeans`]: seeded fixed-iteration k-means and cluster statistics
//! - [`cuckoo`]: the nest population and its split/merge evolution
//! - [`consensus`]: majority voting and median-partition local search
//! - [`eval`]: precision/recall/F against gold labels, adjusted Rand
//! - [`pipeline`]: end-to-end runs, JSON reports, synthetic datasets

pub mod consensus;
pub mod corpus;
pub mod cuckoo;
pub mod eval;
pub mod kmeans;
pub mod pipeline;

pub use consensus::{ConsensusConfig, LabelMatrix};
pub use corpus::{cosine, Corpus, DocVector, Preprocessor, RawDocument, Vocabulary};
pub use cuckoo::{CuckooConfig, Nest, NestPool};
pub use eval::EvalReport;
pub use kmeans::Clustering;
pub use pipeline::{RunConfig, RunReport, SynthConfig};
