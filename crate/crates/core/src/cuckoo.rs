//! Nest population and the split/merge flight surrogate.
//!
//! A nest holds one candidate clustering of the whole corpus. New nests
//! are spawned by copying a randomly chosen nest and reshaping it with
//! split and merge operations; abandonment replaces a pool member with
//! the spawned nest. The pool size stays fixed for the whole run.
//!
//! Each operation is chosen by comparing the two signals the operators
//! themselves optimize: the similarity of the closest centroid pair
//! (merge pressure) against the spread of the most dispersed cluster
//! (split pressure). After the operation budget the spawned nest is
//! settled by merging while merge pressure still dominates, so it lands
//! on a granularity the data supports instead of parking mid-reshape.

use crate::corpus::{cosine, DocVector};
use crate::kmeans::{self, Clustering, KmeansError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CuckooError {
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How a nest entered the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NestOrigin {
    Initial,
    Spawned,
}

/// One candidate clustering in the population.
#[derive(Debug, Clone)]
pub struct Nest {
    pub clustering: Clustering,
    pub generation: u64,
    pub origin: NestOrigin,
}

/// Fixed-size population of nests over a shared corpus.
#[derive(Debug, Clone)]
pub struct NestPool {
    nests: Vec<Nest>,
}

impl NestPool {
    /// Wraps plain clusterings as generation-zero nests.
    pub fn from_clusterings(clusterings: Vec<Clustering>) -> Self {
        NestPool {
            nests: clusterings
                .into_iter()
                .map(|clustering| Nest {
                    clustering,
                    generation: 0,
                    origin: NestOrigin::Initial,
                })
                .collect(),
        }
    }

    pub fn nests(&self) -> &[Nest] {
        &self.nests
    }

    pub fn len(&self) -> usize {
        self.nests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nests.is_empty()
    }

    pub fn max_generation(&self) -> u64 {
        self.nests.iter().map(|n| n.generation).max().unwrap_or(0)
    }
}

/// Population parameters. Defaults follow the reported experiment
/// settings where stated; the rest are conservative.
#[derive(Debug, Clone)]
pub struct CuckooConfig {
    /// Pool size, constant across the run.
    pub nests: usize,
    /// Fixed k-means iteration count.
    pub kmeans_iters: usize,
    /// Abandonment probability, in `[0.1, 0.2]`.
    pub pa: f64,
    /// Spawn/replace rounds in [`evolve_pool`].
    pub spawn_rounds: usize,
    /// Split/merge operations applied per spawned nest.
    pub ops_per_spawn: usize,
    /// Master seed for the run.
    pub seed: u64,
}

impl Default for CuckooConfig {
    fn default() -> Self {
        CuckooConfig {
            nests: 5,
            kmeans_iters: 4,
            pa: 0.15,
            spawn_rounds: 10,
            ops_per_spawn: 3,
            seed: 42,
        }
    }
}

impl CuckooConfig {
    pub fn validate(&self) -> Result<(), CuckooError> {
        if self.nests < 2 {
            return Err(CuckooError::InvalidConfig(format!(
                "nest count must be at least 2, got {}",
                self.nests
            )));
        }
        if !(0.1..=0.2).contains(&self.pa) {
            return Err(CuckooError::InvalidConfig(format!(
                "abandonment probability must lie in [0.1, 0.2], got {}",
                self.pa
            )));
        }
        if self.kmeans_iters < 1 {
            return Err(CuckooError::InvalidConfig(
                "k-means iteration count must be at least 1".into(),
            ));
        }
        if self.ops_per_spawn < 1 {
            return Err(CuckooError::InvalidConfig(
                "ops per spawn must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the initial pool: every nest is an independent seeded k-means
/// run with `k = initial_k(n)`. Per-nest sub-rngs are drawn up front, so
/// the jobs are independent and could run concurrently.
pub fn init_pool(
    vectors: &[DocVector],
    config: &CuckooConfig,
    rng: &mut impl Rng,
) -> Result<NestPool, CuckooError> {
    config.validate()?;
    let k = kmeans::initial_k(vectors.len())?;
    let seeds: Vec<u64> = (0..config.nests).map(|_| rng.gen()).collect();
    let nests = seeds
        .into_iter()
        .map(|seed| {
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            Ok(Nest {
                clustering: kmeans::run_kmeans(vectors, k, config.kmeans_iters, &mut sub)?,
                generation: 0,
                origin: NestOrigin::Initial,
            })
        })
        .collect::<Result<Vec<_>, CuckooError>>()?;
    Ok(NestPool { nests })
}

/// (max centroid-pair similarity, max dispersion over splittable clusters).
fn reshape_signals(vectors: &[DocVector], clustering: &Clustering) -> (f64, f64) {
    let cents = kmeans::centroids(vectors, clustering);
    let mut max_sim = 0.0f64;
    for a in 0..cents.len() {
        for b in (a + 1)..cents.len() {
            max_sim = max_sim.max(cosine(&cents[a].vector, &cents[b].vector));
        }
    }
    let clusters = clustering.clusters();
    let mut max_disp = 0.0f64;
    for (c, members) in clusters.iter().enumerate() {
        if members.len() < 2 {
            continue;
        }
        let total: f64 = members
            .iter()
            .map(|&d| 1.0 - cosine(&vectors[d], &cents[c].vector))
            .sum();
        max_disp = max_disp.max(total / members.len() as f64);
    }
    (max_sim, max_disp)
}

fn merge_pressure_dominates(max_sim: f64, max_disp: f64) -> bool {
    max_sim > 0.0 && max_sim >= max_disp
}

/// Splits the most dispersed cluster (ties to the lowest id) into the two
/// clusters found by 2-means over its members. Clusters need at least two
/// members to qualify; without a candidate the input is returned as is.
pub fn split_step(
    vectors: &[DocVector],
    clustering: &Clustering,
    kmeans_iters: usize,
    rng: &mut impl Rng,
) -> Clustering {
    let clusters = clustering.clusters();
    let cents = kmeans::centroids(vectors, clustering);
    let mut target: Option<(usize, f64)> = None;
    for (c, members) in clusters.iter().enumerate() {
        if members.len() < 2 {
            continue;
        }
        let total: f64 = members
            .iter()
            .map(|&d| 1.0 - cosine(&vectors[d], &cents[c].vector))
            .sum();
        let disp = total / members.len() as f64;
        if target.map_or(true, |(_, best)| disp > best) {
            target = Some((c, disp));
        }
    }
    let Some((victim, _)) = target else {
        return clustering.clone();
    };

    let members = &clusters[victim];
    let sub_vectors: Vec<DocVector> = members.iter().map(|&d| vectors[d].clone()).collect();
    let sub = kmeans::run_kmeans(&sub_vectors, 2, kmeans_iters, rng)
        .expect("2-means over a cluster with at least two members");

    let mut assign = clustering.assignment().to_vec();
    let fresh = clustering.k();
    for (local, &doc) in members.iter().enumerate() {
        if sub.cluster_of(local) == 1 {
            assign[doc] = fresh;
        }
    }
    Clustering::from_assignment(&assign)
}

/// Merges the pair of clusters with maximal centroid similarity (ties to
/// the lexicographically smallest id pair). A single cluster is returned
/// unchanged.
pub fn merge_step(vectors: &[DocVector], clustering: &Clustering) -> Clustering {
    if clustering.k() < 2 {
        return clustering.clone();
    }
    let cents = kmeans::centroids(vectors, clustering);
    let mut best: Option<((usize, usize), f64)> = None;
    for a in 0..cents.len() {
        for b in (a + 1)..cents.len() {
            let sim = cosine(&cents[a].vector, &cents[b].vector);
            if best.map_or(true, |(_, s)| sim > s) {
                best = Some(((a, b), sim));
            }
        }
    }
    let ((a, b), _) = best.expect("at least one cluster pair");
    let assign: Vec<usize> = clustering
        .assignment()
        .iter()
        .map(|&c| if c == b { a } else { c })
        .collect();
    Clustering::from_assignment(&assign)
}

fn spawn_from(
    vectors: &[DocVector],
    pool: &NestPool,
    source: usize,
    config: &CuckooConfig,
    rng: &mut impl Rng,
) -> Nest {
    let mut clustering = pool.nests[source].clustering.clone();
    for _ in 0..config.ops_per_spawn {
        let (max_sim, max_disp) = reshape_signals(vectors, &clustering);
        clustering = if merge_pressure_dominates(max_sim, max_disp) {
            merge_step(vectors, &clustering)
        } else {
            split_step(vectors, &clustering, config.kmeans_iters, rng)
        };
    }
    // Settle: a nest abandoned mid-reshape would leave stray fragments.
    while clustering.k() > 1 {
        let (max_sim, max_disp) = reshape_signals(vectors, &clustering);
        if !merge_pressure_dominates(max_sim, max_disp) {
            break;
        }
        clustering = merge_step(vectors, &clustering);
    }
    Nest {
        clustering,
        generation: pool.max_generation() + 1,
        origin: NestOrigin::Spawned,
    }
}

/// Copies a uniformly chosen nest and reshapes it with `ops_per_spawn`
/// split/merge operations plus the settle pass.
pub fn spawn_nest(
    vectors: &[DocVector],
    pool: &NestPool,
    config: &CuckooConfig,
    rng: &mut impl Rng,
) -> Nest {
    let source = rng.gen_range(0..pool.len());
    spawn_from(vectors, pool, source, config, rng)
}

/// Runs `spawn_rounds` spawn/replace rounds. With probability `pa` the
/// spawned nest replaces a uniformly random pool member (abandonment),
/// otherwise it replaces its own source. Pool size is invariant.
pub fn evolve_pool(
    vectors: &[DocVector],
    mut pool: NestPool,
    config: &CuckooConfig,
    rng: &mut impl Rng,
) -> Result<NestPool, CuckooError> {
    config.validate()?;
    for _ in 0..config.spawn_rounds {
        let source = rng.gen_range(0..pool.len());
        let nest = spawn_from(vectors, &pool, source, config, rng);
        let target = if rng.gen_bool(config.pa) {
            rng.gen_range(0..pool.len())
        } else {
            source
        };
        pool.nests[target] = nest;
    }
    Ok(pool)
}
