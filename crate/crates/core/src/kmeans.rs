//! Flat local clustering: seeded k-means with cosine assignment plus the
//! cluster-shape statistics (SSE, dispersion, centroid similarity) used
//! by the population operators.
//!
//! The iteration count is fixed rather than convergence-based, so runs
//! are reproducible and deliberately under-converged. Assignment uses
//! cosine similarity; SSE stays squared-Euclidean as a diagnostic.

use crate::corpus::{cosine, DocVector};
use rand::Rng;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KmeansError {
    #[error("document count must be at least 1")]
    EmptyInput,
    #[error("cluster count {k} out of range 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("unknown cluster id {id} (k = {k})")]
    UnknownCluster { id: usize, k: usize },
    #[error("cluster ids must differ")]
    EqualClusters,
}

/// A partition of document indices into disjoint, covering clusters.
/// Labels are canonical: ids are contiguous `0..k` and ordered by each
/// cluster's smallest member index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Relabels an arbitrary assignment into canonical form.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for &label in raw {
            let next = map.len();
            let id = *map.entry(label).or_insert(next);
            assignment.push(id);
        }
        Clustering {
            assignment,
            k: map.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Number of non-empty clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, doc: usize) -> usize {
        self.assignment[doc]
    }

    /// Member indices per cluster id, each in ascending document order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (doc, &c) in self.assignment.iter().enumerate() {
            out[c].push(doc);
        }
        out
    }

    pub fn members(&self, cluster: usize) -> Result<Vec<usize>, KmeansError> {
        if cluster >= self.k {
            return Err(KmeansError::UnknownCluster {
                id: cluster,
                k: self.k,
            });
        }
        Ok(self
            .assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster)
            .map(|(doc, _)| doc)
            .collect())
    }
}

/// Mean of the member vectors, L2-normalized (all-zero stays zero).
#[derive(Debug, Clone)]
pub struct Centroid {
    pub vector: DocVector,
    pub members: usize,
}

fn mean_vector<'a>(members: impl Iterator<Item = &'a DocVector>) -> DocVector {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut count = 0usize;
    for v in members {
        count += 1;
        for &(idx, w) in v.entries() {
            *acc.entry(idx).or_insert(0.0) += w;
        }
    }
    if count == 0 {
        return DocVector::zero();
    }
    DocVector::from_weights(acc.into_iter().map(|(idx, w)| (idx, w / count as f64)))
}

/// Centroids of every cluster in the partition.
pub fn centroids(vectors: &[DocVector], clustering: &Clustering) -> Vec<Centroid> {
    clustering
        .clusters()
        .iter()
        .map(|members| Centroid {
            vector: mean_vector(members.iter().map(|&d| &vectors[d])),
            members: members.len(),
        })
        .collect()
}

/// Initial cluster count `min(trunc(sqrt(n) + 1), n)`.
pub fn initial_k(n: usize) -> Result<usize, KmeansError> {
    if n == 0 {
        return Err(KmeansError::EmptyInput);
    }
    let k = ((n as f64).sqrt() + 1.0).trunc() as usize;
    Ok(k.min(n))
}

/// Runs k-means for exactly `iters` iterations. Seeds are `k` distinct
/// documents drawn uniformly; each iteration assigns every document to
/// the centroid of maximum cosine (ties to the lowest cluster id) and
/// recomputes centroids. An emptied cluster is reseeded with the worst
/// fitting document from a donor cluster of at least two members, so the
/// output always has exactly `k` non-empty clusters.
pub fn run_kmeans(
    vectors: &[DocVector],
    k: usize,
    iters: usize,
    rng: &mut impl Rng,
) -> Result<Clustering, KmeansError> {
    let n = vectors.len();
    if n == 0 {
        return Err(KmeansError::EmptyInput);
    }
    if k < 1 || k > n {
        return Err(KmeansError::InvalidK { k, n });
    }
    assert!(iters >= 1, "iteration count must be at least 1");

    // Partial Fisher-Yates draw of k distinct document indices.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    let mut cents: Vec<DocVector> = order[..k].iter().map(|&d| vectors[d].clone()).collect();
    let mut assign = vec![0usize; n];

    for _ in 0..iters {
        for (i, v) in vectors.iter().enumerate() {
            let mut best = 0;
            let mut best_sim = cosine(v, &cents[0]);
            for (c, cent) in cents.iter().enumerate().skip(1) {
                let sim = cosine(v, cent);
                if sim > best_sim {
                    best_sim = sim;
                    best = c;
                }
            }
            assign[i] = best;
        }

        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for (c, cent) in cents.iter_mut().enumerate() {
            if counts[c] > 0 {
                *cent = mean_vector(
                    assign
                        .iter()
                        .enumerate()
                        .filter(|&(_, &a)| a == c)
                        .map(|(d, _)| &vectors[d]),
                );
            }
        }

        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            // Donor: the document worst fitting its own centroid, taken
            // from a cluster that can spare it. Ties to the lowest index.
            let mut donor: Option<(usize, f64)> = None;
            for (i, v) in vectors.iter().enumerate() {
                if counts[assign[i]] < 2 {
                    continue;
                }
                let sim = cosine(v, &cents[assign[i]]);
                if donor.map_or(true, |(_, best)| sim < best) {
                    donor = Some((i, sim));
                }
            }
            let (d, _) = donor.expect("n >= k guarantees a donor cluster with two members");
            let old = assign[d];
            assign[d] = c;
            counts[c] = 1;
            counts[old] -= 1;
            cents[c] = vectors[d].clone();
            cents[old] = mean_vector(
                assign
                    .iter()
                    .enumerate()
                    .filter(|&(_, &a)| a == old)
                    .map(|(doc, _)| &vectors[doc]),
            );
        }
    }

    Ok(Clustering::from_assignment(&assign))
}

fn norm_sq(v: &DocVector) -> f64 {
    if v.is_zero() {
        0.0
    } else {
        1.0
    }
}

/// Mean squared Euclidean distance of documents to their own cluster
/// centroid: `(1/n) * sum ||d - c||^2`.
pub fn sse(vectors: &[DocVector], clustering: &Clustering) -> f64 {
    assert_eq!(vectors.len(), clustering.n(), "clustering must cover the vectors");
    if vectors.is_empty() {
        return 0.0;
    }
    let cents = centroids(vectors, clustering);
    let total: f64 = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = &cents[clustering.cluster_of(i)].vector;
            norm_sq(v) + norm_sq(c) - 2.0 * v.dot(c)
        })
        .sum();
    (total / vectors.len() as f64).max(0.0)
}

/// Mean `1 - cosine(member, centroid)` over the cluster's members;
/// singleton clusters score 0.
pub fn dispersion(
    vectors: &[DocVector],
    clustering: &Clustering,
    cluster: usize,
) -> Result<f64, KmeansError> {
    let members = clustering.members(cluster)?;
    if members.len() <= 1 {
        return Ok(0.0);
    }
    let centroid = mean_vector(members.iter().map(|&d| &vectors[d]));
    let total: f64 = members
        .iter()
        .map(|&d| 1.0 - cosine(&vectors[d], &centroid))
        .sum();
    Ok(total / members.len() as f64)
}

/// Cosine between two cluster centroids.
pub fn centroid_similarity(
    vectors: &[DocVector],
    clustering: &Clustering,
    first: usize,
    second: usize,
) -> Result<f64, KmeansError> {
    if first == second {
        return Err(KmeansError::EqualClusters);
    }
    let a = clustering.members(first)?;
    let b = clustering.members(second)?;
    let ca = mean_vector(a.iter().map(|&d| &vectors[d]));
    let cb = mean_vector(b.iter().map(|&d| &vectors[d]));
    Ok(cosine(&ca, &cb))
}
