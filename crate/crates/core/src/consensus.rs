//! Consensus over the nest population: label matrix, pairwise majority
//! voting, and local-search refinement of the median-partition objective.
//!
//! The distance between two partitions counts the document pairs that are
//! co-clustered in exactly one of them; the consensus target is the
//! partition minimizing the summed distance to every pool member. That
//! problem is NP-complete, so majority voting provides the start point
//! and a first-improvement relocation search refines it.

use crate::cuckoo::NestPool;
use crate::kmeans::Clustering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("clusterings cover different document counts ({left} vs {right})")]
    MismatchedLength { left: usize, right: usize },
    #[error("document index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("empty pool")]
    EmptyPool,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The `n x m` table whose column `j` is clustering `j`'s assignment;
/// row `i` is document `i`'s label vector.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    n: usize,
    columns: Vec<Vec<usize>>,
}

impl LabelMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of clusterings (columns).
    pub fn m(&self) -> usize {
        self.columns.len()
    }

    /// Cluster id of document `doc` in clustering `clustering`.
    pub fn label(&self, doc: usize, clustering: usize) -> usize {
        self.columns[clustering][doc]
    }

    pub fn row(&self, doc: usize) -> Vec<usize> {
        self.columns.iter().map(|col| col[doc]).collect()
    }
}

/// Collects the pool's assignments into a label matrix.
pub fn build_label_matrix(pool: &NestPool) -> Result<LabelMatrix, ConsensusError> {
    if pool.is_empty() {
        return Err(ConsensusError::EmptyPool);
    }
    let n = pool.nests()[0].clustering.n();
    for nest in pool.nests() {
        if nest.clustering.n() != n {
            return Err(ConsensusError::MismatchedLength {
                left: n,
                right: nest.clustering.n(),
            });
        }
    }
    Ok(LabelMatrix {
        n,
        columns: pool
            .nests()
            .iter()
            .map(|nest| nest.clustering.assignment().to_vec())
            .collect(),
    })
}

/// Number of clusterings in which documents `u` and `v` share a cluster.
pub fn co_cluster_count(
    matrix: &LabelMatrix,
    u: usize,
    v: usize,
) -> Result<usize, ConsensusError> {
    for idx in [u, v] {
        if idx >= matrix.n() {
            return Err(ConsensusError::IndexOutOfRange {
                index: idx,
                n: matrix.n(),
            });
        }
    }
    Ok(matrix
        .columns
        .iter()
        .filter(|col| col[u] == col[v])
        .count())
}

/// Symmetric `n x n` co-clustering counts; the diagonal equals `m`.
#[derive(Debug, Clone)]
pub struct CoAssociation {
    n: usize,
    m: usize,
    counts: Vec<usize>,
}

impl CoAssociation {
    pub fn from_label_matrix(matrix: &LabelMatrix) -> Self {
        let n = matrix.n();
        let mut counts = vec![0usize; n * n];
        for col in &matrix.columns {
            for u in 0..n {
                for v in u..n {
                    if col[u] == col[v] {
                        counts[u * n + v] += 1;
                        counts[v * n + u] += (u != v) as usize;
                    }
                }
            }
        }
        CoAssociation {
            n,
            m: matrix.m(),
            counts,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn count(&self, u: usize, v: usize) -> usize {
        self.counts[u * self.n + v]
    }
}

/// Consensus parameters.
#[derive(Debug, Clone)]
pub struct ConsensusConfig {
    /// Majority threshold: a pair is linked when strictly more than
    /// `alpha * m` clusterings co-cluster it.
    pub alpha: f64,
    /// Cap on full relocation passes in [`local_search`].
    pub max_local_search_passes: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            alpha: 0.5,
            max_local_search_passes: 50,
        }
    }
}

impl ConsensusConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(ConsensusError::InvalidConfig(format!(
                "majority threshold must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Links every pair co-clustered in strictly more than `alpha * m` of the
/// clusterings and returns the connected components, relabeled by
/// smallest member index.
pub fn majority_consensus(matrix: &LabelMatrix, config: &ConsensusConfig) -> Clustering {
    let n = matrix.n();
    let assoc = CoAssociation::from_label_matrix(matrix);
    let threshold = config.alpha * matrix.m() as f64;
    let mut uf = UnionFind::new(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if assoc.count(u, v) as f64 > threshold {
                uf.union(u, v);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    Clustering::from_assignment(&roots)
}

fn check_same_n(p: &Clustering, q: &Clustering) -> Result<(), ConsensusError> {
    if p.n() != q.n() {
        return Err(ConsensusError::MismatchedLength {
            left: p.n(),
            right: q.n(),
        });
    }
    Ok(())
}

/// 1 when the pair `(u, v)` is co-clustered in exactly one of the two
/// partitions, 0 otherwise.
pub fn pair_disagreement(
    p: &Clustering,
    q: &Clustering,
    u: usize,
    v: usize,
) -> Result<u32, ConsensusError> {
    check_same_n(p, q)?;
    for idx in [u, v] {
        if idx >= p.n() {
            return Err(ConsensusError::IndexOutOfRange {
                index: idx,
                n: p.n(),
            });
        }
    }
    let together_p = p.cluster_of(u) == p.cluster_of(v);
    let together_q = q.cluster_of(u) == q.cluster_of(v);
    Ok(u32::from(together_p != together_q))
}

/// Pairwise-disagreement distance: the number of unordered pairs
/// co-clustered in exactly one of the two partitions. A Hamming distance
/// over pair indicators, hence a metric.
pub fn clustering_distance(p: &Clustering, q: &Clustering) -> Result<u64, ConsensusError> {
    check_same_n(p, q)?;
    let (pa, qa) = (p.assignment(), q.assignment());
    let mut total = 0u64;
    for u in 0..pa.len() {
        for v in (u + 1)..pa.len() {
            let together_p = pa[u] == pa[v];
            let together_q = qa[u] == qa[v];
            total += u64::from(together_p != together_q);
        }
    }
    Ok(total)
}

/// Summed distance from `p` to every clustering in the pool; the quantity
/// the median partition minimizes.
pub fn median_objective(p: &Clustering, pool: &NestPool) -> Result<u64, ConsensusError> {
    if pool.is_empty() {
        return Err(ConsensusError::EmptyPool);
    }
    let mut total = 0u64;
    for nest in pool.nests() {
        total += clustering_distance(p, &nest.clustering)?;
    }
    Ok(total)
}

/// First-improvement relocation search on the median objective. Documents
/// are scanned in index order; each is offered to every other existing
/// cluster (ascending id) and then a fresh singleton, and the first
/// strictly improving move is applied. Stops after a full pass without
/// improvement or when the pass cap is hit.
///
/// Moving one document only changes pair terms involving it, so a move's
/// objective delta reduces to sums of `m - 2 * count(u, v)` over the
/// source and target members.
pub fn local_search(
    p0: &Clustering,
    pool: &NestPool,
    config: &ConsensusConfig,
) -> Result<Clustering, ConsensusError> {
    config.validate()?;
    let matrix = build_label_matrix(pool)?;
    if p0.n() != matrix.n() {
        return Err(ConsensusError::MismatchedLength {
            left: p0.n(),
            right: matrix.n(),
        });
    }
    let assoc = CoAssociation::from_label_matrix(&matrix);
    let m = assoc.m() as i64;
    let n = p0.n();

    let mut assignment = p0.assignment().to_vec();
    let mut members: Vec<Vec<usize>> = p0.clusters();

    let link_cost = |doc: usize, cluster: &[usize]| -> i64 {
        cluster
            .iter()
            .filter(|&&v| v != doc)
            .map(|&v| m - 2 * assoc.count(doc, v) as i64)
            .sum()
    };

    for _ in 0..config.max_local_search_passes {
        let mut improved = false;
        for doc in 0..n {
            let home = assignment[doc];
            let stay = link_cost(doc, &members[home]);
            let mut moved = false;
            for target in 0..members.len() {
                if target == home || members[target].is_empty() {
                    continue;
                }
                if link_cost(doc, &members[target]) < stay {
                    members[home].retain(|&v| v != doc);
                    members[target].push(doc);
                    assignment[doc] = target;
                    moved = true;
                    improved = true;
                    break;
                }
            }
            if !moved && members[home].len() > 1 && stay > 0 {
                members[home].retain(|&v| v != doc);
                members.push(vec![doc]);
                assignment[doc] = members.len() - 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    Ok(Clustering::from_assignment(&assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool_of(assignments: &[&[usize]]) -> NestPool {
        NestPool::from_clusterings(
            assignments
                .iter()
                .map(|a| Clustering::from_assignment(a))
                .collect(),
        )
    }

    #[test]
    fn label_matrix_transcription() {
        let pool = pool_of(&[&[0, 0, 1], &[0, 1, 1]]);
        let matrix = build_label_matrix(&pool).unwrap();
        assert_eq!((matrix.n(), matrix.m()), (3, 2));
        assert_eq!(matrix.row(0), vec![0, 0]);
        assert_eq!(matrix.row(1), vec![0, 1]);
        assert_eq!(matrix.row(2), vec![1, 1]);
    }

    #[test]
    fn label_matrix_single_column() {
        let pool = pool_of(&[&[0, 1, 0]]);
        let matrix = build_label_matrix(&pool).unwrap();
        assert_eq!(matrix.m(), 1);
        assert_eq!(matrix.label(2, 0), 0);
    }

    #[test]
    fn label_matrix_rejects_mismatched_pools() {
        let pool = pool_of(&[&[0, 0, 1], &[0, 1]]);
        assert!(matches!(
            build_label_matrix(&pool),
            Err(ConsensusError::MismatchedLength { .. })
        ));
        assert!(matches!(
            build_label_matrix(&NestPool::from_clusterings(vec![])),
            Err(ConsensusError::EmptyPool)
        ));
    }

    #[test]
    fn co_cluster_count_cases() {
        let pool = pool_of(&[&[0, 0, 1], &[0, 1, 1]]);
        let matrix = build_label_matrix(&pool).unwrap();
        assert_eq!(co_cluster_count(&matrix, 1, 1).unwrap(), 2);
        assert_eq!(co_cluster_count(&matrix, 0, 1).unwrap(), 1);
        assert_eq!(co_cluster_count(&matrix, 0, 2).unwrap(), 0);
        assert!(matches!(
            co_cluster_count(&matrix, 0, 3),
            Err(ConsensusError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn co_association_symmetric_with_m_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(2..10);
            let m = rng.gen_range(1..5);
            let clusterings: Vec<Clustering> = (0..m)
                .map(|_| {
                    let k = rng.gen_range(1..=n);
                    let raw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
                    Clustering::from_assignment(&raw)
                })
                .collect();
            let pool = NestPool::from_clusterings(clusterings);
            let matrix = build_label_matrix(&pool).unwrap();
            let assoc = CoAssociation::from_label_matrix(&matrix);
            for u in 0..n {
                assert_eq!(assoc.count(u, u), m);
                for v in 0..n {
                    assert_eq!(assoc.count(u, v), assoc.count(v, u));
                    assert!(assoc.count(u, v) <= m);
                }
            }
        }
    }

    #[test]
    fn majority_identical_pool_returns_the_clustering() {
        let pool = pool_of(&[&[0, 0, 1, 2], &[0, 0, 1, 2], &[0, 0, 1, 2]]);
        let matrix = build_label_matrix(&pool).unwrap();
        let consensus = majority_consensus(&matrix, &ConsensusConfig::default());
        assert_eq!(consensus, Clustering::from_assignment(&[0, 0, 1, 2]));
    }

    #[test]
    fn majority_two_of_three_links_pair() {
        let pool = pool_of(&[&[0, 0], &[0, 0], &[0, 1]]);
        let matrix = build_label_matrix(&pool).unwrap();
        let consensus = majority_consensus(&matrix, &ConsensusConfig::default());
        assert_eq!(consensus.k(), 1);
    }

    #[test]
    fn majority_threshold_is_strict() {
        let pool = pool_of(&[&[0, 0], &[0, 1]]);
        let matrix = build_label_matrix(&pool).unwrap();
        let consensus = majority_consensus(&matrix, &ConsensusConfig::default());
        assert_eq!(consensus.k(), 2);
    }

    #[test]
    fn pair_disagreement_cases() {
        let p = Clustering::from_assignment(&[0, 0, 1]);
        let q = Clustering::from_assignment(&[0, 1, 1]);
        assert_eq!(pair_disagreement(&p, &p, 0, 1).unwrap(), 0);
        assert_eq!(pair_disagreement(&p, &q, 0, 1).unwrap(), 1);
        assert_eq!(pair_disagreement(&p, &q, 0, 2).unwrap(), 0);
        let short = Clustering::from_assignment(&[0, 0]);
        assert!(pair_disagreement(&p, &short, 0, 1).is_err());
    }

    #[test]
    fn clustering_distance_examples() {
        let p = Clustering::from_assignment(&[0, 0, 1]);
        let q = Clustering::from_assignment(&[0, 1, 1]);
        assert_eq!(clustering_distance(&p, &p).unwrap(), 0);
        assert_eq!(clustering_distance(&p, &q).unwrap(), 2);
        let whole = Clustering::from_assignment(&[0, 0, 0]);
        let singles = Clustering::from_assignment(&[0, 1, 2]);
        assert_eq!(clustering_distance(&whole, &singles).unwrap(), 3);
    }

    #[test]
    fn clustering_distance_ignores_label_names() {
        // Canonical relabeling makes distance label-invariant by
        // construction.
        let p = Clustering::from_assignment(&[5, 5, 2, 9]);
        let q = Clustering::from_assignment(&[0, 0, 1, 2]);
        assert_eq!(clustering_distance(&p, &q).unwrap(), 0);
    }

    #[test]
    fn median_objective_examples() {
        let pool = pool_of(&[&[0, 0, 1], &[0, 1, 1]]);
        let p = Clustering::from_assignment(&[0, 0, 1]);
        assert_eq!(median_objective(&p, &pool).unwrap(), 2);

        let identical = pool_of(&[&[0, 1, 1], &[0, 1, 1]]);
        let q = Clustering::from_assignment(&[0, 1, 1]);
        assert_eq!(median_objective(&q, &identical).unwrap(), 0);

        let single = pool_of(&[&[0, 1, 1]]);
        assert_eq!(
            median_objective(&p, &single).unwrap(),
            clustering_distance(&p, &Clustering::from_assignment(&[0, 1, 1])).unwrap()
        );
    }

    #[test]
    fn local_search_keeps_optimum() {
        let pool = pool_of(&[&[0, 0, 1, 2], &[0, 0, 1, 2], &[0, 0, 1, 2]]);
        let p0 = Clustering::from_assignment(&[0, 0, 1, 2]);
        let refined = local_search(&p0, &pool, &ConsensusConfig::default()).unwrap();
        assert_eq!(refined, p0);
    }

    #[test]
    fn local_search_repairs_one_misplaced_document() {
        let pool = pool_of(&[&[0, 0, 1, 1], &[0, 0, 1, 1], &[0, 0, 1, 1]]);
        let p0 = Clustering::from_assignment(&[0, 1, 1, 1]);
        let refined = local_search(&p0, &pool, &ConsensusConfig::default()).unwrap();
        assert_eq!(refined, Clustering::from_assignment(&[0, 0, 1, 1]));
        assert_eq!(median_objective(&refined, &pool).unwrap(), 0);
    }

    #[test]
    fn local_search_never_worsens_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let n = rng.gen_range(2..12);
            let m = rng.gen_range(1..5);
            let clusterings: Vec<Clustering> = (0..m)
                .map(|_| {
                    let k = rng.gen_range(1..=n);
                    let raw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
                    Clustering::from_assignment(&raw)
                })
                .collect();
            let pool = NestPool::from_clusterings(clusterings);
            let k0 = rng.gen_range(1..=n);
            let raw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k0)).collect();
            let p0 = Clustering::from_assignment(&raw);
            let before = median_objective(&p0, &pool).unwrap();
            let refined = local_search(&p0, &pool, &ConsensusConfig::default()).unwrap();
            let after = median_objective(&refined, &pool).unwrap();
            assert!(after <= before, "{after} > {before}");
        }
    }

    #[test]
    fn config_rejects_bad_alpha() {
        let config = ConsensusConfig {
            alpha: 1.0,
            ..ConsensusConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
