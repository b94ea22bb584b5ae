//! Scoring a clustering against gold class labels: per-cluster precision,
//! recall and F-measure under majority-class mapping, plus the estimated
//! versus actual cluster-count difference and the adjusted Rand index.

use crate::corpus::Corpus;
use crate::kmeans::Clustering;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("document \"{id}\" has no gold label")]
    MissingLabel { id: String },
    #[error("expected {expected} labels, got {got}")]
    MismatchedLength { expected: usize, got: usize },
    #[error("cluster counts must be positive")]
    NonPositiveK,
}

/// Scores for one produced cluster under its majority gold class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterScore {
    pub cluster_id: usize,
    pub mapped_class: String,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Full evaluation of a clustering against gold labels. Macro scores are
/// unweighted means over clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_cluster: Vec<ClusterScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
    pub estimated_k: usize,
    pub actual_k: usize,
    pub k_difference: usize,
}

/// `|estimated - actual|`; both counts must be positive.
pub fn k_difference(estimated: usize, actual: usize) -> Result<usize, EvalError> {
    if estimated == 0 || actual == 0 {
        return Err(EvalError::NonPositiveK);
    }
    Ok(estimated.abs_diff(actual))
}

/// Scores against the corpus's gold labels; every document must carry one.
pub fn evaluate(clustering: &Clustering, corpus: &Corpus) -> Result<EvalReport, EvalError> {
    let labels = corpus
        .documents()
        .iter()
        .map(|doc| {
            doc.label.as_deref().ok_or_else(|| EvalError::MissingLabel {
                id: doc.id.clone(),
            })
        })
        .collect::<Result<Vec<&str>, EvalError>>()?;
    evaluate_labels(clustering, &labels)
}

/// Scores against one gold label per document. Each cluster maps to its
/// majority class (ties to the lexicographically smallest name);
/// precision and recall are measured per cluster against that class.
pub fn evaluate_labels<S: AsRef<str>>(
    clustering: &Clustering,
    gold: &[S],
) -> Result<EvalReport, EvalError> {
    if gold.len() != clustering.n() {
        return Err(EvalError::MismatchedLength {
            expected: clustering.n(),
            got: gold.len(),
        });
    }

    let mut class_totals: BTreeMap<&str, usize> = BTreeMap::new();
    for label in gold {
        *class_totals.entry(label.as_ref()).or_insert(0) += 1;
    }

    let mut per_cluster = Vec::with_capacity(clustering.k());
    for (cluster_id, members) in clustering.clusters().into_iter().enumerate() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &doc in &members {
            *counts.entry(gold[doc].as_ref()).or_insert(0) += 1;
        }
        // Ascending key order plus strict comparison maps ties to the
        // lexicographically smallest class.
        let (mapped, overlap) = counts
            .iter()
            .fold(("", 0usize), |(best, best_count), (&class, &count)| {
                if count > best_count {
                    (class, count)
                } else {
                    (best, best_count)
                }
            });
        let precision = overlap as f64 / members.len() as f64;
        let recall = overlap as f64 / class_totals[mapped] as f64;
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_cluster.push(ClusterScore {
            cluster_id,
            mapped_class: mapped.to_string(),
            precision,
            recall,
            f_measure,
        });
    }

    let k = per_cluster.len() as f64;
    let macro_precision = per_cluster.iter().map(|c| c.precision).sum::<f64>() / k;
    let macro_recall = per_cluster.iter().map(|c| c.recall).sum::<f64>() / k;
    let macro_f = per_cluster.iter().map(|c| c.f_measure).sum::<f64>() / k;
    let estimated_k = clustering.k();
    let actual_k = class_totals.len();

    Ok(EvalReport {
        per_cluster,
        macro_precision,
        macro_recall,
        macro_f,
        estimated_k,
        actual_k,
        k_difference: estimated_k.abs_diff(actual_k),
    })
}

fn comb2(x: u128) -> u128 {
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand index between the clustering and the gold partition.
/// 1 for identical partitions, near 0 for independent ones; negative when
/// agreement falls below chance.
pub fn adjusted_rand<S: AsRef<str>>(clustering: &Clustering, gold: &[S]) -> Result<f64, EvalError> {
    if gold.len() != clustering.n() {
        return Err(EvalError::MismatchedLength {
            expected: clustering.n(),
            got: gold.len(),
        });
    }
    let n = gold.len();
    let mut class_index: BTreeMap<&str, usize> = BTreeMap::new();
    for label in gold {
        let next = class_index.len();
        class_index.entry(label.as_ref()).or_insert(next);
    }

    let mut contingency: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    let mut row_sums: BTreeMap<usize, u128> = BTreeMap::new();
    let mut col_sums: BTreeMap<usize, u128> = BTreeMap::new();
    for doc in 0..n {
        let row = clustering.cluster_of(doc);
        let col = class_index[gold[doc].as_ref()];
        *contingency.entry((row, col)).or_insert(0) += 1;
        *row_sums.entry(row).or_insert(0) += 1;
        *col_sums.entry(col).or_insert(0) += 1;
    }

    let index: u128 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_rows: u128 = row_sums.values().map(|&c| comb2(c)).sum();
    let sum_cols: u128 = col_sums.values().map(|&c| comb2(c)).sum();
    let pairs = comb2(n as u128);

    let expected = sum_rows as f64 * sum_cols as f64 / pairs as f64;
    let max_index = (sum_rows as f64 + sum_cols as f64) / 2.0;
    if max_index - expected == 0.0 {
        // Both partitions trivial (all singletons or one cluster each
        // way), hence identical.
        return Ok(1.0);
    }
    Ok((index as f64 - expected) / (max_index - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn perfect_recovery_scores_one() {
        let clustering = Clustering::from_assignment(&[0, 0, 1, 1, 2]);
        let gold = ["a", "a", "b", "b", "c"];
        let report = evaluate_labels(&clustering, &gold).unwrap();
        assert!((report.macro_precision - 1.0).abs() < EPS);
        assert!((report.macro_recall - 1.0).abs() < EPS);
        assert!((report.macro_f - 1.0).abs() < EPS);
        assert_eq!(report.k_difference, 0);
        assert!((adjusted_rand(&clustering, &gold).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn single_cluster_over_two_equal_classes() {
        let clustering = Clustering::from_assignment(&[0, 0, 0, 0]);
        let gold = ["a", "a", "b", "b"];
        let report = evaluate_labels(&clustering, &gold).unwrap();
        let score = &report.per_cluster[0];
        assert_eq!(score.mapped_class, "a");
        assert!((score.precision - 0.5).abs() < EPS);
        assert!((score.recall - 1.0).abs() < EPS);
        assert!((score.f_measure - 2.0 / 3.0).abs() < EPS);
        assert_eq!(report.estimated_k, 1);
        assert_eq!(report.actual_k, 2);
        assert_eq!(report.k_difference, 1);
    }

    #[test]
    fn k_difference_cases() {
        assert_eq!(k_difference(4, 4).unwrap(), 0);
        assert_eq!(k_difference(9, 4).unwrap(), 5);
        assert_eq!(k_difference(7, 7).unwrap(), 0);
        assert!(matches!(k_difference(0, 4), Err(EvalError::NonPositiveK)));
    }

    #[test]
    fn adjusted_rand_cross_partition() {
        let clustering = Clustering::from_assignment(&[0, 0, 1, 1]);
        let gold = ["a", "b", "a", "b"];
        let ari = adjusted_rand(&clustering, &gold).unwrap();
        assert!((ari + 0.5).abs() < EPS, "expected -0.5, got {ari}");
    }

    /// All partitions of `0..n` as restricted growth strings.
    fn partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = vec![0usize; n];
        fn rec(i: usize, max: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if i == current.len() {
                out.push(current.clone());
                return;
            }
            for v in 0..=max {
                current[i] = v;
                rec(i + 1, max.max(v + 1), current, out);
            }
        }
        rec(0, 0, &mut current, &mut out);
        out
    }

    #[test]
    fn singletons_never_beat_chance() {
        for n in 2..=5 {
            let singles = Clustering::from_assignment(&(0..n).collect::<Vec<_>>());
            for gold_partition in partitions(n) {
                let gold: Vec<String> =
                    gold_partition.iter().map(|c| format!("c{c}")).collect();
                let ari = adjusted_rand(&singles, &gold).unwrap();
                let gold_is_singletons = gold_partition
                    .iter()
                    .collect::<std::collections::HashSet<_>>()
                    .len()
                    == n;
                if gold_is_singletons {
                    assert!((ari - 1.0).abs() < EPS);
                } else {
                    assert!(ari <= EPS, "ARI {ari} > 0 for gold {gold_partition:?}");
                }
            }
        }
    }

    #[test]
    fn scores_invariant_under_document_reorder() {
        let clustering = Clustering::from_assignment(&[0, 0, 1, 1, 1]);
        let gold = ["a", "b", "b", "b", "a"];
        let report = evaluate_labels(&clustering, &gold).unwrap();

        let perm = [4, 2, 0, 3, 1];
        let permuted_assignment: Vec<usize> =
            perm.iter().map(|&i| clustering.cluster_of(i)).collect();
        let permuted_clustering = Clustering::from_assignment(&permuted_assignment);
        let permuted_gold: Vec<&str> = perm.iter().map(|&i| gold[i]).collect();
        let permuted = evaluate_labels(&permuted_clustering, &permuted_gold).unwrap();

        assert!((report.macro_precision - permuted.macro_precision).abs() < EPS);
        assert!((report.macro_recall - permuted.macro_recall).abs() < EPS);
        assert!((report.macro_f - permuted.macro_f).abs() < EPS);
        assert_eq!(report.estimated_k, permuted.estimated_k);
        assert_eq!(report.actual_k, permuted.actual_k);
    }

    #[test]
    fn splitting_a_cluster_cannot_raise_recall() {
        let whole = Clustering::from_assignment(&[0, 0, 0, 0, 1, 1]);
        let gold = ["a", "a", "a", "b", "b", "b"];
        let before = evaluate_labels(&whole, &gold).unwrap();
        let original_recall = before.per_cluster[0].recall;

        let split = Clustering::from_assignment(&[0, 0, 2, 2, 1, 1]);
        let after = evaluate_labels(&split, &gold).unwrap();
        for score in &after.per_cluster {
            if score.mapped_class == "a" {
                assert!(score.recall <= original_recall + EPS);
            }
        }
    }

    #[test]
    fn evaluate_requires_labels() {
        use crate::corpus::{Corpus, RawDocument};
        let corpus = Corpus::new(vec![
            RawDocument {
                id: "d1".into(),
                title: "text".into(),
                snippet: String::new(),
                label: Some("a".into()),
            },
            RawDocument {
                id: "d2".into(),
                title: "text".into(),
                snippet: String::new(),
                label: None,
            },
        ])
        .unwrap();
        let clustering = Clustering::from_assignment(&[0, 0]);
        match evaluate(&clustering, &corpus) {
            Err(EvalError::MissingLabel { id }) => assert_eq!(id, "d2"),
            other => panic!("expected missing label error, got {other:?}"),
        }
    }
}
