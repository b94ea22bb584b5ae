//! Property tests over randomized inputs.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsrc_core::consensus::{clustering_distance, local_search, median_objective, ConsensusConfig};
use wsrc_core::corpus::{cosine, preprocess, Corpus, RawDocument};
use wsrc_core::cuckoo::{evolve_pool, init_pool, CuckooConfig, NestPool};
use wsrc_core::kmeans::{run_kmeans, Clustering};

const EPS: f64 = 1e-9;

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "puma", "cougar", "lion", "tiger", "server", "web", "cluster", "search", "result",
        "engine", "query", "the", "running", "pages", "glasses",
    ])
    .prop_map(str::to_string)
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 0..25).prop_map(|words| words.join(" "))
}

fn corpus_strategy(min_docs: usize) -> impl Strategy<Value = Corpus> {
    prop::collection::vec((text(), text()), min_docs..12).prop_map(|docs| {
        Corpus::new(
            docs.into_iter()
                .enumerate()
                .map(|(i, (title, snippet))| RawDocument {
                    id: format!("d{i}"),
                    title: if title.is_empty() && snippet.is_empty() {
                        "filler".to_string()
                    } else {
                        title
                    },
                    snippet,
                    label: None,
                })
                .collect(),
        )
        .expect("generated corpus is valid")
    })
}

fn random_clustering(n: usize, rng: &mut impl rand::Rng) -> Clustering {
    let k = rng.gen_range(1..=n);
    let raw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    Clustering::from_assignment(&raw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preprocess_is_idempotent(t in text()) {
        let once = preprocess(&t);
        let twice = preprocess(&once.join(" "));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn vectors_are_unit_or_zero_and_cosine_behaves(corpus in corpus_strategy(2)) {
        let (_, vectors) = wsrc_core::corpus::vectorize_corpus(&corpus).unwrap();
        for v in &vectors {
            prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < EPS);
            if !v.is_zero() {
                prop_assert!((cosine(v, v) - 1.0).abs() < EPS);
            }
        }
        for a in &vectors {
            for b in &vectors {
                let s = cosine(a, b);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert!((s - cosine(b, a)).abs() < EPS);
            }
        }
    }

    #[test]
    fn kmeans_output_is_valid_and_deterministic(
        corpus in corpus_strategy(3),
        seed in 0u64..1000,
    ) {
        let (_, vectors) = wsrc_core::corpus::vectorize_corpus(&corpus).unwrap();
        let k = 2.min(vectors.len());
        let run = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            run_kmeans(&vectors, k, 4, &mut rng).unwrap()
        };
        let c = run(seed);
        prop_assert_eq!(c.n(), vectors.len());
        prop_assert_eq!(c.k(), k);
        prop_assert!(c.clusters().iter().all(|m| !m.is_empty()));
        let repeat = run(seed);
        prop_assert_eq!(c.assignment(), repeat.assignment());
    }

    #[test]
    fn distance_is_a_metric(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..8);
        let p = random_clustering(n, &mut rng);
        let q = random_clustering(n, &mut rng);
        let r = random_clustering(n, &mut rng);
        let d = |a: &Clustering, b: &Clustering| clustering_distance(a, b).unwrap();
        prop_assert_eq!(d(&p, &p), 0);
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r));
    }

    #[test]
    fn local_search_is_monotone(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let pool = NestPool::from_clusterings(
            (0..rng.gen_range(1..4)).map(|_| random_clustering(n, &mut rng)).collect(),
        );
        let p0 = random_clustering(n, &mut rng);
        let refined = local_search(&p0, &pool, &ConsensusConfig::default()).unwrap();
        prop_assert!(
            median_objective(&refined, &pool).unwrap() <= median_objective(&p0, &pool).unwrap()
        );
    }

    #[test]
    fn evolution_preserves_pool_invariants(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..10);
        let vectors: Vec<_> = (0..n)
            .map(|_| {
                let term = rng.gen_range(0..4usize);
                wsrc_core::DocVector::from_weights([(term, 1.0), (4, 0.2)])
            })
            .collect();
        let config = CuckooConfig { spawn_rounds: 4, ..CuckooConfig::default() };
        let pool = init_pool(&vectors, &config, &mut rng).unwrap();
        let evolved = evolve_pool(&vectors, pool, &config, &mut rng).unwrap();
        prop_assert_eq!(evolved.len(), config.nests);
        for nest in evolved.nests() {
            let c = &nest.clustering;
            prop_assert_eq!(c.n(), n);
            prop_assert!(c.k() >= 1 && c.k() <= n);
            let covered: usize = c.clusters().iter().map(Vec::len).sum();
            prop_assert_eq!(covered, n);
        }
    }
}
