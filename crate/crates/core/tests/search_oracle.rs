//! Exhaustive dense search against a full-sort oracle, run production and
//! negative mining invariants.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgpl::data::{Corpus, Document, Query, QuerySet, Vocabulary};
use rgpl::dense_index::{build_index, mine_hard_negatives, IndexSnapshot};
use rgpl::encoder::{init_params, Embedding};
use rgpl::eval::produce_run;

mod common;
use common::oracles::{random_index, search_oracle as oracle};

#[test]
fn two_hundred_instances_equal_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..200 {
        let index = random_index(&mut rng, i % 2 == 0);
        let q: Vec<f64> = (0..index.out_dim())
            .map(|_| {
                if i % 2 == 0 {
                    f64::from(rng.random_range(-1i32..=1))
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let k = rng.random_range(1..=index.len() + 5);
        let got = index.search(&Embedding(q.clone()), k).unwrap();
        assert_eq!(got, oracle(&index, &q, k), "instance {i}");
    }
}

#[test]
fn basis_documents_are_found_first() {
    let ids: Vec<String> = (0..4).map(|i| format!("e{i}")).collect();
    let mut rows = vec![0.0; 16];
    for i in 0..4 {
        rows[i * 4 + i] = 1.0;
    }
    let index = IndexSnapshot::from_parts(ids, rows, 4, 0, "basis".into()).unwrap();
    for i in 0..4 {
        let mut q = vec![0.0; 4];
        q[i] = 1.0;
        assert_eq!(index.search(&Embedding(q), 1).unwrap()[0].0, format!("e{i}"));
    }
}

fn small_world(seed: u64, docs: usize) -> (Vocabulary, Corpus, QuerySet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::with_words((0..30).map(|i| format!("t{i}"))).unwrap();
    let text = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(0..8);
        (0..n)
            .map(|_| format!("t{}", rng.random_range(0..30)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let corpus = Corpus::new(
        (0..docs)
            .map(|i| Document::new(format!("d{i:03}"), text(&mut rng)))
            .collect(),
    )
    .unwrap();
    let queries = QuerySet::new(
        (0..20)
            .map(|i| {
                let mut q = Query::new(format!("q{i}"), text(&mut rng));
                q.source_doc_id = Some(format!("d{:03}", rng.random_range(0..docs)));
                q
            })
            .collect(),
    )
    .unwrap();
    (vocab, corpus, queries)
}

#[test]
fn run_matches_brute_force_on_300_docs() {
    let (vocab, corpus, queries) = small_world(3, 300);
    let params = init_params(vocab.len(), 6, 5, 11).unwrap();
    let index = build_index(&params, &corpus, &vocab, 0).unwrap();
    let run = produce_run(&params, &index, &queries, &vocab, 25).unwrap();
    for q in queries.queries() {
        let emb = params.encode(&q.tokens(&vocab)).unwrap();
        assert_eq!(run.get(&q.id).unwrap(), oracle(&index, emb.as_slice(), 25).as_slice());
    }
    let shallow = produce_run(&params, &index, &queries, &vocab, 1).unwrap();
    assert!(shallow.runs.values().all(|r| r.len() == 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_depth_search_is_a_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let index = random_index(&mut rng, seed % 2 == 0);
        let q: Vec<f64> = (0..index.out_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = index.clone();
        let got = index.search(&Embedding(q.clone()), index.len()).unwrap();
        let mut ids: Vec<String> = got.iter().map(|x| x.0.clone()).collect();
        ids.sort();
        let mut all = index.doc_ids().to_vec();
        all.sort();
        prop_assert_eq!(ids, all);
        prop_assert_eq!(got, oracle(&index, &q, index.len()));
        // snapshots are never mutated by search
        prop_assert_eq!(index.hash(), before.hash());
        prop_assert_eq!(index, before);
    }

    #[test]
    fn pools_exclude_positive_and_are_sorted(seed in any::<u64>(), pool_size in 1usize..60) {
        let (vocab, corpus, queries) = small_world(seed, 40);
        let params = init_params(vocab.len(), 4, 3, seed).unwrap();
        let index = build_index(&params, &corpus, &vocab, 0).unwrap();
        let pool = mine_hard_negatives(&index, &queries, &params, &vocab, pool_size).unwrap();
        for q in queries.queries() {
            let entries = pool.get(&q.id).unwrap();
            prop_assert!(entries.len() <= pool_size);
            prop_assert!(entries.iter().all(|(d, _)| Some(d.as_str()) != q.source_doc_id.as_deref()));
            prop_assert!(entries.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
