//! Independent reference implementations and frozen reference values.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rgpl::data::{Corpus, Document, Qrels, Vocabulary};
use rgpl::dense_index::IndexSnapshot;
use rgpl::eval::RunFile;

/// Wilcoxon cases from `oracles/wilcoxon_reference.py`: (a, b, n, W+, one-sided p).
pub type WilcoxonCase = (&'static [f64], &'static [f64], usize, f64, f64);

#[rustfmt::skip]
pub const WILCOXON_CASES: [WilcoxonCase; 20] = [
    (&[0.5, 0.5, 0.625, 0.125, 0.625], &[0.375, 0.25, 0.625, -0.5, 0.625], 3, 6.0, 0.125),
    (&[0.375, 0.75, 0.75, 0.375, 0.375, 0.25, 0.375, 0.625], &[0.375, 0.75, 0.625, 0.0, 0.375, -0.125, 0.375, 0.5], 4, 10.0, 0.0625),
    (&[0.875, 0.625, 1.0, 0.5, 0.75, 0.625, 1.0, 0.125, 0.875, 0.375], &[0.875, 0.625, 0.25, -0.125, 0.375, 0.25, 0.125, -0.375, 0.625, 0.125], 8, 36.0, 0.00390625),
    (&[0.375, 0.625, 0.5, 0.875, 0.375, 0.625, 0.5, 0.875, 0.375, 0.875, 0.25, 0.25], &[0.375, 0.625, 0.5, 0.75, 0.375, 0.625, 0.75, 1.125, 0.5, 1.125, 0.5, -0.125], 7, 8.5, 0.8359375),
    (&[1.125, 0.625, 0.5, 0.75, 0.5, 0.75, 0.25, 0.75, 0.25, 0.75, 0.5, 0.5], &[1.125, 0.375, 0.125, 0.75, 1.0, 0.375, 0.5, 1.0, -0.125, 0.75, 0.5, 0.125], 8, 24.0, 0.20703125),
    (&[0.875, 0.875, 1.0, 0.75, 0.875, 1.0, 0.625, 0.5, 0.25, 0.625, 0.25, 0.875, 0.625, 0.75], &[0.875, 1.0, 0.625, 0.5, 1.0, 0.375, 0.375, 0.5, -0.375, 0.125, -0.375, 1.0, 0.375, 0.375], 12, 72.0, 0.002685546875),
    (&[0.25, 0.375, 0.875, 0.5, 0.5, 0.75, 0.375, 1.0, 0.5, 0.5, 0.5, 0.625, 0.75, 0.375, 0.375, 0.625], &[0.25, 0.375, 0.75, 0.75, 0.25, 1.125, 0.0, 1.0, 0.5, 0.75, 1.0, 0.625, 1.375, 0.125, 0.5, 0.5], 11, 23.5, 0.80615234375),
    (&[0.75, 0.375, 0.375, 0.875, 0.875, 0.75, 0.375, 0.75, 0.75, 0.875, 0.625, 0.25, 0.5, 0.625, 0.75, 0.5, 0.375, 0.875], &[0.75, 0.375, 0.375, 1.0, 0.375, 1.0, 0.25, 0.625, 0.875, 0.625, 0.5, 0.625, 0.125, 1.125, 0.125, 0.125, 0.5, 0.625], 15, 77.0, 0.174224853515625),
    (&[0.5, 0.75, 0.875, 0.75, 0.5, 0.75, 0.625, 0.875, 0.75, 0.375, 0.625, 0.25, 0.75, 0.75, 0.625, 0.25, 0.5, 0.75, 0.5, 0.625], &[0.625, 0.75, 0.125, 0.625, -0.0, -0.125, 0.75, 0.125, 0.375, 0.5, 0.625, -0.0, 0.25, 0.625, 0.375, 0.25, 0.375, 0.75, -0.25, 0.125], 16, 125.5, 0.0006866455078125),
    (&[0.625, 0.75, 0.5, 0.375, 0.625, 0.625, 1.125, 0.5, 0.75, 0.125, 0.625, 0.5, 0.25, 0.375, 0.5, 0.375, 0.125, 0.5, 0.625, 0.5, 0.75, 0.5], &[0.625, 0.75, 0.5, 0.0, 0.5, 1.125, 1.25, 0.5, 0.625, 0.25, 0.625, 0.625, 0.5, 0.375, 0.5, 0.25, -0.25, 0.625, 0.75, 0.25, 0.625, 0.125], 15, 69.5, 0.2926025390625),
    (&[0.375, 0.5, 0.625, 0.875, 0.75, 0.5, 0.75, 0.125, 0.5, 0.75, 1.0, 0.25, 0.25, 0.5, 0.25, 0.625, 0.625, 0.5, 0.375, 1.125, 1.0, 0.625, 1.0, 0.375], &[0.375, 0.5, 1.125, 0.75, 0.875, 0.75, 0.625, 0.25, 0.25, 1.0, 1.0, 0.125, -0.0, -0.5, 0.25, 0.5, 0.5, 0.25, 0.875, 1.0, 0.875, 0.5, 0.625, 0.125], 20, 135.0, 0.1322460174560547),
    (&[0.5, 0.625, 0.75, 0.375, 0.875, 0.0, 1.0, 0.75, 0.75, 0.625, 0.75, 0.625, 0.5, 0.375, 0.75, 0.625, 0.375, 0.625, 0.375, 1.25, 0.75, 0.75, 0.875, -0.25, 0.625], &[0.5, 0.625, 0.75, 0.25, 0.25, 0.625, 0.75, 0.5, 0.5, 0.75, 1.25, 0.25, -0.25, 0.375, 0.625, 0.75, -0.25, 0.25, 0.125, 1.0, 0.375, 0.375, 1.125, -0.625, 0.75], 21, 177.5, 0.014237403869628906),
    (&[0.625, 0.75, 0.875, 0.75, 0.125, 0.375, 0.375, 0.75, 0.375, 0.375, 0.875, 1.125, 0.375, 0.5, 0.625, 0.25, 0.5, 0.125, 0.75, 0.5, 0.25, 0.0, 0.875, 0.625, 0.0, 0.625], &[1.25, 0.75, 1.25, 0.375, 0.5, -0.0, 0.5, 0.625, 0.5, 0.625, 0.625, 0.75, 0.875, 0.75, 0.75, 0.25, 1.125, 0.375, 0.125, 0.5, 0.25, -0.75, 0.375, 0.875, -0.125, 1.0], 22, 114.0, 0.6584906578063965),
    (&[0.5, 0.25, 1.25, 0.75, 0.5, 0.875, 0.625, 0.375, 0.75, 0.625, 0.375, 0.625, 0.5, 1.0, 0.75, 0.625, 0.375, 0.375, 1.0, 0.5, 0.875, 0.875, 1.125, 0.625, 0.5, 0.5, 0.5, 0.75, 0.75, 0.875], &[0.5, -0.125, 1.0, 0.375, 0.75, 0.625, 0.25, 0.375, 0.5, 0.5, 0.0, 0.25, 0.625, 0.875, 0.5, 0.5, 0.375, -0.125, 1.0, 0.625, 0.625, 0.875, 0.375, 0.375, 0.625, 0.25, 0.75, 0.625, 0.75, 0.125], 24, 264.0, 0.00028210878372192383),
    (&[0.25, 0.5, 0.625, 0.875, 0.625, 0.875, 0.25, 1.125, 0.5, 0.375, 0.25, 0.25, 0.625, 0.5, 0.375, 0.5, 0.375, 1.0, 0.5, 0.625, 0.5, 1.0, 0.5, 0.5, 0.25, 0.625, 0.625, 1.0, 1.0, 1.125, 0.75, 0.75, 0.5, 0.625, 0.375], &[0.25, 0.5, 0.625, 0.875, 0.0, 0.375, -0.125, 0.75, 0.125, -0.375, -0.0, -0.125, 0.375, 0.25, -0.125, 0.375, 0.25, 0.25, 0.375, 0.25, 0.25, 0.75, 0.125, -0.25, 0.0, 0.25, 0.25, 1.125, 0.375, 0.75, 0.75, 0.25, 0.75, 0.875, -0.375], 30, 445.5, 5.475749975187128e-06),
    (&[1.125, 0.5, 0.5, 1.125, 1.125, 0.5, 0.375, 0.625, 0.875, 0.375, 0.75, 0.625, 0.625, 0.875, 0.25, 0.25, 0.375, 0.75, 0.75, 0.5, 0.75, 0.25, 0.5, 0.75, 1.0, 0.5, 0.625, 0.375, 0.375, 0.625, 0.75, 0.375, 0.5, 0.75, 0.875, 0.25, 0.5, 0.5, 0.5, 0.625], &[1.125, 0.5, 0.5, 1.5, 1.0, 0.5, 0.5, 0.5, 0.75, 0.125, 0.625, 0.375, 0.375, 0.625, 0.25, 0.75, 0.875, 0.875, 0.875, 0.75, 0.75, 0.125, 0.875, 0.375, 1.375, 0.25, 0.125, 0.625, 0.125, -0.125, 0.875, 0.5, 0.5, 1.0, 0.5, 0.25, 0.875, 0.5, 0.5, 0.375], 30, 241.0, 0.4340092075790782),
    (&[0.5, 0.625, 0.375, 0.5, 0.5, 0.625, 0.75, 0.625, 0.75, 0.5, 0.75, 0.625, 0.375, 0.25, 0.125, 1.0, 0.25, 0.25, 0.25, 0.625, 0.75, 0.625, 1.0, 0.625, 0.625, 0.625, 0.5, 0.625, 0.75, 0.375, 0.5, 0.625, 0.625, 0.625, 0.25, 0.75, 0.5, 1.5, 0.25, 1.0, 0.875, 0.875, 0.5, 0.5, 0.625, 0.5, 0.5, 0.375, 0.375, 0.875], &[-0.375, 0.625, 0.375, 1.125, 0.125, 0.25, 1.125, 0.625, 0.375, 0.625, 0.5, 0.75, -0.0, 0.375, 0.625, 0.625, 0.0, -0.5, 0.875, 0.625, 0.875, 0.25, 1.25, 0.125, 0.25, 0.375, 1.5, 0.125, 1.125, 0.0, 0.5, 0.375, 0.25, 1.375, 0.25, 1.125, 1.0, 1.5, -0.125, 1.125, 0.5, 0.75, 1.0, 1.0, 0.375, 0.125, 0.125, 0.625, 0.25, 1.125], 43, 522.5, 0.27547129504593004),
    (&[0.75, 0.75, 0.5, 1.125, 0.375, 1.0, 0.625, 0.875, 0.75, 0.375, 0.75, 0.625, 0.5, 0.625, 0.625, 0.5, 0.375, 0.5, 0.875, 0.25, 0.625, 0.625, 0.625, 0.5, 0.375, 0.5, 0.625, 0.25, 0.875, 0.625, 0.25, 0.375, 0.75, 0.875, 0.625, 0.5, 0.5, 0.5, 0.375, 0.625, 0.875, 0.625, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 0.5, 0.75, 0.375, 0.625, 0.625, 0.5, 0.5, 0.75, 1.0, 0.75, 0.875, 0.5], &[0.75, 0.875, 0.5, 1.0, -0.125, 0.125, 0.375, 0.25, 0.875, -0.25, 0.75, -0.25, 0.0, 0.375, 0.75, 0.375, 0.0, 0.5, 0.875, 0.0, 0.5, 0.625, 0.25, 0.375, 0.375, 0.5, 0.75, 0.125, 1.25, 0.375, 0.0, 0.125, 0.25, 0.625, 0.125, 0.375, 0.125, 0.125, 0.25, 0.375, 0.25, 0.125, -0.125, 0.25, 0.125, 0.875, 0.5, 0.875, 0.625, 0.5, -0.125, 0.0, 0.125, -0.125, -0.125, 0.5, 0.875, 0.875, 0.5, 0.125], 52, 1287.5, 2.1511127508480602e-08),
    (&[0.625, 0.75, 0.375, 0.625, 0.5, 0.875, 0.375, 1.125, 0.375, 0.125, 0.75, 0.875, 0.5, 0.375, 0.875, 0.75, 0.875, 0.5, 0.125, 0.5, 0.625, 0.875, 0.875, 0.25, 0.625, 0.625, 0.75, 0.875, 0.75, 0.75, 0.125, 1.125, 1.125, 0.75, 1.0, 0.625, 0.625, 0.25, 0.25, 0.75, 1.0, 0.75, 1.0, 0.5, 0.75, 1.125, 0.625, 0.75, 0.75, 0.875, 1.125, 0.375, 0.5, 0.5, 0.625, 0.5, 0.875, 0.75, 0.5, 0.625, 0.625, 0.5, 0.625, 0.125, 0.625, 0.375, 0.625, 0.875, 0.75, 0.5, 0.625, 0.5, 0.125, 0.625, 0.75, 0.75, 0.875, 0.625, 0.375, 0.25], &[0.625, 0.75, 0.75, 1.0, 0.125, 1.375, -0.25, 0.75, -0.125, 0.375, 0.25, 0.875, 0.125, 0.25, 1.25, 0.125, 1.875, 0.375, -0.125, 0.75, 0.375, 1.125, 0.875, -0.0, 0.625, 0.25, 0.875, 0.75, 0.625, 1.125, 0.875, 1.375, 1.0, 0.625, 1.25, 0.5, 0.75, -0.25, 0.125, 0.625, 0.5, 1.0, 0.5, 0.375, 1.25, 1.25, -0.25, 0.875, 0.625, 0.75, 0.375, 0.5, -0.5, 0.625, 0.875, 0.625, 0.625, 1.0, 0.25, 0.5, 0.75, 0.75, 0.875, 0.0, 1.0, 0.5, 1.25, 0.625, 0.5, 0.375, 1.0, 0.5, 0.125, 0.625, 0.875, 1.0, 0.375, 0.25, 0.5, 0.875], 72, 1399.0, 0.31626574933525237),
    (&[1.0, 0.125, 0.75, 0.5, 0.375, 0.625, 0.375, 1.125, 0.5, 0.375, 0.5, 0.875, 1.125, 0.375, 0.375, 0.5, 0.25, 0.375, 0.375, 0.375, 0.75, 1.0, 0.75, 0.5, 0.375, 0.625, 0.5, 0.5, 0.75, 0.125, 0.75, 0.625, 0.75, 1.0, 0.5, 0.875, 0.5, 0.875, 0.5, 1.25, 0.875, 0.375, 0.625, 0.875, 1.125, 0.25, 0.875, 0.5, 0.5, 0.5, 0.375, 0.75, 0.75, 0.5, 1.0, 0.5, 0.625, 0.625, 0.5, 0.375, 0.375, 0.75, 0.75, 1.0, 0.875, 0.625, 0.5, 0.875, 0.5, 0.5, 0.5, 0.375, 0.625, 0.25, 0.875, 0.375, 0.625, 0.375, 0.375, 0.25, 0.75, 0.625, 1.0, 1.0, 0.75, 0.75, 0.875, 0.625, 0.75, 0.75, 0.75, 0.875, 0.625, 0.25, 0.25, 0.625, 0.875, 1.125, 0.5, 0.5], &[1.0, 0.125, 0.75, 0.875, 1.0, 0.375, 0.25, 0.875, 0.875, 0.625, 0.75, 0.75, 1.125, 0.375, -0.25, 0.375, 0.125, 0.375, 0.25, -0.125, 0.875, 0.875, 0.25, 0.375, 0.125, 0.375, 0.75, 0.5, 0.875, -0.25, 0.625, 0.125, 0.25, 1.375, 0.25, 0.75, -0.0, 0.625, 0.5, 1.0, 0.875, 0.0, 0.25, 1.25, 1.25, -0.0, 0.75, 0.375, 1.0, -0.0, 0.25, 0.75, 0.75, 0.125, 0.75, 0.125, 0.625, 0.75, 0.625, 0.375, 0.125, 0.5, 0.625, 0.625, 1.25, 0.375, 0.75, 1.125, 0.0, 0.5, 0.5, 0.125, 0.75, -0.125, 0.5, -0.0, 0.5, 0.25, 0.0, 0.0, 0.5, 0.375, 1.0, 0.625, 0.5, 0.5, 0.375, 0.25, 0.75, 0.625, 0.25, 0.375, 0.25, 0.375, -0.125, 0.375, 0.5, 0.75, 0.75, 0.25], 83, 2724.5, 3.5133232460881513e-06),
];

/// BM25 toy corpus and scores from `oracles/bm25_reference.py`.
pub const BM25_DOCS: [(&str, &str); 5] = [
    ("d1", "the cat sat on the mat"),
    ("d2", "the dog chased the cat around the yard"),
    ("d3", "a bird sang"),
    ("d4", "cat cat cat"),
    ("d5", "dogs and cats are pets but the dog barks"),
];

#[rustfmt::skip]
pub const BM25_REFERENCE: [(&str, &str, f64); 15] = [
    ("q1", "d1", 0.24159039445514569),
    ("q1", "d2", 0.5565738385958077),
    ("q1", "d3", 0.0),
    ("q1", "d4", 0.4294202890452727),
    ("q1", "d5", 0.32466231947906776),
    ("q2", "d1", 0.0),
    ("q2", "d2", 0.5454889616346923),
    ("q2", "d3", 0.785205790478063),
    ("q2", "d4", 0.0),
    ("q2", "d5", 0.0),
    ("q3", "d1", 0.5752275026994984),
    ("q3", "d2", 0.5681450892458672),
    ("q3", "d3", 0.0),
    ("q3", "d4", 0.4294202890452727),
    ("q3", "d5", 0.19988361280368194),
];

pub fn vocab_for(texts: &[&str]) -> Vocabulary {
    let mut words: Vec<&str> = texts.iter().flat_map(|t| t.split_whitespace()).collect();
    words.sort();
    words.dedup();
    Vocabulary::with_words(words).unwrap()
}

pub fn corpus_of(docs: &[(String, String)]) -> Corpus {
    Corpus::new(docs.iter().map(|(i, t)| Document::new(i.clone(), t.clone())).collect()).unwrap()
}

/// Textbook NDCG written from scratch: explicit ideal list, no shared helpers.
pub fn brute_ndcg(ranking: &[String], judged: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if i >= k {
            break;
        }
        let rel = *judged.get(d).unwrap_or(&0) as i32;
        dcg += (2f64.powi(rel) - 1.0) / ((i + 2) as f64).ln() * 2f64.ln();
    }
    let mut ideal: Vec<u32> = judged.values().cloned().collect();
    ideal.sort();
    ideal.reverse();
    let mut idcg = 0.0;
    for (i, g) in ideal.iter().enumerate() {
        if i >= k {
            break;
        }
        idcg += (2f64.powi(*g as i32) - 1.0) / ((i + 2) as f64).ln() * 2f64.ln();
    }
    dcg / idcg
}

pub fn brute_success(ranking: &[String], judged: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut hit = 0.0;
    for d in ranking.iter().take(k) {
        if judged.get(d).copied().unwrap_or(0) > 0 {
            hit = 1.0;
        }
    }
    hit
}

pub struct Instance {
    pub run: RunFile,
    pub qrels: Qrels,
    pub order: BTreeMap<String, Vec<String>>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let num_docs = rng.random_range(5..40);
    let docs: Vec<String> = (0..num_docs).map(|i| format!("d{i}")).collect();
    let mut run = RunFile::new();
    let mut qrels = Qrels::new();
    let mut order = BTreeMap::new();
    for q in 0..rng.random_range(1..12) {
        let qid = format!("q{q}");
        let mut ranked = docs.clone();
        ranked.shuffle(rng);
        ranked.truncate(rng.random_range(1..=num_docs));
        let mut score = 100.0;
        let ranking: Vec<(String, f64)> = ranked
            .iter()
            .map(|d| {
                // occasional equal scores
                if rng.random_bool(0.7) {
                    score -= rng.random_range(0.0..1.0);
                }
                (d.clone(), score)
            })
            .collect();
        run.insert(&qid, ranking).unwrap();
        order.insert(qid.clone(), ranked);
        // some queries judged all zero, some unjudged
        match rng.random_range(0..10) {
            0 => {}
            1 => {
                qrels.insert(&qid, &docs[0], 0);
            }
            _ => {
                for d in &docs {
                    if rng.random_bool(0.3) {
                        qrels.insert(&qid, d, rng.random_range(0..4));
                    }
                }
                qrels.insert(&qid, &docs[rng.random_range(0..num_docs)], rng.random_range(1..4));
            }
        }
    }
    Instance { run, qrels, order }
}

/// Sort every document by (score desc, id asc) and cut at k.
pub fn search_oracle(index: &IndexSnapshot, q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = (0..index.len())
        .map(|i| {
            let mut s = 0.0;
            for (a, b) in index.row(i).iter().zip(q) {
                s += a * b;
            }
            (index.doc_ids()[i].clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn random_index(rng: &mut ChaCha8Rng, with_ties: bool) -> IndexSnapshot {
    let n = rng.random_range(1..300);
    let dim = rng.random_range(1..6);
    let mut ids: Vec<String> = (0..n)
        .map(|i| format!("doc{:x}", rng.random::<u32>() ^ i as u32))
        .collect();
    ids.sort();
    ids.dedup();
    // shuffle row order so ids are not pre-sorted
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let rows: Vec<f64> = (0..ids.len() * dim)
        .map(|_| {
            if with_ties {
                f64::from(rng.random_range(-2i32..=2))
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    IndexSnapshot::from_parts(ids, rows, dim, 0, "test".into()).unwrap()
}
