//! Okapi BM25 over the shared tokenizer.
//!
//! `score(q, d) = sum over distinct query terms t of
//! idf(t) * tf / (tf + k1 * (1 - b + b * len_d / avg_len))`
//! with `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`. `[CLS]`, `[SEP]` and
//! `[UNK]` are never indexed and do not count towards document length.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::data::{Corpus, QuerySet, TokenSeq, Vocabulary};
use crate::dense_index::NegativePool;
use crate::error::{Error, Result};

pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_K1: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    /// term -> (document position, term frequency), positions ascending.
    pub postings: HashMap<u32, Vec<(usize, u32)>>,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<usize>,
    pub avg_doc_len: f64,
    pub num_docs: usize,
    pub b: f64,
    pub k1: f64,
    unk: u32,
}

pub fn build_bm25(corpus: &Corpus, vocab: &Vocabulary) -> Result<Bm25Index> {
    Bm25Index::build(corpus, vocab, DEFAULT_B, DEFAULT_K1)
}

impl Bm25Index {
    pub fn build(corpus: &Corpus, vocab: &Vocabulary, b: f64, k1: f64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("cannot index an empty corpus"));
        }
        if !(0.0..=1.0).contains(&b) || k1 <= 0.0 || !k1.is_finite() {
            return Err(Error::Config(format!(
                "BM25 needs b in [0,1] and k1 > 0 (b={b}, k1={k1})"
            )));
        }
        let unk = vocab.unk();
        let mut postings: HashMap<u32, Vec<(usize, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (pos, doc) in corpus.docs().iter().enumerate() {
            let seq = doc.token_seq(vocab);
            let mut tf: HashMap<u32, u32> = HashMap::new();
            let mut len = 0;
            for id in seq.content().filter(|&id| id != unk) {
                *tf.entry(id).or_insert(0) += 1;
                len += 1;
            }
            let mut terms: Vec<_> = tf.into_iter().collect();
            terms.sort_unstable();
            for (term, f) in terms {
                postings.entry(term).or_default().push((pos, f));
            }
            doc_lengths.push(len);
        }
        let avg_doc_len = doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len() as f64;
        Ok(Self {
            postings,
            doc_ids: corpus.docs().iter().map(|d| d.id.clone()).collect(),
            doc_lengths,
            avg_doc_len,
            num_docs: corpus.len(),
            b,
            k1,
            unk,
        })
    }

    pub fn doc_freq(&self, term: u32) -> usize {
        self.postings.get(&term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: u32) -> f64 {
        let n = self.num_docs as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of every document, in corpus order.
    pub fn score_all(&self, query: &TokenSeq) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_docs];
        let terms: BTreeSet<u32> = query.content().filter(|&id| id != self.unk).collect();
        for term in terms {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(term);
            for &(pos, tf) in list {
                let tf = f64::from(tf);
                let norm = self.k1 * (1.0 - self.b + self.b * self.doc_lengths[pos] as f64 / self.avg_doc_len);
                scores[pos] += idf * tf / (tf + norm);
            }
        }
        scores
    }

    /// Top `min(k, N)` documents, descending score, ties by ascending doc id.
    pub fn search(&self, query: &TokenSeq, k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Config("search depth k must be at least 1".into()));
        }
        let scores = self.score_all(query);
        let mut order: Vec<usize> = (0..self.num_docs).collect();
        let cmp = |&a: &usize, &b: &usize| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.doc_ids[a].cmp(&self.doc_ids[b]))
        };
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        Ok(order
            .into_iter()
            .map(|i| (self.doc_ids[i].clone(), scores[i]))
            .collect())
    }
}

/// Lexical hard negatives: each query's top `pool_size` documents other than its source.
pub fn mine_bm25_negatives(
    index: &Bm25Index,
    queries: &QuerySet,
    vocab: &Vocabulary,
    pool_size: usize,
) -> Result<NegativePool> {
    if pool_size == 0 {
        return Err(Error::Config("pool_size must be at least 1".into()));
    }
    let mined: Vec<(String, Vec<(String, f64)>)> = queries
        .queries()
        .par_iter()
        .map(|q| {
            let positive = q
                .source_doc_id
                .as_deref()
                .ok_or_else(|| Error::MissingSource(q.id.clone()))?;
            let pool = index
                .search(&q.token_seq(vocab), pool_size + 1)?
                .into_iter()
                .filter(|(d, _)| d != positive)
                .take(pool_size)
                .collect();
            Ok((q.id.clone(), pool))
        })
        .collect::<Result<_>>()?;
    Ok(NegativePool {
        pools: mined.into_iter().collect(),
    })
}

/// Free-function form of [`Bm25Index::search`].
pub fn bm25_search(index: &Bm25Index, query: &TokenSeq, k: usize) -> Result<Vec<(String, f64)>> {
    index.search(query, k)
}
