//! Pseudo-query generation by span sampling with token noise.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Query, QuerySet, TokenSeq, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PseudoQueryConfig {
    pub queries_per_doc: usize,
    /// Probability that a sampled span token is swapped for a random word.
    pub noise: f64,
    pub seed: u64,
    /// Inclusive span length range, clipped to the document length.
    pub span_len: (usize, usize),
    /// Generate for a seeded random subset of this many documents.
    pub max_source_docs: Option<usize>,
    pub id_prefix: String,
}

impl Default for PseudoQueryConfig {
    fn default() -> Self {
        Self {
            queries_per_doc: 1,
            noise: 0.1,
            seed: 0,
            span_len: (6, 10),
            max_source_docs: None,
            id_prefix: "q".to_string(),
        }
    }
}

/// One query per (source document, repetition). Each query is a contiguous
/// span of its source document with each token independently replaced by a
/// random vocabulary word with probability `noise`.
pub fn generate_pseudo_queries(corpus: &Corpus, vocab: &Vocabulary, config: &PseudoQueryConfig) -> Result<QuerySet> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot generate queries for an empty corpus"));
    }
    if config.queries_per_doc == 0 {
        return Err(Error::Config("queries_per_doc must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.noise) {
        return Err(Error::Config(format!("noise {} not in [0, 1]", config.noise)));
    }
    let (lo, hi) = config.span_len;
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("span_len ({lo}, {hi}) is empty")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sources: Vec<usize> = match config.max_source_docs {
        Some(n) if n < corpus.len() => sample(&mut rng, corpus.len(), n).into_vec(),
        _ => (0..corpus.len()).collect(),
    };
    sources.sort_unstable();
    let words = vocab.word_ids();

    let mut queries = Vec::with_capacity(sources.len() * config.queries_per_doc);
    for pos in sources {
        let doc = &corpus.docs()[pos];
        let content: Vec<u32> = doc.tokens(vocab).content().collect();
        for j in 0..config.queries_per_doc {
            let mut span: Vec<u32> = if content.is_empty() {
                Vec::new()
            } else {
                let len = rng.random_range(lo..=hi).min(content.len());
                let start = rng.random_range(0..=content.len() - len);
                content[start..start + len].to_vec()
            };
            for tok in &mut span {
                if config.noise > 0.0 && rng.random::<f64>() < config.noise {
                    *tok = words[rng.random_range(0..words.len())];
                }
            }
            let text = span
                .iter()
                .map(|&id| vocab.token(id).unwrap_or(super::UNK))
                .collect::<Vec<_>>()
                .join(" ");
            let mut q = Query::new(format!("{}{}-{j}", config.id_prefix, doc.id), text);
            q.tokens = Some(TokenSeq::from_content(&span, vocab.cls(), vocab.sep()));
            q.source_doc_id = Some(doc.id.clone());
            q.latent_topic = doc.latent_topic.clone();
            queries.push(q);
        }
    }
    QuerySet::new(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_corpus, SyntheticDomainSpec};

    fn domain() -> crate::data::SyntheticDomain {
        generate_synthetic_corpus(&SyntheticDomainSpec {
            num_docs: 10,
            vocab_size: 300,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn three_per_doc_on_ten_docs() {
        let d = domain();
        let cfg = PseudoQueryConfig {
            queries_per_doc: 3,
            ..Default::default()
        };
        let qs = generate_pseudo_queries(&d.corpus, &d.vocab, &cfg).unwrap();
        assert_eq!(qs.len(), 30);
        qs.check_sources(&d.corpus).unwrap();
    }

    #[test]
    fn noiseless_queries_only_use_source_tokens() {
        let d = domain();
        let cfg = PseudoQueryConfig {
            noise: 0.0,
            queries_per_doc: 4,
            ..Default::default()
        };
        let qs = generate_pseudo_queries(&d.corpus, &d.vocab, &cfg).unwrap();
        for q in qs.queries() {
            let src = d.corpus.get(q.source_doc_id.as_deref().unwrap()).unwrap();
            let doc_tokens: Vec<u32> = src.tokens.as_ref().unwrap().content().collect();
            for t in q.tokens.as_ref().unwrap().content() {
                assert!(doc_tokens.contains(&t));
            }
        }
    }

    #[test]
    fn deterministic_and_subsetted() {
        let d = domain();
        let cfg = PseudoQueryConfig {
            max_source_docs: Some(4),
            seed: 11,
            ..Default::default()
        };
        let a = generate_pseudo_queries(&d.corpus, &d.vocab, &cfg).unwrap();
        let b = generate_pseudo_queries(&d.corpus, &d.vocab, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn empty_corpus_rejected() {
        let d = domain();
        let empty = Corpus::default();
        assert!(generate_pseudo_queries(&empty, &d.vocab, &PseudoQueryConfig::default()).is_err());
        let bad = PseudoQueryConfig {
            queries_per_doc: 0,
            ..Default::default()
        };
        assert!(generate_pseudo_queries(&d.corpus, &d.vocab, &bad).is_err());
    }
}
