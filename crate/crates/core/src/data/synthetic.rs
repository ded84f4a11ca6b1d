//! Synthetic domains with planted topical relevance.
//!
//! Every topic owns a handful of topic words; topics are grouped into themes
//! that may share theme words. A document picks one topic and draws each
//! token from that topic's words with probability `topic_token_skew`
//! (splitting off `theme_token_share` of those draws to theme words) and
//! from the background words otherwise. Two domains built from the same
//! `vocab_size` share a vocabulary but assign words to topics differently.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Qrels, QuerySet, TokenSeq, Vocabulary, MAX_SEQ_LEN};
use crate::error::{Error, Result};
use crate::teacher::GradeThresholds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDomainSpec {
    /// Number of ordinary words; the vocabulary adds three special tokens.
    pub vocab_size: usize,
    pub num_docs: usize,
    pub num_topics: usize,
    /// Inclusive range of content tokens per document.
    pub doc_len_range: (usize, usize),
    pub topic_token_skew: f64,
    pub seed: u64,
    pub num_themes: usize,
    /// Cosine between the latent vectors of two topics in the same theme.
    pub theme_affinity: f64,
    pub theme_token_share: f64,
    pub words_per_topic: usize,
    pub words_per_theme: usize,
    pub id_prefix: String,
}

impl Default for SyntheticDomainSpec {
    fn default() -> Self {
        Self {
            vocab_size: 1000,
            num_docs: 1000,
            num_topics: 20,
            doc_len_range: (20, 60),
            topic_token_skew: 0.6,
            seed: 0,
            num_themes: 1,
            theme_affinity: 0.0,
            theme_token_share: 0.0,
            words_per_topic: 8,
            words_per_theme: 8,
            id_prefix: "d".to_string(),
        }
    }
}

impl SyntheticDomainSpec {
    fn theme_words_needed(&self) -> usize {
        if self.theme_token_share > 0.0 {
            self.num_themes * self.words_per_theme
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.vocab_size == 0 || self.num_docs == 0 || self.num_topics == 0 {
            return fail("vocab_size, num_docs and num_topics must be positive".into());
        }
        if self.num_topics > self.vocab_size {
            return fail(format!(
                "num_topics {} exceeds vocab_size {}",
                self.num_topics, self.vocab_size
            ));
        }
        let (lo, hi) = self.doc_len_range;
        if lo < 4 || hi > MAX_SEQ_LEN - 2 || lo > hi {
            return fail(format!("doc_len_range ({lo}, {hi}) must lie within [4, 348]"));
        }
        if !(self.topic_token_skew > 0.0 && self.topic_token_skew <= 1.0) {
            return fail(format!("topic_token_skew {} not in (0, 1]", self.topic_token_skew));
        }
        if self.num_themes == 0 || self.num_themes > self.num_topics {
            return fail(format!("num_themes {} must be in [1, num_topics]", self.num_themes));
        }
        if !(0.0..1.0).contains(&self.theme_affinity) {
            return fail(format!("theme_affinity {} not in [0, 1)", self.theme_affinity));
        }
        if !(0.0..=1.0).contains(&self.theme_token_share) {
            return fail(format!("theme_token_share {} not in [0, 1]", self.theme_token_share));
        }
        if self.words_per_topic == 0 || (self.theme_token_share > 0.0 && self.words_per_theme == 0) {
            return fail("words_per_topic and words_per_theme must be positive".into());
        }
        let topical = self.theme_words_needed() + self.num_topics * self.words_per_topic;
        let background_needed = usize::from(self.topic_token_skew < 1.0);
        if topical + background_needed > self.vocab_size {
            return fail(format!(
                "vocab_size {} too small for {topical} topical words plus background",
                self.vocab_size
            ));
        }
        Ok(())
    }

    pub fn theme_of(&self, topic: usize) -> usize {
        topic % self.num_themes
    }

    /// Unit latent vector of `topic`: a theme axis and a topic-private axis.
    pub fn topic_vector(&self, topic: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.num_themes + self.num_topics];
        v[self.theme_of(topic)] = self.theme_affinity.sqrt();
        v[self.num_themes + topic] = (1.0 - self.theme_affinity).sqrt();
        v
    }

    /// Shared vocabulary for every domain with this `vocab_size`.
    pub fn vocabulary(&self) -> Vocabulary {
        let width = digits(self.vocab_size.saturating_sub(1));
        Vocabulary::with_words((0..self.vocab_size).map(|i| format!("w{i:0width$}")))
            .expect("generated vocabulary has its special tokens")
    }
}

fn digits(n: usize) -> usize {
    n.to_string().len()
}

/// Ground-truth topic assignment of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRelevance {
    doc_topic: Vec<usize>,
    topic_vectors: Vec<Vec<f64>>,
    doc_ids: Vec<String>,
}

impl PlantedRelevance {
    pub fn doc_topic(&self, position: usize) -> usize {
        self.doc_topic[position]
    }

    pub fn doc_topics(&self) -> &[usize] {
        &self.doc_topic
    }

    pub fn num_topics(&self) -> usize {
        self.topic_vectors.len()
    }

    pub fn topic_vector(&self, topic: usize) -> &[f64] {
        &self.topic_vectors[topic]
    }

    pub fn topic_cosine(&self, a: usize, b: usize) -> f64 {
        crate::linalg::cosine(&self.topic_vectors[a], &self.topic_vectors[b])
    }

    /// Grades every document against every query by thresholding the
    /// noiseless topic cosine. Zero grades are omitted.
    pub fn qrels(&self, corpus: &Corpus, queries: &QuerySet, thresholds: &GradeThresholds) -> Result<Qrels> {
        let mut qrels = Qrels::new();
        for q in queries.queries() {
            let src = q
                .source_doc_id
                .as_deref()
                .ok_or_else(|| Error::MissingSource(q.id.clone()))?;
            let pos = corpus
                .position(src)
                .ok_or_else(|| Error::UnknownDocument(src.to_string()))?;
            let qt = self.doc_topic[pos];
            let grades: Vec<u32> = (0..self.num_topics())
                .map(|t| thresholds.grade(self.topic_cosine(qt, t)))
                .collect();
            for (i, &t) in self.doc_topic.iter().enumerate() {
                if grades[t] > 0 {
                    qrels.insert(&q.id, &self.doc_ids[i], grades[t]);
                }
            }
        }
        Ok(qrels)
    }
}

/// A generated corpus with its vocabulary and planted relevance.
#[derive(Debug, Clone)]
pub struct SyntheticDomain {
    pub spec: SyntheticDomainSpec,
    pub vocab: Vocabulary,
    pub corpus: Corpus,
    pub planted: PlantedRelevance,
    /// Word ids owned by each topic.
    pub topic_words: Vec<Vec<u32>>,
}

pub fn generate_synthetic_corpus(spec: &SyntheticDomainSpec) -> Result<SyntheticDomain> {
    spec.validate()?;
    let vocab = spec.vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut words = vocab.word_ids();
    words.shuffle(&mut rng);
    let mut rest = words.as_slice();
    let mut take = |n: usize| {
        let (head, tail) = rest.split_at(n);
        rest = tail;
        head.to_vec()
    };
    let theme_words: Vec<Vec<u32>> = if spec.theme_token_share > 0.0 {
        (0..spec.num_themes).map(|_| take(spec.words_per_theme)).collect()
    } else {
        Vec::new()
    };
    let topic_words: Vec<Vec<u32>> = (0..spec.num_topics).map(|_| take(spec.words_per_topic)).collect();
    let background = rest.to_vec();

    let topic_vectors: Vec<Vec<f64>> = (0..spec.num_topics).map(|t| spec.topic_vector(t)).collect();
    let width = digits(spec.num_docs.saturating_sub(1));
    let (lo, hi) = spec.doc_len_range;

    let mut docs = Vec::with_capacity(spec.num_docs);
    let mut doc_topic = Vec::with_capacity(spec.num_docs);
    let mut doc_ids = Vec::with_capacity(spec.num_docs);
    for i in 0..spec.num_docs {
        let topic = rng.random_range(0..spec.num_topics);
        let len = rng.random_range(lo..=hi);
        let mut content = Vec::with_capacity(len);
        for _ in 0..len {
            let id = if rng.random::<f64>() < spec.topic_token_skew {
                if !theme_words.is_empty() && rng.random::<f64>() < spec.theme_token_share {
                    let pool = &theme_words[spec.theme_of(topic)];
                    pool[rng.random_range(0..pool.len())]
                } else {
                    let pool = &topic_words[topic];
                    pool[rng.random_range(0..pool.len())]
                }
            } else {
                background[rng.random_range(0..background.len())]
            };
            content.push(id);
        }
        let text = content
            .iter()
            .map(|&id| vocab.token(id).expect("sampled from vocabulary"))
            .collect::<Vec<_>>()
            .join(" ");
        let id = format!("{}{i:0width$}", spec.id_prefix);
        let mut doc = Document::new(id.clone(), text);
        doc.tokens = Some(TokenSeq::from_content(&content, vocab.cls(), vocab.sep()));
        doc.latent_topic = Some(topic_vectors[topic].clone());
        docs.push(doc);
        doc_topic.push(topic);
        doc_ids.push(id);
    }

    Ok(SyntheticDomain {
        spec: spec.clone(),
        vocab,
        corpus: Corpus::new(docs)?,
        planted: PlantedRelevance {
            doc_topic,
            topic_vectors,
            doc_ids,
        },
        topic_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small(seed: u64) -> SyntheticDomainSpec {
        SyntheticDomainSpec {
            vocab_size: 200,
            num_docs: 50,
            num_topics: 4,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_is_identical() {
        let a = generate_synthetic_corpus(&small(7)).unwrap();
        let b = generate_synthetic_corpus(&small(7)).unwrap();
        assert_eq!(a.corpus, b.corpus);
        let c = generate_synthetic_corpus(&small(8)).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn single_topic_shares_latent() {
        let spec = SyntheticDomainSpec {
            num_topics: 1,
            ..small(1)
        };
        let d = generate_synthetic_corpus(&spec).unwrap();
        let first = d.corpus.docs()[0].latent_topic.clone();
        assert!(d.corpus.docs().iter().all(|doc| doc.latent_topic == first));
    }

    #[test]
    fn validation_errors() {
        let bad = [
            SyntheticDomainSpec {
                num_topics: 500,
                ..small(0)
            },
            SyntheticDomainSpec {
                doc_len_range: (3, 10),
                ..small(0)
            },
            SyntheticDomainSpec {
                doc_len_range: (10, 349),
                ..small(0)
            },
            SyntheticDomainSpec {
                topic_token_skew: 0.0,
                ..small(0)
            },
            SyntheticDomainSpec {
                topic_token_skew: 1.5,
                ..small(0)
            },
            SyntheticDomainSpec {
                words_per_topic: 100,
                ..small(0)
            },
        ];
        for spec in bad {
            assert!(generate_synthetic_corpus(&spec).is_err(), "{spec:?}");
        }
    }

    fn histogram(seq: &TokenSeq) -> HashMap<u32, f64> {
        let mut h = HashMap::new();
        let n = seq.content().count() as f64;
        for id in seq.content() {
            *h.entry(id).or_insert(0.0) += 1.0 / n;
        }
        h
    }

    fn overlap(a: &HashMap<u32, f64>, b: &HashMap<u32, f64>) -> f64 {
        a.iter().map(|(k, v)| v.min(*b.get(k).unwrap_or(&0.0))).sum()
    }

    #[test]
    fn within_topic_overlap_exceeds_cross_topic() {
        let spec = SyntheticDomainSpec {
            num_topics: 2,
            topic_token_skew: 0.9,
            num_docs: 60,
            ..small(3)
        };
        let d = generate_synthetic_corpus(&spec).unwrap();
        let hists: Vec<_> = d
            .corpus
            .docs()
            .iter()
            .map(|doc| histogram(doc.tokens.as_ref().unwrap()))
            .collect();
        let (mut within, mut cross) = ((0.0, 0), (0.0, 0));
        for i in 0..hists.len() {
            for j in i + 1..hists.len() {
                let o = overlap(&hists[i], &hists[j]);
                if d.planted.doc_topic(i) == d.planted.doc_topic(j) {
                    within = (within.0 + o, within.1 + 1);
                } else {
                    cross = (cross.0 + o, cross.1 + 1);
                }
            }
        }
        let (w, c) = (within.0 / within.1 as f64, cross.0 / cross.1 as f64);
        assert!(w > c, "within {w} cross {c}");
    }

    #[test]
    fn topic_vectors_are_unit_with_planted_affinity() {
        let spec = SyntheticDomainSpec {
            num_topics: 6,
            num_themes: 2,
            theme_affinity: 0.75,
            theme_token_share: 0.3,
            ..small(0)
        };
        let d = generate_synthetic_corpus(&spec).unwrap();
        for t in 0..6 {
            let n: f64 = d.planted.topic_vector(t).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!((d.planted.topic_cosine(0, 2) - 0.75).abs() < 1e-12);
        assert!(d.planted.topic_cosine(0, 1).abs() < 1e-12);
        assert!((d.planted.topic_cosine(3, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn document_text_tokenizes_back_to_cached_tokens() {
        let d = generate_synthetic_corpus(&small(5)).unwrap();
        for doc in d.corpus.docs() {
            assert_eq!(&d.vocab.tokenize(&doc.text), doc.tokens.as_ref().unwrap());
        }
    }
}
