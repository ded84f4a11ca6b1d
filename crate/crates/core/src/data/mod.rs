//! Corpora, queries, relevance judgments and their on-disk formats.

mod beir;
mod pseudo;
mod synthetic;
mod vocab;

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beir::{load_beir_corpus, load_qrels, load_queries, parse_qrels, save_corpus, save_qrels, save_queries};
pub use pseudo::{generate_pseudo_queries, PseudoQueryConfig};
pub use synthetic::{generate_synthetic_corpus, PlantedRelevance, SyntheticDomain, SyntheticDomainSpec};
pub use vocab::{tokenize, TokenSeq, Vocabulary, CLS, MAX_SEQ_LEN, SEP, UNK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(skip)]
    pub tokens: Option<TokenSeq>,
    /// Planted unit topic vector; only synthetic corpora carry one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_topic: Option<Vec<f64>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            tokens: None,
            latent_topic: None,
        }
    }

    /// Cached tokens, or a fresh tokenization when none are cached.
    pub fn tokens(&self, vocab: &Vocabulary) -> TokenSeq {
        self.token_seq(vocab).into_owned()
    }

    pub fn token_seq(&self, vocab: &Vocabulary) -> Cow<'_, TokenSeq> {
        match &self.tokens {
            Some(t) => Cow::Borrowed(t),
            None => Cow::Owned(vocab.tokenize(&self.text)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    #[serde(skip)]
    pub tokens: Option<TokenSeq>,
    /// Document the query was generated from; its pseudo-positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_doc_id: Option<String>,
    /// Topic of the source document, copied at generation time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_topic: Option<Vec<f64>>,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            tokens: None,
            source_doc_id: None,
            latent_topic: None,
        }
    }

    pub fn tokens(&self, vocab: &Vocabulary) -> TokenSeq {
        self.token_seq(vocab).into_owned()
    }

    pub fn token_seq(&self, vocab: &Vocabulary) -> Cow<'_, TokenSeq> {
        match &self.tokens {
            Some(t) => Cow::Borrowed(t),
            None => Cow::Owned(vocab.tokenize(&self.text)),
        }
    }
}

/// Ordered document collection with id lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if index.insert(d.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(d.id.clone()));
            }
        }
        Ok(Self { docs, index })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Fills every document's token cache.
    pub fn tokenize(&mut self, vocab: &Vocabulary) {
        for d in &mut self.docs {
            if d.tokens.is_none() {
                d.tokens = Some(vocab.tokenize(&d.text));
            }
        }
    }
}

/// Ordered query collection with id lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySet {
    queries: Vec<Query>,
    index: HashMap<String, usize>,
}

impl QuerySet {
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let mut index = HashMap::with_capacity(queries.len());
        for (i, q) in queries.iter().enumerate() {
            if index.insert(q.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(q.id.clone()));
            }
        }
        Ok(Self { queries, index })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Query> {
        self.index.get(id).map(|&i| &self.queries[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn tokenize(&mut self, vocab: &Vocabulary) {
        for q in &mut self.queries {
            if q.tokens.is_none() {
                q.tokens = Some(vocab.tokenize(&q.text));
            }
        }
    }

    /// Checks that every `source_doc_id` resolves in `corpus`.
    pub fn check_sources(&self, corpus: &Corpus) -> Result<()> {
        for q in &self.queries {
            if let Some(src) = &q.source_doc_id {
                if !corpus.contains(src) {
                    return Err(Error::UnknownDocument(src.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Graded relevance judgments: query id -> doc id -> grade.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels(pub BTreeMap<String, BTreeMap<String, u32>>);

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a grade, returning the previous one if the pair was present.
    pub fn insert(&mut self, qid: &str, did: &str, grade: u32) -> Option<u32> {
        self.0
            .entry(qid.to_string())
            .or_default()
            .insert(did.to_string(), grade)
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.0.get(qid)
    }

    pub fn grade(&self, qid: &str, did: &str) -> u32 {
        self.0.get(qid).and_then(|m| m.get(did)).copied().unwrap_or(0)
    }

    pub fn num_queries(&self) -> usize {
        self.0.len()
    }

    pub fn num_judgments(&self) -> usize {
        self.0.values().map(BTreeMap::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, u32>)> {
        self.0.iter()
    }
}
