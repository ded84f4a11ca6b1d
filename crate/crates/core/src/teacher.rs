//! Teacher relevance scores: a planted-topic oracle for synthetic corpora or
//! a table of externally computed cross-encoder scores.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, Document, Query, QuerySet};
use crate::error::{Error, Result};
use crate::linalg::cosine;
use crate::util::fnv1a;

/// `weight * cos(topic(q), topic(d)) + N(0, noise_sigma^2)`, with the noise
/// keyed by `(query_id, doc_id, seed)` so it never depends on call order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleTeacher {
    pub weight: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for OracleTeacher {
    fn default() -> Self {
        Self {
            weight: 10.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl OracleTeacher {
    fn noise(&self, qid: &str, did: &str) -> f64 {
        if self.noise_sigma == 0.0 {
            return 0.0;
        }
        let key = fnv1a(&[qid.as_bytes(), did.as_bytes(), &self.seed.to_le_bytes()]);
        let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(key));
        self.noise_sigma * z
    }

    pub fn score_topics(&self, qid: &str, q_topic: &[f64], did: &str, d_topic: &[f64]) -> f64 {
        self.weight * cosine(q_topic, d_topic) + self.noise(qid, did)
    }
}

/// Cosine cut-offs for deriving graded qrels from the noiseless oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradeThresholds {
    /// Minimum cosine for grade 2.
    pub highly_relevant: f64,
    /// Minimum cosine for grade 1.
    pub relevant: f64,
}

impl Default for GradeThresholds {
    fn default() -> Self {
        Self {
            highly_relevant: 0.9,
            relevant: 0.7,
        }
    }
}

impl GradeThresholds {
    pub fn grade(&self, cos: f64) -> u32 {
        // Absorbs rounding in unit vectors built from square roots.
        const EPS: f64 = 1e-12;
        if cos + EPS >= self.highly_relevant {
            2
        } else if cos + EPS >= self.relevant {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TeacherScores {
    Oracle(OracleTeacher),
    Table(HashMap<String, HashMap<String, f64>>),
}

impl TeacherScores {
    pub fn oracle(weight: f64, noise_sigma: f64, seed: u64) -> Self {
        TeacherScores::Oracle(OracleTeacher {
            weight,
            noise_sigma,
            seed,
        })
    }

    pub fn score(&self, q: &Query, d: &Document) -> Result<f64> {
        match self {
            TeacherScores::Oracle(o) => {
                let qt = q
                    .latent_topic
                    .as_deref()
                    .ok_or_else(|| Error::MissingTopic(q.id.clone()))?;
                let dt = d
                    .latent_topic
                    .as_deref()
                    .ok_or_else(|| Error::MissingTopic(d.id.clone()))?;
                Ok(o.score_topics(&q.id, qt, &d.id, dt))
            }
            TeacherScores::Table(t) => t
                .get(&q.id)
                .and_then(|row| row.get(&d.id))
                .copied()
                .ok_or_else(|| Error::TeacherMiss(q.id.clone(), d.id.clone())),
        }
    }

    /// `score(q, pos) - score(q, neg)`.
    pub fn margin(&self, q: &Query, pos: &Document, neg: &Document) -> Result<f64> {
        Ok(self.score(q, pos)? - self.score(q, neg)?)
    }

    pub fn table_len(&self) -> usize {
        match self {
            TeacherScores::Oracle(_) => 0,
            TeacherScores::Table(t) => t.values().map(HashMap::len).sum(),
        }
    }
}

/// Free-function form of [`TeacherScores::score`].
pub fn teacher_score(t: &TeacherScores, q: &Query, d: &Document) -> Result<f64> {
    t.score(q, d)
}

/// Free-function form of [`TeacherScores::margin`].
pub fn teacher_margin(t: &TeacherScores, q: &Query, pos: &Document, neg: &Document) -> Result<f64> {
    t.margin(q, pos, neg)
}

/// Reads `query_id \t doc_id \t score` rows into a table-mode teacher.
pub fn load_teacher_table(path: &Path) -> Result<TeacherScores> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table: HashMap<String, HashMap<String, f64>> = HashMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let score: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("non-numeric score `{}`", cols[2])))?;
        if !score.is_finite() {
            return Err(Error::parse(path, line_no, "non-finite score"));
        }
        let (qid, did) = (cols[0].trim(), cols[1].trim());
        let row = table.entry(qid.to_string()).or_default();
        if row.insert(did.to_string(), score).is_some() {
            return Err(Error::DuplicatePair(qid.to_string(), did.to_string()));
        }
    }
    Ok(TeacherScores::Table(table))
}

/// Writes teacher scores for every `(query, doc)` in `pairs` as TSV. Scores
/// use Rust's shortest round-trip float formatting, so reloading is exact.
pub fn dump_teacher_table<'a>(
    teacher: &TeacherScores,
    queries: &QuerySet,
    corpus: &Corpus,
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    path: &Path,
) -> Result<usize> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut n = 0;
    for (qid, did) in pairs {
        let q = queries.get(qid).ok_or_else(|| Error::UnknownQuery(qid.to_string()))?;
        let d = corpus.get(did).ok_or_else(|| Error::UnknownDocument(did.to_string()))?;
        let s = teacher.score(q, d)?;
        writeln!(w, "{qid}\t{did}\t{s:?}").map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}
