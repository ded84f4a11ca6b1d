//! Exhaustive dense index, top-k search and hard-negative mining.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, QuerySet, Vocabulary};
use crate::encoder::{Embedding, EncoderParams};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::util::sha256_hex;

/// Immutable matrix of document embeddings built by one parameter state.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSnapshot {
    doc_ids: Vec<String>,
    embeddings: Vec<f64>,
    out_dim: usize,
    pub built_at_step: usize,
    pub encoder_checkpoint_hash: String,
}

/// Descending score, ties broken by ascending doc id.
/// Descending score, ascending id. Adding 0.0 folds -0.0 into +0.0 so the
/// two zeros tie.
fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    (b.1 + 0.0).total_cmp(&(a.1 + 0.0)).then_with(|| a.0.cmp(b.0))
}

pub fn build_index(params: &EncoderParams, corpus: &Corpus, vocab: &Vocabulary, step: usize) -> Result<IndexSnapshot> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot index an empty corpus"));
    }
    let rows: Vec<Vec<f64>> = corpus
        .docs()
        .par_iter()
        .map(|d| {
            params
                .encode(&d.token_seq(vocab))
                .map(|e| e.0)
                .map_err(|e| Error::EncodeDoc {
                    id: d.id.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(IndexSnapshot {
        doc_ids: corpus.docs().iter().map(|d| d.id.clone()).collect(),
        embeddings: rows.concat(),
        out_dim: params.out_dim,
        built_at_step: step,
        encoder_checkpoint_hash: params.content_hash(),
    })
}

impl IndexSnapshot {
    pub fn from_parts(
        doc_ids: Vec<String>,
        embeddings: Vec<f64>,
        out_dim: usize,
        built_at_step: usize,
        encoder_checkpoint_hash: String,
    ) -> Result<Self> {
        if out_dim == 0 || embeddings.len() != doc_ids.len() * out_dim {
            return Err(Error::DimensionMismatch {
                expected: doc_ids.len() * out_dim,
                actual: embeddings.len(),
            });
        }
        Ok(Self {
            doc_ids,
            embeddings,
            out_dim,
            built_at_step,
            encoder_checkpoint_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.embeddings[i * self.out_dim..(i + 1) * self.out_dim]
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    /// SHA-256 over encoder hash, doc ids and matrix (the build step is excluded).
    pub fn hash(&self) -> String {
        let mut bytes = Vec::with_capacity(self.embeddings.len() * 8 + self.doc_ids.len() * 8);
        bytes.extend_from_slice(self.encoder_checkpoint_hash.as_bytes());
        for id in &self.doc_ids {
            bytes.extend_from_slice(id.as_bytes());
            bytes.push(0);
        }
        for x in &self.embeddings {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        sha256_hex(&bytes)
    }

    /// Top `k` (row position, score) pairs.
    pub fn search_positions(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                actual: query.len(),
            });
        }
        if k == 0 {
            return Err(Error::Config("search depth k must be at least 1".into()));
        }
        let mut hits: Vec<(usize, f64)> = (0..self.len()).map(|i| (i, dot(query, self.row(i)))).collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| rank_order((&self.doc_ids[a.0], a.1), (&self.doc_ids[b.0], b.1));
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_unstable_by(cmp);
        Ok(hits)
    }

    /// Top `min(k, len)` documents by dot product.
    pub fn search(&self, query: &Embedding, k: usize) -> Result<Vec<(String, f64)>> {
        Ok(self
            .search_positions(query.as_slice(), k)?
            .into_iter()
            .map(|(i, s)| (self.doc_ids[i].clone(), s))
            .collect())
    }

    /// Writes `snapshot.json`, `doc_ids.txt` and `embeddings.bin` (f64 LE, row-major) into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = SnapshotMeta {
            encoder_checkpoint_hash: self.encoder_checkpoint_hash.clone(),
            built_at_step: self.built_at_step,
            num_docs: self.len(),
            out_dim: self.out_dim,
            snapshot_hash: self.hash(),
        };
        let p = dir.join("snapshot.json");
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
        let p = dir.join("doc_ids.txt");
        fs::write(&p, self.doc_ids.join("\n") + "\n").map_err(|e| Error::io(&p, e))?;
        let p = dir.join("embeddings.bin");
        let bytes: Vec<u8> = self.embeddings.iter().flat_map(|x| x.to_le_bytes()).collect();
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join("snapshot.json");
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let meta: SnapshotMeta = serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
        let p = dir.join("doc_ids.txt");
        let ids: Vec<String> = fs::read_to_string(&p)
            .map_err(|e| Error::io(&p, e))?
            .lines()
            .map(str::to_string)
            .collect();
        let p = dir.join("embeddings.bin");
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let emb = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_parts(ids, emb, meta.out_dim, meta.built_at_step, meta.encoder_checkpoint_hash)
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotMeta {
    encoder_checkpoint_hash: String,
    built_at_step: usize,
    num_docs: usize,
    out_dim: usize,
    snapshot_hash: String,
}

/// Free-function form of [`IndexSnapshot::search`].
pub fn search(index: &IndexSnapshot, query: &Embedding, k: usize) -> Result<Vec<(String, f64)>> {
    index.search(query, k)
}

/// Per-query ranked hard negatives, positive excluded, scores non-increasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NegativePool {
    pub pools: BTreeMap<String, Vec<(String, f64)>>,
}

impl NegativePool {
    pub fn get(&self, query_id: &str) -> Option<&[(String, f64)]> {
        self.pools.get(query_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    /// `query_id \t rank \t doc_id \t score`, ranks starting at 1.
    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for (qid, pool) in &self.pools {
            for (rank, (did, s)) in pool.iter().enumerate() {
                writeln!(w, "{qid}\t{}\t{did}\t{s:?}", rank + 1).map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pools: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(path, i + 1, "expected 4 columns"));
            }
            let score: f64 = cols[3]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "non-numeric score"))?;
            pools
                .entry(cols[0].to_string())
                .or_default()
                .push((cols[2].to_string(), score));
        }
        Ok(Self { pools })
    }
}

/// Searches `pool_size + 1` deep per query, drops the query's positive, and
/// keeps at most `pool_size` documents.
pub fn mine_hard_negatives(
    index: &IndexSnapshot,
    queries: &QuerySet,
    params: &EncoderParams,
    vocab: &Vocabulary,
    pool_size: usize,
) -> Result<NegativePool> {
    if pool_size == 0 {
        return Err(Error::Config("pool_size must be at least 1".into()));
    }
    if let Some(q) = queries.queries().iter().find(|q| q.source_doc_id.is_none()) {
        return Err(Error::MissingSource(q.id.clone()));
    }
    let mined: Vec<(String, Vec<(String, f64)>)> = queries
        .queries()
        .par_iter()
        .map(|q| {
            let positive = q.source_doc_id.as_deref().expect("checked above");
            let emb = params.encode(&q.token_seq(vocab))?;
            let pool: Vec<(String, f64)> = index
                .search_positions(emb.as_slice(), pool_size + 1)?
                .into_iter()
                .filter(|&(i, _)| index.doc_ids[i] != positive)
                .take(pool_size)
                .map(|(i, s)| (index.doc_ids[i].clone(), s))
                .collect();
            Ok((q.id.clone(), pool))
        })
        .collect::<Result<_>>()?;
    Ok(NegativePool {
        pools: mined.into_iter().collect(),
    })
}

/// Uniform draw from the query's pool.
pub fn sample_negative<'a, R: Rng + ?Sized>(pool: &'a NegativePool, query_id: &str, rng: &mut R) -> Result<&'a str> {
    let entries = pool
        .get(query_id)
        .ok_or_else(|| Error::MissingPool(query_id.to_string()))?;
    if entries.is_empty() {
        return Err(Error::MissingPool(query_id.to_string()));
    }
    Ok(&entries[rng.random_range(0..entries.len())].0)
}
