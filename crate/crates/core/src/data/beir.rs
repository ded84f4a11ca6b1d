//! BEIR-style JSONL corpora/queries and TREC qrels.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{Corpus, Document, Qrels, Query, QuerySet};
use crate::error::{Error, Result};

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn str_field<'a>(obj: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| obj.get(*k).and_then(Value::as_str))
}

fn id_field(obj: &Value) -> Option<String> {
    for key in ["_id", "id"] {
        match obj.get(key) {
            Some(Value::String(s)) => return Some(s.clone()),
            Some(Value::Number(n)) => return Some(n.to_string()),
            _ => {}
        }
    }
    None
}

fn topic_field(path: &Path, line: usize, obj: &Value) -> Result<Option<Vec<f64>>> {
    match obj.get("latent_topic") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::parse(path, line, format!("bad latent_topic: {e}"))),
    }
}

/// Reads a line-delimited corpus. Title and text are joined by one space.
pub fn load_beir_corpus(path: &Path) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, format!("malformed record: {e}")))?;
        let id = id_field(&obj).ok_or_else(|| Error::parse(path, line_no, "missing id"))?;
        let body = str_field(&obj, &["text"]).ok_or_else(|| Error::parse(path, line_no, "missing text"))?;
        let text = match str_field(&obj, &["title"]) {
            Some(t) if !t.is_empty() => format!("{t} {body}"),
            _ => body.to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let mut doc = Document::new(id, text);
        doc.latent_topic = topic_field(path, line_no, &obj)?;
        docs.push(doc);
    }
    Corpus::new(docs)
}

/// Reads a line-delimited query file. `source_doc_id` may sit at top level
/// or under `metadata`.
pub fn load_queries(path: &Path) -> Result<QuerySet> {
    let mut queries = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, format!("malformed record: {e}")))?;
        let id = id_field(&obj).ok_or_else(|| Error::parse(path, line_no, "missing id"))?;
        let text = str_field(&obj, &["text"]).ok_or_else(|| Error::parse(path, line_no, "missing text"))?;
        let mut q = Query::new(id, text);
        q.source_doc_id = str_field(&obj, &["source_doc_id"])
            .or_else(|| obj.get("metadata").and_then(|m| str_field(m, &["source_doc_id"])))
            .map(str::to_string);
        q.latent_topic = topic_field(path, line_no, &obj)?;
        queries.push(q);
    }
    QuerySet::new(queries)
}

/// Parses a TREC qrels file (`qid iter docid grade`, tab-separated). The
/// three-column BEIR layout (`query-id corpus-id score`, optional header) is
/// also accepted. A repeated pair keeps its last grade; each repeat adds a warning.
pub fn parse_qrels(path: &Path) -> Result<(Qrels, Vec<String>)> {
    let mut qrels = Qrels::new();
    let mut warnings = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (qcol, dcol, gcol) = match cols.len() {
            4 => (0, 2, 3),
            3 => (0, 1, 2),
            n => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected 4 (TREC) or 3 (BEIR) tab-separated columns, found {n}"),
                ))
            }
        };
        let Ok(grade) = cols[gcol].trim().parse::<i64>() else {
            if line_no == 1 && cols.len() == 3 {
                continue;
            }
            return Err(Error::parse(
                path,
                line_no,
                format!("non-integer grade `{}`", cols[gcol]),
            ));
        };
        if grade < 0 {
            return Err(Error::parse(path, line_no, format!("negative grade {grade}")));
        }
        let (qid, did) = (cols[qcol].trim(), cols[dcol].trim());
        if qid.is_empty() || did.is_empty() {
            return Err(Error::parse(path, line_no, "empty query or document id"));
        }
        if let Some(prev) = qrels.insert(qid, did, grade as u32) {
            let msg = format!(
                "{}:{line_no}: duplicate judgment ({qid}, {did}); grade {prev} replaced by {grade}",
                path.display()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok((qrels, warnings))
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(path).map(|(q, _)| q)
}

#[derive(Serialize)]
struct DocRecord<'a> {
    #[serde(rename = "_id")]
    id: &'a str,
    title: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    latent_topic: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct QueryRecord<'a> {
    #[serde(rename = "_id")]
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_doc_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latent_topic: Option<&'a [f64]>,
}

fn writer(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for d in corpus.docs() {
        let rec = DocRecord {
            id: &d.id,
            title: "",
            text: &d.text,
            latent_topic: d.latent_topic.as_deref(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Serde(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_queries(queries: &QuerySet, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for q in queries.queries() {
        let rec = QueryRecord {
            id: &q.id,
            text: &q.text,
            source_doc_id: q.source_doc_id.as_deref(),
            latent_topic: q.latent_topic.as_deref(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Serde(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_qrels(qrels: &Qrels, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    for (qid, docs) in qrels.iter() {
        for (did, grade) in docs {
            writeln!(w, "{qid}\t0\t{did}\t{grade}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
