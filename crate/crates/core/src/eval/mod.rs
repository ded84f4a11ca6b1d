//! Run production, NDCG@k / Success@k and a one-sided Wilcoxon signed-rank test.

mod wilcoxon;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Qrels, QuerySet, Vocabulary};
use crate::dense_index::IndexSnapshot;
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};

pub use wilcoxon::{wilcoxon_exact_upper_tail, wilcoxon_one_sided, WilcoxonResult};

pub const DEFAULT_DEPTH: usize = 100;

/// Ranked retrieval results per query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub runs: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a ranking after checking scores are non-increasing and ids unique.
    pub fn insert(&mut self, qid: &str, ranking: Vec<(String, f64)>) -> Result<()> {
        for w in ranking.windows(2) {
            if w[1].1 > w[0].1 {
                return Err(Error::Config(format!("run for {qid}: scores must be non-increasing")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (d, _) in &ranking {
            if !seen.insert(d.as_str()) {
                return Err(Error::DuplicatePair(qid.to_string(), d.clone()));
            }
        }
        self.runs.insert(qid.to_string(), ranking);
        Ok(())
    }

    pub fn get(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.runs.get(qid).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn to_trec(&self, tag: &str) -> String {
        let mut out = String::new();
        for (qid, ranking) in &self.runs {
            for (rank, (did, score)) in ranking.iter().enumerate() {
                let _ = writeln!(out, "{qid} Q0 {did} {} {score:?} {tag}", rank + 1);
            }
        }
        out
    }

    pub fn save_trec(&self, path: &Path, tag: &str) -> Result<()> {
        fs::write(path, self.to_trec(tag)).map_err(|e| Error::io(path, e))
    }

    pub fn parse_trec(text: &str, path: &Path) -> Result<Self> {
        let mut rows: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected 6 columns, found {}", cols.len()),
                ));
            }
            let rank: usize = cols[3]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad rank {:?}", cols[3])))?;
            let score: f64 = cols[4]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad score {:?}", cols[4])))?;
            rows.entry(cols[0].to_string())
                .or_default()
                .push((rank, cols[2].to_string(), score));
        }
        let mut run = RunFile::new();
        for (qid, mut r) in rows {
            r.sort_by_key(|x| x.0);
            run.insert(&qid, r.into_iter().map(|(_, d, s)| (d, s)).collect())?;
        }
        Ok(run)
    }

    pub fn load_trec(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_trec(&text, path)
    }
}

/// Retrieves the top `depth` documents for every query.
pub fn produce_run(
    params: &EncoderParams,
    index: &IndexSnapshot,
    queries: &QuerySet,
    vocab: &Vocabulary,
    depth: usize,
) -> Result<RunFile> {
    let ranked: Vec<(String, Vec<(String, f64)>)> = queries
        .queries()
        .par_iter()
        .map(|q| {
            let emb = params.encode(&q.token_seq(vocab))?;
            Ok((q.id.clone(), index.search(&emb, depth)?))
        })
        .collect::<Result<_>>()?;
    Ok(RunFile {
        runs: ranked.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub cutoff: usize,
    pub per_query: BTreeMap<String, f64>,
    pub aggregate: f64,
    /// Queries in the run whose judgments are all zero.
    pub excluded_no_relevant: Vec<String>,
    /// Queries in the run with no judgments at all.
    pub excluded_unjudged: Vec<String>,
}

impl MetricReport {
    fn from_values(
        metric: &str,
        cutoff: usize,
        per_query: BTreeMap<String, f64>,
        zero: Vec<String>,
        unjudged: Vec<String>,
    ) -> Self {
        let aggregate = if per_query.is_empty() {
            0.0
        } else {
            per_query.values().sum::<f64>() / per_query.len() as f64
        };
        Self {
            metric: metric.to_string(),
            cutoff,
            per_query,
            aggregate,
            excluded_no_relevant: zero,
            excluded_unjudged: unjudged,
        }
    }

    pub fn name(&self) -> String {
        format!("{}@{}", self.metric, self.cutoff)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("query_id\tvalue\n");
        for (q, v) in &self.per_query {
            let _ = writeln!(out, "{q}\t{v:?}");
        }
        out
    }

    /// Writes `<stem>.tsv` with per-query values and `<stem>.json` with the summary.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let tsv = dir.join(format!("{stem}.tsv"));
        fs::write(&tsv, self.to_tsv()).map_err(|e| Error::io(&tsv, e))?;
        let json = dir.join(format!("{stem}.json"));
        let summary = serde_json::json!({
            "metric": self.name(),
            "aggregate": self.aggregate,
            "num_queries": self.per_query.len(),
            "excluded_no_relevant": self.excluded_no_relevant,
            "excluded_unjudged": self.excluded_unjudged,
        });
        let body = serde_json::to_string_pretty(&summary).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(&json, body).map_err(|e| Error::io(&json, e))
    }
}

/// Applies `f(ranking, judgments)` to every scorable query.
fn per_query<F>(metric: &str, run: &RunFile, qrels: &Qrels, k: usize, f: F) -> Result<MetricReport>
where
    F: Fn(&[(String, f64)], &BTreeMap<String, u32>) -> f64,
{
    if k == 0 {
        return Err(Error::Config("metric cutoff must be at least 1".into()));
    }
    let mut values = BTreeMap::new();
    let (mut zero, mut unjudged) = (Vec::new(), Vec::new());
    for (qid, ranking) in &run.runs {
        let Some(judged) = qrels.get(qid) else {
            log::warn!("query {qid} has no judgments; excluded from {metric}@{k}");
            unjudged.push(qid.clone());
            continue;
        };
        if judged.values().all(|&g| g == 0) {
            zero.push(qid.clone());
            continue;
        }
        let top = &ranking[..ranking.len().min(k)];
        values.insert(qid.clone(), f(top, judged));
    }
    Ok(MetricReport::from_values(metric, k, values, zero, unjudged))
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank0: usize) -> f64 {
    (rank0 as f64 + 2.0).log2()
}

pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    per_query("ndcg", run, qrels, k, |top, judged| {
        let dcg: f64 = top
            .iter()
            .enumerate()
            .map(|(i, (d, _))| gain(judged.get(d).copied().unwrap_or(0)) / discount(i))
            .sum();
        let mut grades: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = grades
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| gain(g) / discount(i))
            .sum();
        dcg / idcg
    })
}

pub fn success_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    per_query("success", run, qrels, k, |top, judged| {
        let hit = top.iter().any(|(d, _)| judged.get(d).is_some_and(|&g| g >= 1));
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

/// Metric selector accepted on the command line: `ndcg@10`, `success@5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ndcg(usize),
    Success(usize),
}

impl Metric {
    pub fn evaluate(&self, run: &RunFile, qrels: &Qrels) -> Result<MetricReport> {
        match *self {
            Metric::Ndcg(k) => ndcg_at_k(run, qrels, k),
            Metric::Success(k) => success_at_k(run, qrels, k),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown metric {s:?}; expected ndcg@K or success@K"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "success" => Ok(Metric::Success(k)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Success(k) => write!(f, "success@{k}"),
        }
    }
}

/// Pairs two reports by query id (intersection) and tests `a > b`.
pub fn compare_reports(a: &MetricReport, b: &MetricReport) -> Result<WilcoxonResult> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (q, va) in &a.per_query {
        if let Some(vb) = b.per_query.get(q) {
            xs.push(*va);
            ys.push(*vb);
        }
    }
    wilcoxon_one_sided(&xs, &ys)
}
