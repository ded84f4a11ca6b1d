//! Diagnostic artifacts as plain data: score histograms, smoothed curves,
//! pool-relevancy series and 2-D embedding projections.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, QuerySet};
use crate::error::{Error, Result};
use crate::eval::RunFile;
use crate::linalg::{mean, std_dev};
use crate::teacher::TeacherScores;
use crate::trainer::TrainLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub label: String,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bins `values`; anything outside the edges lands in the nearest edge bin.
    pub fn from_values(label: &str, bin_edges: Vec<f64>, values: &[f64]) -> Result<Self> {
        if bin_edges.len() < 2 {
            return Err(Error::Config("histogram needs at least two edges".into()));
        }
        if bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("histogram edges must be strictly increasing".into()));
        }
        let bins = bin_edges.len() - 1;
        let mut counts = vec![0u64; bins];
        for &v in values {
            // partition_point gives the number of edges <= v
            let i = bin_edges.partition_point(|&e| e <= v);
            counts[i.saturating_sub(1).min(bins - 1)] += 1;
        }
        Ok(Self {
            label: label.to_string(),
            bin_edges,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count-weighted mean of bin centres.
    pub fn mean_center(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 * 0.5 * (self.bin_edges[i] + self.bin_edges[i + 1]))
            .sum();
        s / total as f64
    }

    /// Columns: `label,bin_lo,bin_hi,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{c}",
                self.label,
                self.bin_edges[i],
                self.bin_edges[i + 1]
            );
        }
        out
    }
}

/// `bins` equal-width edges spanning `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + w * i as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x: Vec<usize>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_std: Option<Vec<f64>>,
}

impl Series {
    pub fn new(x: Vec<usize>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("series x must be strictly increasing".into()));
        }
        Ok(Self { x, y, y_std: None })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean of `y` over points with `lo <= x < hi`.
    pub fn mean_in(&self, lo: usize, hi: usize) -> f64 {
        let ys: Vec<f64> = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(x, _)| (lo..hi).contains(*x))
            .map(|(_, y)| *y)
            .collect();
        mean(&ys)
    }

    /// Columns: `x,y` or `x,y,y_std`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.y_std {
            Some(sd) => {
                out.push_str("x,y,y_std\n");
                for i in 0..self.x.len() {
                    let _ = writeln!(out, "{},{:?},{:?}", self.x[i], self.y[i], sd[i]);
                }
            }
            None => {
                out.push_str("x,y\n");
                for i in 0..self.x.len() {
                    let _ = writeln!(out, "{},{:?}", self.x[i], self.y[i]);
                }
            }
        }
        out
    }
}

/// Teacher scores of each query's top `top_n` retrieved documents, pooled.
pub fn score_distribution(
    run: &RunFile,
    teacher: &TeacherScores,
    queries: &QuerySet,
    corpus: &Corpus,
    top_n: usize,
    bin_edges: Vec<f64>,
    label: &str,
) -> Result<Histogram> {
    let mut values = Vec::new();
    for (qid, ranking) in &run.runs {
        let q = queries.get(qid).ok_or_else(|| Error::UnknownQuery(qid.clone()))?;
        if ranking.len() < top_n {
            log::debug!("run for {qid} has depth {} < {top_n}; using all", ranking.len());
        }
        for (did, _) in ranking.iter().take(top_n) {
            let d = corpus.get(did).ok_or_else(|| Error::UnknownDocument(did.clone()))?;
            values.push(teacher.score(q, d)?);
        }
    }
    Histogram::from_values(label, bin_edges, &values)
}

/// Exponential moving average with `alpha = 2 / (window + 1)`, seeded by the first value.
pub fn ema_smooth(series: &Series, window: usize) -> Result<Series> {
    if window == 0 {
        return Err(Error::Config("ema window must be at least 1".into()));
    }
    let alpha = 2.0 / (window as f64 + 1.0);
    let mut y = Vec::with_capacity(series.y.len());
    for (i, &v) in series.y.iter().enumerate() {
        y.push(if i == 0 {
            v
        } else {
            alpha * v + (1.0 - alpha) * y[i - 1]
        });
    }
    Ok(Series {
        x: series.x.clone(),
        y,
        y_std: None,
    })
}

/// Mean and std of the teacher score over the top `top_n` pool members of a
/// fixed random sample of queries, one point per pool dump (0 = initial pools).
pub fn negative_relevancy_series(
    log: &TrainLog,
    teacher: &TeacherScores,
    queries: &QuerySet,
    corpus: &Corpus,
    sample_queries: usize,
    top_n: usize,
    seed: u64,
) -> Result<Series> {
    let mut steps = vec![0];
    steps.extend(log.refresh_steps());
    let first = log.pool_dump(0).ok_or(Error::MissingPoolDump(0))?;
    let ids: Vec<&String> = first.pool.pools.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<&String> = if sample_queries >= ids.len() {
        ids.clone()
    } else {
        sample(&mut rng, ids.len(), sample_queries)
            .into_iter()
            .map(|i| ids[i])
            .collect()
    };
    chosen.sort();

    let (mut ys, mut sds) = (Vec::new(), Vec::new());
    for &step in &steps {
        let dump = log.pool_dump(step).ok_or(Error::MissingPoolDump(step))?;
        let mut scores = Vec::new();
        for qid in &chosen {
            let q = queries.get(qid).ok_or_else(|| Error::UnknownQuery((*qid).clone()))?;
            let pool = dump.pool.get(qid).ok_or_else(|| Error::MissingPool((*qid).clone()))?;
            for (did, _) in pool.iter().take(top_n) {
                let d = corpus.get(did).ok_or_else(|| Error::UnknownDocument(did.clone()))?;
                scores.push(teacher.score(q, d)?);
            }
        }
        ys.push(mean(&scores));
        sds.push(std_dev(&scores));
    }
    let mut s = Series::new((0..steps.len()).collect(), ys)?;
    s.y_std = Some(sds);
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2d {
    pub query: [f64; 2],
    pub docs: Vec<[f64; 2]>,
    /// Variance captured by each axis.
    pub variance: [f64; 2],
}

/// PCA onto the two leading directions, fitted on documents plus the query.
/// Each axis is flipped so its largest-magnitude coordinate is positive.
pub fn project_embeddings_2d(embeddings: &[Vec<f64>], query_emb: &[f64]) -> Result<Projection2d> {
    let n = embeddings.len() + 1;
    if n < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {n}")));
    }
    let d = query_emb.len();
    if let Some(bad) = embeddings.iter().find(|e| e.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let points = DMatrix::from_fn(n, d, |i, j| if i + 1 == n { query_emb[j] } else { embeddings[i][j] });
    let distinct = (1..n).any(|i| points.row(i) != points.row(0));
    if !distinct {
        return Err(Error::Degenerate("fewer than 2 distinct points".into()));
    }
    let centroid = points.row_mean();
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= &centroid;
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut coords = vec![[0.0f64; 2]; n];
    let mut variance = [0.0; 2];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(k);
        let proj: Vec<f64> = (0..n).map(|i| centered.row(i).dot(&v.transpose())).collect();
        let mut big = 0;
        for i in 1..n {
            if proj[i].abs() > proj[big].abs() {
                big = i;
            }
        }
        let sign = if proj[big] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * proj[i];
        }
        variance[axis] = proj.iter().map(|p| p * p).sum::<f64>() / n as f64;
    }
    let query = coords.pop().expect("n >= 3");
    Ok(Projection2d {
        query,
        docs: coords,
        variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSeries {
    pub teacher_margin: Series,
    pub student_margin: Series,
    pub loss: Series,
    pub refresh_steps: Vec<usize>,
}

/// Per-step teacher margin, student margin and loss, with refresh steps.
pub fn margin_series(log: &TrainLog) -> Result<MarginSeries> {
    if log.steps.is_empty() {
        return Err(Error::Empty("training log"));
    }
    let x: Vec<usize> = log.steps.iter().map(|s| s.step).collect();
    let pick = |f: fn(&crate::trainer::StepRecord) -> f64| Series::new(x.clone(), log.steps.iter().map(f).collect());
    Ok(MarginSeries {
        teacher_margin: pick(|s| s.mean_teacher_margin)?,
        student_margin: pick(|s| s.mean_student_margin)?,
        loss: pick(|s| s.loss)?,
        refresh_steps: log.refresh_steps(),
    })
}

impl MarginSeries {
    /// Columns: `step,teacher_margin,student_margin,loss,refresh`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,teacher_margin,student_margin,loss,refresh\n");
        for i in 0..self.loss.len() {
            let step = self.loss.x[i];
            let refresh = u8::from(self.refresh_steps.binary_search(&step).is_ok());
            let _ = writeln!(
                out,
                "{step},{:?},{:?},{:?},{refresh}",
                self.teacher_margin.y[i], self.student_margin.y[i], self.loss.y[i]
            );
        }
        out
    }
}

/// Columns: `role,index,pc1,pc2`, the query first.
pub fn projection_csv(p: &Projection2d) -> String {
    let mut out = String::from("role,index,pc1,pc2\n");
    let _ = writeln!(out, "query,0,{:?},{:?}", p.query[0], p.query[1]);
    for (i, c) in p.docs.iter().enumerate() {
        let _ = writeln!(out, "doc,{i},{:?},{:?}", c[0], c[1]);
    }
    out
}

/// Writes `body`, creating missing parent directories.
pub fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
