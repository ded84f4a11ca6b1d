//! Training log records and their line-delimited JSON persistence.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense_index::NegativePool;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub mean_teacher_margin: f64,
    pub mean_student_margin: f64,
    /// Step at which the pool the negatives were drawn from was mined.
    pub pool_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshEvent {
    pub step: usize,
    pub mean_teacher_score: f64,
    pub snapshot_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

/// Negative pools in force from `step` on (0 = initial mining).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolDump {
    pub step: usize,
    pub mean_teacher_score: f64,
    pub pool: NegativePool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub refreshes: Vec<RefreshEvent>,
    pub evals: Vec<EvalRecord>,
    pub pool_dumps: Vec<PoolDump>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Step(StepRecord),
    Refresh(RefreshEvent),
    Eval(EvalRecord),
    Pool(PoolDump),
}

impl TrainLog {
    pub fn refresh_steps(&self) -> Vec<usize> {
        self.refreshes.iter().map(|r| r.step).collect()
    }

    pub fn pool_dump(&self, step: usize) -> Option<&PoolDump> {
        self.pool_dumps.iter().find(|d| d.step == step)
    }

    /// One JSON object per line, tagged by `kind`: pool dumps first, then
    /// steps, refreshes and evals in step order.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut emit = |line: Line| -> Result<()> {
            let s = serde_json::to_string(&line).map_err(|e| Error::Serde(e.to_string()))?;
            writeln!(w, "{s}").map_err(|e| Error::io(path, e))
        };
        for d in &self.pool_dumps {
            emit(Line::Pool(d.clone()))?;
        }
        for s in &self.steps {
            emit(Line::Step(s.clone()))?;
        }
        for r in &self.refreshes {
            emit(Line::Refresh(r.clone()))?;
        }
        for e in &self.evals {
            emit(Line::Eval(e.clone()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut log = TrainLog::default();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))? {
                Line::Step(s) => log.steps.push(s),
                Line::Refresh(r) => log.refreshes.push(r),
                Line::Eval(e) => log.evals.push(e),
                Line::Pool(d) => log.pool_dumps.push(d),
            }
        }
        Ok(log)
    }
}
