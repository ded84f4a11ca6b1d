//! MarginMSE distillation with static (GPL) or periodically remined (R-GPL)
//! hard negatives.

mod log;
mod optim;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, QuerySet, Vocabulary};
use crate::dense_index::{build_index, mine_hard_negatives, NegativePool};
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::teacher::TeacherScores;

pub use self::log::{EvalRecord, PoolDump, RefreshEvent, StepRecord, TrainLog};
pub use optim::{DenseGrad, Optimizer, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub query_id: String,
    pub pos_doc_id: String,
    pub neg_doc_id: String,
    pub teacher_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_steps: usize,
    /// Queries per batch; one sampled negative each.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Remine every `k` steps; 0 never remines.
    pub refresh_interval_k: usize,
    pub pool_size: usize,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Evaluate every this many steps; 0 disables.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 10_000,
            batch_size: 32,
            learning_rate: 1e-3,
            refresh_interval_k: 1_000,
            pool_size: 50,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.total_steps == 0 {
            return fail("total_steps must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.pool_size == 0 {
            return fail("pool_size must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0 {
            return fail("adam betas must lie in [0, 1) and eps must be positive");
        }
        Ok(())
    }

    /// Steps after which the negatives are remined: `{k, 2k, ...} ∩ [1, total_steps)`.
    pub fn refresh_schedule(&self) -> Vec<usize> {
        if self.refresh_interval_k == 0 {
            return Vec::new();
        }
        (1..)
            .map(|i| i * self.refresh_interval_k)
            .take_while(|&s| s < self.total_steps)
            .collect()
    }
}

/// Mean over the batch of `(student - teacher)^2`.
pub fn margin_mse_loss(student_margins: &[f64], teacher_margins: &[f64]) -> Result<f64> {
    if student_margins.len() != teacher_margins.len() {
        return Err(Error::DimensionMismatch {
            expected: student_margins.len(),
            actual: teacher_margins.len(),
        });
    }
    if student_margins.is_empty() {
        return Err(Error::Empty("margin batch"));
    }
    let sum: f64 = student_margins
        .iter()
        .zip(teacher_margins)
        .map(|(s, t)| (s - t).powi(2))
        .sum();
    Ok(sum / student_margins.len() as f64)
}

/// Everything the loop reads but never mutates.
#[derive(Clone, Copy)]
pub struct TrainingData<'a> {
    pub corpus: &'a Corpus,
    pub queries: &'a QuerySet,
    pub vocab: &'a Vocabulary,
    pub teacher: &'a TeacherScores,
}

/// Optional periodic evaluation: returns `(metric name, value)`.
pub type EvalHook<'a> = dyn Fn(&EncoderParams) -> Result<(String, f64)> + 'a;

/// Mutable training state: parameters, optimizer moments and sampling RNG.
pub struct TrainState {
    pub params: EncoderParams,
    pub step: usize,
    optimizer: Optimizer,
    rng: ChaCha8Rng,
    grad: DenseGrad,
    order: Vec<usize>,
    cursor: usize,
}

impl TrainState {
    pub fn new(params: EncoderParams, config: &TrainConfig, num_queries: usize) -> Self {
        let grad = DenseGrad::zeros_like(&params);
        Self {
            params,
            step: 0,
            optimizer: Optimizer::new(
                config.optimizer,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.eps,
            ),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            grad,
            order: (0..num_queries).collect(),
            cursor: num_queries,
        }
    }

    /// Next query position from a reshuffled-per-epoch order.
    fn next_query(&mut self) -> usize {
        if self.cursor >= self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }
}

/// One optimizer update from the mean MarginMSE gradient over `batch`.
pub fn train_step(
    state: &mut TrainState,
    data: TrainingData<'_>,
    batch: &[Triplet],
    pool_step: usize,
) -> Result<StepRecord> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let h = state.params.hidden_dim;
    state.grad.clear();
    let mut student = Vec::with_capacity(batch.len());
    let mut teacher = Vec::with_capacity(batch.len());
    for t in batch {
        let q = data
            .queries
            .get(&t.query_id)
            .ok_or_else(|| Error::UnknownQuery(t.query_id.clone()))?;
        let pos = data
            .corpus
            .get(&t.pos_doc_id)
            .ok_or_else(|| Error::UnknownDocument(t.pos_doc_id.clone()))?;
        let neg = data
            .corpus
            .get(&t.neg_doc_id)
            .ok_or_else(|| Error::UnknownDocument(t.neg_doc_id.clone()))?;
        let (qs, ps, ns) = (
            q.token_seq(data.vocab),
            pos.token_seq(data.vocab),
            neg.token_seq(data.vocab),
        );
        let back = state.params.triplet_backward(&qs, &ps, &ns, t.teacher_margin)?;
        student.push(back.student_margin);
        teacher.push(t.teacher_margin);
        for (acc, g) in state.grad.projection.iter_mut().zip(&back.projection) {
            *acc += scale * g;
        }
        for (acc, g) in state.grad.bias.iter_mut().zip(&back.bias) {
            *acc += scale * g;
        }
        let emb = &mut state.grad.embedding;
        back.scatter_rows([&qs, &ps, &ns], scale, |id, g, w| {
            let row = &mut emb[id as usize * h..(id as usize + 1) * h];
            for (r, x) in row.iter_mut().zip(g) {
                *r += w * x;
            }
        });
    }
    let loss = margin_mse_loss(&student, &teacher)?;
    state.optimizer.apply(&mut state.params, &state.grad);
    state.step += 1;
    Ok(StepRecord {
        step: state.step,
        loss,
        mean_teacher_margin: teacher.iter().sum::<f64>() * scale,
        mean_student_margin: student.iter().sum::<f64>() * scale,
        pool_step,
    })
}

/// Pools resolved to corpus positions, indexed by query position.
struct ResolvedPool {
    built_at: usize,
    negatives: Vec<Vec<usize>>,
}

fn resolve_pool(pool: &NegativePool, data: TrainingData<'_>, built_at: usize) -> Result<ResolvedPool> {
    let negatives = data
        .queries
        .queries()
        .iter()
        .map(|q| {
            let entries = pool
                .get(&q.id)
                .filter(|e| !e.is_empty())
                .ok_or_else(|| Error::MissingPool(q.id.clone()))?;
            entries
                .iter()
                .map(|(did, _)| {
                    data.corpus
                        .position(did)
                        .ok_or_else(|| Error::UnknownDocument(did.clone()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ResolvedPool { built_at, negatives })
}

/// Mean teacher score over every (query, pooled negative) pair.
pub fn pool_teacher_mean(pool: &NegativePool, data: TrainingData<'_>) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (qid, entries) in &pool.pools {
        let q = data.queries.get(qid).ok_or_else(|| Error::UnknownQuery(qid.clone()))?;
        for (did, _) in entries {
            let d = data
                .corpus
                .get(did)
                .ok_or_else(|| Error::UnknownDocument(did.clone()))?;
            sum += data.teacher.score(q, d)?;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Shared loop behind [`run_gpl`] and [`run_rgpl`].
pub fn run_training(
    config: &TrainConfig,
    params: EncoderParams,
    initial_pool: &NegativePool,
    data: TrainingData<'_>,
    eval: Option<&EvalHook<'_>>,
) -> Result<(EncoderParams, TrainLog)> {
    if config.total_steps > 0 {
        config.validate()?;
    }
    let mut positives = Vec::with_capacity(data.queries.len());
    for q in data.queries.queries() {
        let src = q
            .source_doc_id
            .as_deref()
            .ok_or_else(|| Error::MissingSource(q.id.clone()))?;
        positives.push(
            data.corpus
                .position(src)
                .ok_or_else(|| Error::UnknownDocument(src.to_string()))?,
        );
    }
    let mut pool = resolve_pool(initial_pool, data, 0)?;
    let mut log = TrainLog::default();
    log.pool_dumps.push(PoolDump {
        step: 0,
        mean_teacher_score: pool_teacher_mean(initial_pool, data)?,
        pool: initial_pool.clone(),
    });
    if config.total_steps == 0 {
        return Ok((params, log));
    }

    let docs = data.corpus.docs();
    let queries = data.queries.queries();
    let mut state = TrainState::new(params, config, queries.len());
    let mut pos_scores: HashMap<usize, f64> = HashMap::new();
    let mut margins: HashMap<(usize, usize), f64> = HashMap::new();
    let mut batch = Vec::with_capacity(config.batch_size);

    for step in 1..=config.total_steps {
        batch.clear();
        for _ in 0..config.batch_size {
            let qi = state.next_query();
            let negs = &pool.negatives[qi];
            let ni = negs[state.rng.random_range(0..negs.len())];
            let pi = positives[qi];
            let margin = match margins.get(&(qi, ni)) {
                Some(&m) => m,
                None => {
                    let ps = match pos_scores.get(&qi) {
                        Some(&s) => s,
                        None => {
                            let s = data.teacher.score(&queries[qi], &docs[pi])?;
                            pos_scores.insert(qi, s);
                            s
                        }
                    };
                    let m = ps - data.teacher.score(&queries[qi], &docs[ni])?;
                    margins.insert((qi, ni), m);
                    m
                }
            };
            batch.push(Triplet {
                query_id: queries[qi].id.clone(),
                pos_doc_id: docs[pi].id.clone(),
                neg_doc_id: docs[ni].id.clone(),
                teacher_margin: margin,
            });
        }
        let record = train_step(&mut state, data, &batch, pool.built_at)?;
        log.steps.push(record);

        if config.eval_every > 0 && step % config.eval_every == 0 {
            if let Some(hook) = eval {
                let (metric, value) = hook(&state.params)?;
                log.evals.push(EvalRecord { step, metric, value });
            }
        }

        let k = config.refresh_interval_k;
        if k > 0 && step % k == 0 && step < config.total_steps {
            let index = build_index(&state.params, data.corpus, data.vocab, step)?;
            let fresh = mine_hard_negatives(&index, data.queries, &state.params, data.vocab, config.pool_size)?;
            let mean = pool_teacher_mean(&fresh, data)?;
            ::log::debug!("step {step}: remined pools, mean teacher score {mean:.4}");
            pool = resolve_pool(&fresh, data, step)?;
            log.refreshes.push(RefreshEvent {
                step,
                mean_teacher_score: mean,
                snapshot_hash: index.hash(),
            });
            log.pool_dumps.push(PoolDump {
                step,
                mean_teacher_score: mean,
                pool: fresh,
            });
        }
    }
    Ok((state.params, log))
}

/// GPL: negatives from `initial_pool` for the whole run.
/// `config.refresh_interval_k` is ignored.
pub fn run_gpl(
    config: &TrainConfig,
    params: EncoderParams,
    initial_pool: &NegativePool,
    data: TrainingData<'_>,
    eval: Option<&EvalHook<'_>>,
) -> Result<(EncoderParams, TrainLog)> {
    let config = TrainConfig {
        refresh_interval_k: 0,
        ..config.clone()
    };
    run_training(&config, params, initial_pool, data, eval)
}

/// R-GPL: rebuild the index with the current parameters and remine the
/// pools every `config.refresh_interval_k` steps.
pub fn run_rgpl(
    config: &TrainConfig,
    params: EncoderParams,
    initial_pool: &NegativePool,
    data: TrainingData<'_>,
    eval: Option<&EvalHook<'_>>,
) -> Result<(EncoderParams, TrainLog)> {
    if config.refresh_interval_k == 0 {
        return Err(Error::Config("R-GPL needs refresh_interval_k > 0".into()));
    }
    run_training(config, params, initial_pool, data, eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_examples() {
        assert_eq!(margin_mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(margin_mse_loss(&[0.5], &[1.5]).unwrap(), 1.0);
        assert_eq!(margin_mse_loss(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(margin_mse_loss(&[0.0], &[1.0, 1.0]).is_err());
        assert!(margin_mse_loss(&[], &[]).is_err());
    }

    #[test]
    fn schedule_arithmetic() {
        let cfg = TrainConfig {
            total_steps: 3000,
            refresh_interval_k: 1000,
            ..Default::default()
        };
        assert_eq!(cfg.refresh_schedule(), vec![1000, 2000]);
        let never = TrainConfig {
            refresh_interval_k: 3000,
            ..cfg.clone()
        };
        assert!(never.refresh_schedule().is_empty());
        let gpl = TrainConfig {
            refresh_interval_k: 0,
            ..cfg
        };
        assert!(gpl.refresh_schedule().is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                total_steps: 0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                pool_size: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
            TrainConfig {
                beta1: 1.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
