//! Planted two-domain benchmark: a source domain for pretraining the Base
//! model and a target domain with pseudo-queries for adaptation and held-out
//! queries with planted qrels for evaluation.

use serde::{Deserialize, Serialize};

use crate::bm25::{build_bm25, mine_bm25_negatives};
use crate::data::{
    generate_pseudo_queries, generate_synthetic_corpus, PseudoQueryConfig, Qrels, QuerySet, SyntheticDomain,
    SyntheticDomainSpec,
};
use crate::dense_index::{build_index, mine_hard_negatives, NegativePool};
use crate::encoder::{init_params, EncoderParams};
use crate::error::{Error, Result};
use crate::eval::{produce_run, Metric, MetricReport, RunFile};
use crate::teacher::{GradeThresholds, OracleTeacher, TeacherScores};
use crate::trainer::{run_gpl, run_rgpl, TrainConfig, TrainLog, TrainingData};
use crate::util::fnv1a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gpl,
    Rgpl,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gpl" => Ok(Mode::Gpl),
            "rgpl" | "r-gpl" => Ok(Mode::Rgpl),
            _ => Err(Error::Config(format!("unknown mode {s:?}; expected gpl or rgpl"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Gpl => "gpl",
            Mode::Rgpl => "rgpl",
        })
    }
}

/// Which model mines the negatives used before the first refresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialMiner {
    Base,
    Bm25,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub target: SyntheticDomainSpec,
    pub source: SyntheticDomainSpec,
    pub train_queries: PseudoQueryConfig,
    pub eval_queries: PseudoQueryConfig,
    pub teacher: OracleTeacher,
    pub grades: GradeThresholds,
    pub hidden_dim: usize,
    pub out_dim: usize,
    /// Source-domain steps that produce the Base model.
    pub base_steps: usize,
    pub train: TrainConfig,
    pub initial_miner: InitialMiner,
    pub eval_depth: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let target = SyntheticDomainSpec {
            vocab_size: 4000,
            num_docs: 10_000,
            num_topics: 200,
            doc_len_range: (20, 60),
            topic_token_skew: 0.6,
            seed: 1,
            num_themes: 10,
            theme_affinity: 0.75,
            theme_token_share: 0.3,
            words_per_topic: 8,
            words_per_theme: 16,
            id_prefix: "d".into(),
        };
        let source = SyntheticDomainSpec {
            seed: 2,
            id_prefix: "s".into(),
            ..target.clone()
        };
        Self {
            target,
            source,
            train_queries: PseudoQueryConfig {
                max_source_docs: Some(1000),
                seed: 3,
                ..Default::default()
            },
            eval_queries: PseudoQueryConfig {
                max_source_docs: Some(200),
                seed: 4,
                id_prefix: "t".into(),
                ..Default::default()
            },
            teacher: OracleTeacher::default(),
            grades: GradeThresholds::default(),
            hidden_dim: 32,
            out_dim: 32,
            base_steps: 2000,
            train: TrainConfig::default(),
            initial_miner: InitialMiner::Base,
            eval_depth: 100,
        }
    }
}

fn derive_seed(seed: u64, label: &str) -> u64 {
    fnv1a(&[&seed.to_le_bytes(), label.as_bytes()])
}

impl BenchmarkConfig {
    /// Scaled-down preset: 1,500 documents, 300 training queries, 3,000 steps.
    pub fn small() -> Self {
        let mut c = Self::default();
        for spec in [&mut c.target, &mut c.source] {
            spec.vocab_size = 1200;
            spec.num_docs = 1500;
            spec.num_topics = 40;
            spec.num_themes = 5;
        }
        c.train_queries.max_source_docs = Some(300);
        c.eval_queries.max_source_docs = Some(100);
        c.hidden_dim = 24;
        c.out_dim = 24;
        c.base_steps = 600;
        c.train.total_steps = 3000;
        c.train.refresh_interval_k = 300;
        c.train.pool_size = 30;
        c
    }

    /// Copy with every internal seed derived from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.target.seed = derive_seed(seed, "target");
        c.source.seed = derive_seed(seed, "source");
        c.train_queries.seed = derive_seed(seed, "train-queries");
        c.eval_queries.seed = derive_seed(seed, "eval-queries");
        c.teacher.seed = derive_seed(seed, "teacher");
        c.train.seed = derive_seed(seed, "train");
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.source.validate()?;
        if self.source.vocab_size != self.target.vocab_size {
            return Err(Error::Config("source and target must share vocab_size".into()));
        }
        if self.hidden_dim == 0 || self.out_dim == 0 || self.eval_depth == 0 {
            return Err(Error::Config(
                "hidden_dim, out_dim and eval_depth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Base model: random init trained on source-domain pseudo-queries with
/// BM25-mined negatives.
pub fn pretrain_base(source: &SyntheticDomain, config: &BenchmarkConfig) -> Result<(EncoderParams, TrainLog)> {
    let init = init_params(
        source.vocab.len(),
        config.hidden_dim,
        config.out_dim,
        derive_seed(config.train.seed, "init"),
    )?;
    let queries = generate_pseudo_queries(
        &source.corpus,
        &source.vocab,
        &PseudoQueryConfig {
            seed: derive_seed(config.source.seed, "queries"),
            id_prefix: "sq".into(),
            ..config.train_queries.clone()
        },
    )?;
    let queries = tokenized(queries, source)?;
    let bm25 = build_bm25(&source.corpus, &source.vocab)?;
    let pool = mine_bm25_negatives(&bm25, &queries, &source.vocab, config.train.pool_size)?;
    let teacher = TeacherScores::Oracle(config.teacher.clone());
    let train = TrainConfig {
        total_steps: config.base_steps,
        eval_every: 0,
        ..config.train.clone()
    };
    let data = TrainingData {
        corpus: &source.corpus,
        queries: &queries,
        vocab: &source.vocab,
        teacher: &teacher,
    };
    run_gpl(&train, init, &pool, data, None)
}

fn tokenized(mut queries: QuerySet, domain: &SyntheticDomain) -> Result<QuerySet> {
    queries.tokenize(&domain.vocab);
    queries.check_sources(&domain.corpus)?;
    Ok(queries)
}

/// Everything needed to train and score adapted models on the target domain.
pub struct Benchmark {
    pub config: BenchmarkConfig,
    pub target: SyntheticDomain,
    pub train_queries: QuerySet,
    pub eval_queries: QuerySet,
    pub qrels: Qrels,
    pub teacher: TeacherScores,
    pub base: EncoderParams,
    pub base_log: TrainLog,
    pub initial_pool: NegativePool,
}

impl Benchmark {
    pub fn build(config: &BenchmarkConfig) -> Result<Self> {
        config.validate()?;
        let mut target = generate_synthetic_corpus(&config.target)?;
        target.corpus.tokenize(&target.vocab);
        let mut source = generate_synthetic_corpus(&config.source)?;
        source.corpus.tokenize(&source.vocab);

        let train_queries = tokenized(
            generate_pseudo_queries(&target.corpus, &target.vocab, &config.train_queries)?,
            &target,
        )?;
        let eval_queries = tokenized(
            generate_pseudo_queries(&target.corpus, &target.vocab, &config.eval_queries)?,
            &target,
        )?;
        let qrels = target.planted.qrels(&target.corpus, &eval_queries, &config.grades)?;

        let (base, base_log) = pretrain_base(&source, config)?;
        let initial_pool = match config.initial_miner {
            InitialMiner::Base => {
                let index = build_index(&base, &target.corpus, &target.vocab, 0)?;
                mine_hard_negatives(&index, &train_queries, &base, &target.vocab, config.train.pool_size)?
            }
            InitialMiner::Bm25 => {
                let bm25 = build_bm25(&target.corpus, &target.vocab)?;
                mine_bm25_negatives(&bm25, &train_queries, &target.vocab, config.train.pool_size)?
            }
        };
        Ok(Self {
            config: config.clone(),
            teacher: TeacherScores::Oracle(config.teacher.clone()),
            target,
            train_queries,
            eval_queries,
            qrels,
            base,
            base_log,
            initial_pool,
        })
    }

    pub fn data(&self) -> TrainingData<'_> {
        TrainingData {
            corpus: &self.target.corpus,
            queries: &self.train_queries,
            vocab: &self.target.vocab,
            teacher: &self.teacher,
        }
    }

    pub fn run(&self, params: &EncoderParams) -> Result<RunFile> {
        let index = build_index(params, &self.target.corpus, &self.target.vocab, 0)?;
        produce_run(
            params,
            &index,
            &self.eval_queries,
            &self.target.vocab,
            self.config.eval_depth,
        )
    }

    pub fn evaluate(&self, params: &EncoderParams, metric: Metric) -> Result<MetricReport> {
        metric.evaluate(&self.run(params)?, &self.qrels)
    }

    /// Adapts the Base model with `config.train`, overriding the refresh interval.
    pub fn train(&self, mode: Mode, k: usize) -> Result<(EncoderParams, TrainLog)> {
        let cfg = TrainConfig {
            refresh_interval_k: k,
            ..self.config.train.clone()
        };
        match mode {
            Mode::Gpl => run_gpl(&cfg, self.base.clone(), &self.initial_pool, self.data(), None),
            Mode::Rgpl => run_rgpl(&cfg, self.base.clone(), &self.initial_pool, self.data(), None),
        }
    }
}
