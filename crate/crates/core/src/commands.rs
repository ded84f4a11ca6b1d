//! Pipeline stages behind the `rgpl` binary: prepare, train, eval, sweep, analyze.
//!
//! Layout under the output directory:
//! `data/` prepared inputs, `base/` the Base checkpoint, `runs/<name>/`
//! trained checkpoints and logs, `eval/<name>/` reports, `sweep/`, `analysis/<name>/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    ema_smooth, margin_series, negative_relevancy_series, project_embeddings_2d, projection_csv, score_distribution,
    uniform_edges, write_text,
};
use crate::benchmark::{pretrain_base, BenchmarkConfig, InitialMiner, Mode};
use crate::bm25::{build_bm25, mine_bm25_negatives};
use crate::data::{
    generate_pseudo_queries, generate_synthetic_corpus, load_beir_corpus, load_qrels, load_queries, save_corpus,
    save_qrels, save_queries, Corpus, PseudoQueryConfig, Qrels, QuerySet, SyntheticDomainSpec, Vocabulary,
};
use crate::dense_index::{build_index, mine_hard_negatives, NegativePool};
use crate::encoder::{init_params, load_checkpoint, save_checkpoint, EncoderParams};
use crate::error::{Error, Result};
use crate::eval::{compare_reports, produce_run, Metric, MetricReport};
use crate::teacher::{load_teacher_table, GradeThresholds, OracleTeacher, TeacherScores};
use crate::trainer::{run_gpl, run_rgpl, TrainConfig, TrainLog, TrainingData};
use crate::util::sha256_hex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub target: SyntheticDomainSpec,
    pub source: SyntheticDomainSpec,
    pub train_queries: PseudoQueryConfig,
    pub eval_queries: PseudoQueryConfig,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        Self {
            target: b.target,
            source: b.source,
            train_queries: b.train_queries,
            eval_queries: b.eval_queries,
        }
    }
}

/// Files of an existing BEIR-style dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub corpus: PathBuf,
    pub vocab: PathBuf,
    /// Training pseudo-queries; each needs `source_doc_id`.
    pub train_queries: PathBuf,
    pub eval_queries: PathBuf,
    pub qrels: PathBuf,
    /// `qid\tdid\tscore` table; without it the planted-topic oracle is used.
    #[serde(default)]
    pub teacher_scores: Option<PathBuf>,
    /// Base model; without it a freshly initialized encoder is used.
    #[serde(default)]
    pub base_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub base_steps: usize,
    pub initial_miner: InitialMiner,
    /// Checkpoint that mines the initial pools when `initial_miner = "base"`;
    /// defaults to the Base model.
    pub miner_checkpoint: Option<PathBuf>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        Self {
            hidden_dim: b.hidden_dim,
            out_dim: b.out_dim,
            base_steps: b.base_steps,
            initial_miner: b.initial_miner,
            miner_checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub depth: usize,
    pub metrics: Vec<String>,
    /// Refresh intervals for `sweep`; 0 means never (plain GPL).
    pub sweep_k: Vec<usize>,
    /// Queries sampled for the pool-relevancy series.
    pub relevancy_queries: usize,
    /// Pool depth for the pool-relevancy series.
    pub relevancy_top_n: usize,
    /// Retrieval depth for the score histograms.
    pub histogram_top_n: usize,
    pub histogram_bins: usize,
    pub ema_window: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            depth: 100,
            metrics: vec!["ndcg@10".into(), "success@5".into()],
            sweep_k: vec![333, 1000, 1667, 3333],
            relevancy_queries: 1000,
            relevancy_top_n: 50,
            histogram_top_n: 100,
            histogram_bins: 20,
            ema_window: 50,
        }
    }
}

/// One experiment: a data source, model, teacher, training and evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    /// Master seed; with a synthetic source every internal seed derives from it.
    pub seed: u64,
    /// Planted benchmark; used with default settings when neither section is given.
    pub synthetic: Option<SyntheticSection>,
    pub dataset: Option<DatasetPaths>,
    pub model: ModelSection,
    pub teacher: OracleTeacher,
    pub grades: GradeThresholds,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            synthetic: None,
            dataset: None,
            model: ModelSection::default(),
            teacher: OracleTeacher::default(),
            grades: GradeThresholds::default(),
            train: TrainConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.synthetic.is_some() && self.dataset.is_some() {
            return Err(Error::Config("[synthetic] and [dataset] are mutually exclusive".into()));
        }
        if self.eval.depth == 0 {
            return Err(Error::Config("eval.depth must be at least 1".into()));
        }
        for m in &self.eval.metrics {
            m.parse::<Metric>()?;
        }
        self.train.validate()?;
        if let Some(b) = self.benchmark_config() {
            b.validate()?;
        }
        Ok(())
    }

    fn benchmark(&self, s: &SyntheticSection) -> BenchmarkConfig {
        BenchmarkConfig {
            target: s.target.clone(),
            source: s.source.clone(),
            train_queries: s.train_queries.clone(),
            eval_queries: s.eval_queries.clone(),
            teacher: self.teacher.clone(),
            grades: self.grades.clone(),
            hidden_dim: self.model.hidden_dim,
            out_dim: self.model.out_dim,
            base_steps: self.model.base_steps,
            train: self.train.clone(),
            initial_miner: self.model.initial_miner,
            eval_depth: self.eval.depth,
        }
    }

    /// Synthetic benchmark settings with every seed derived from `self.seed`.
    pub fn benchmark_config(&self) -> Option<BenchmarkConfig> {
        if self.dataset.is_some() {
            return None;
        }
        let s = self.synthetic.clone().unwrap_or_default();
        Some(self.benchmark(&s).with_seed(self.seed))
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn metrics(&self) -> Result<Vec<Metric>> {
        self.eval.metrics.iter().map(|m| m.parse()).collect()
    }

    /// Effective training settings; with a synthetic source the training seed
    /// comes from the master seed.
    pub fn train_config(&self) -> TrainConfig {
        match self.benchmark_config() {
            Some(b) => b.train,
            None => TrainConfig {
                seed: self.seed,
                ..self.train.clone()
            },
        }
    }
}

/// Provenance written next to every artifact group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// File name relative to the manifest's directory, mapped to its SHA-256.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Manifest {
    fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            config_hash: config.hash(),
            seed: config.seed,
            artifacts: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    fn add(&mut self, dir: &Path, name: &str) -> Result<()> {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.artifacts.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing input; run `prepare` first"),
        ))
    }
}

/// Where each stage reads and writes.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            root: config.output_dir.clone(),
        }
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn base(&self) -> PathBuf {
        self.root.join("base")
    }

    pub fn base_checkpoint(&self) -> PathBuf {
        self.base().join("base.ckpt")
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn run_dir(&self, name: &str) -> PathBuf {
        self.runs().join(name)
    }
}

/// Directory name of a training run.
pub fn run_name(mode: Mode, k: usize) -> String {
    match mode {
        Mode::Gpl => "gpl".into(),
        Mode::Rgpl => format!("rgpl-k{k}"),
    }
}

const DATA_FILES: [&str; 5] = [
    "vocab.txt",
    "corpus.jsonl",
    "train_queries.jsonl",
    "eval_queries.jsonl",
    "qrels.tsv",
];

/// Writes the corpus, queries, qrels and Base checkpoint.
pub fn cmd_prepare(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let layout = Layout::new(config);
    let data_dir = layout.data();
    ensure_dir(&data_dir)?;
    ensure_dir(&layout.base())?;
    let mut manifest = Manifest::new("prepare", config);

    let base = if let Some(bench) = config.benchmark_config() {
        let target = generate_synthetic_corpus(&bench.target)?;
        let train = generate_pseudo_queries(&target.corpus, &target.vocab, &bench.train_queries)?;
        let eval = generate_pseudo_queries(&target.corpus, &target.vocab, &bench.eval_queries)?;
        let qrels = target.planted.qrels(&target.corpus, &eval, &bench.grades)?;
        write_data(&data_dir, &target.vocab, &target.corpus, &train, &eval, &qrels)?;
        let mut source = generate_synthetic_corpus(&bench.source)?;
        source.corpus.tokenize(&source.vocab);
        let (base, base_log) = pretrain_base(&source, &bench)?;
        base_log.save_jsonl(&layout.base().join("train_log.jsonl"))?;
        manifest.details = serde_json::json!({
            "source": "synthetic",
            "num_docs": target.corpus.len(),
            "num_train_queries": train.len(),
            "num_eval_queries": eval.len(),
            "num_judgments": qrels.num_judgments(),
            "base_steps": bench.base_steps,
        });
        base
    } else {
        let paths = config.dataset.as_ref().expect("validated");
        let vocab = Vocabulary::load(&paths.vocab)?;
        let corpus = load_beir_corpus(&paths.corpus)?;
        let train = load_queries(&paths.train_queries)?;
        train.check_sources(&corpus)?;
        let eval = load_queries(&paths.eval_queries)?;
        let qrels = load_qrels(&paths.qrels)?;
        log::info!(
            "loaded {} documents, {} training queries, {} eval queries, {} judgments",
            corpus.len(),
            train.len(),
            eval.len(),
            qrels.num_judgments()
        );
        write_data(&data_dir, &vocab, &corpus, &train, &eval, &qrels)?;
        if let Some(t) = &paths.teacher_scores {
            fs::copy(t, data_dir.join("teacher.tsv")).map_err(|e| Error::io(t, e))?;
            manifest.add(&data_dir, "teacher.tsv")?;
        }
        manifest.details = serde_json::json!({
            "source": "dataset",
            "num_docs": corpus.len(),
            "num_train_queries": train.len(),
            "num_eval_queries": eval.len(),
            "num_judgments": qrels.num_judgments(),
        });
        match &paths.base_checkpoint {
            Some(p) => load_checkpoint(p)?.0,
            None => {
                log::warn!("no base checkpoint given; Base is a freshly initialized encoder");
                init_params(vocab.len(), config.model.hidden_dim, config.model.out_dim, config.seed)?
            }
        }
    };
    save_checkpoint(&base, 0, &layout.base_checkpoint())?;
    for f in DATA_FILES {
        manifest.add(&data_dir, f)?;
    }
    manifest.artifacts.insert(
        "base.ckpt".into(),
        sha256_hex(&fs::read(layout.base_checkpoint()).map_err(|e| Error::io(layout.base_checkpoint(), e))?),
    );
    manifest.save(&layout.root)?;
    Ok(manifest)
}

fn write_data(
    dir: &Path,
    vocab: &Vocabulary,
    corpus: &Corpus,
    train: &QuerySet,
    eval: &QuerySet,
    qrels: &Qrels,
) -> Result<()> {
    vocab.save(&dir.join("vocab.txt"))?;
    save_corpus(corpus, &dir.join("corpus.jsonl"))?;
    save_queries(train, &dir.join("train_queries.jsonl"))?;
    save_queries(eval, &dir.join("eval_queries.jsonl"))?;
    save_qrels(qrels, &dir.join("qrels.tsv"))
}

/// Prepared inputs loaded back from disk.
pub struct Prepared {
    pub vocab: Vocabulary,
    pub corpus: Corpus,
    pub train_queries: QuerySet,
    pub eval_queries: QuerySet,
    pub qrels: Qrels,
    pub teacher: TeacherScores,
    pub base: EncoderParams,
}

impl Prepared {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let layout = Layout::new(config);
        let dir = layout.data();
        for f in DATA_FILES {
            require(&dir.join(f))?;
        }
        require(&layout.base_checkpoint())?;
        let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
        let mut corpus = load_beir_corpus(&dir.join("corpus.jsonl"))?;
        corpus.tokenize(&vocab);
        let mut train_queries = load_queries(&dir.join("train_queries.jsonl"))?;
        train_queries.tokenize(&vocab);
        train_queries.check_sources(&corpus)?;
        let mut eval_queries = load_queries(&dir.join("eval_queries.jsonl"))?;
        eval_queries.tokenize(&vocab);
        let qrels = load_qrels(&dir.join("qrels.tsv"))?;
        let table = dir.join("teacher.tsv");
        let teacher = if table.exists() {
            load_teacher_table(&table)?
        } else {
            let t = config
                .benchmark_config()
                .map(|b| b.teacher)
                .unwrap_or_else(|| config.teacher.clone());
            TeacherScores::Oracle(t)
        };
        let (base, _) = load_checkpoint(&layout.base_checkpoint())?;
        Ok(Self {
            vocab,
            corpus,
            train_queries,
            eval_queries,
            qrels,
            teacher,
            base,
        })
    }

    pub fn data(&self) -> TrainingData<'_> {
        TrainingData {
            corpus: &self.corpus,
            queries: &self.train_queries,
            vocab: &self.vocab,
            teacher: &self.teacher,
        }
    }

    fn initial_pool(&self, config: &ExperimentConfig, pool_size: usize) -> Result<NegativePool> {
        match config.model.initial_miner {
            InitialMiner::Bm25 => {
                let bm25 = build_bm25(&self.corpus, &self.vocab)?;
                mine_bm25_negatives(&bm25, &self.train_queries, &self.vocab, pool_size)
            }
            InitialMiner::Base => {
                let miner = match &config.model.miner_checkpoint {
                    Some(p) => load_checkpoint(p)?.0,
                    None => self.base.clone(),
                };
                let index = build_index(&miner, &self.corpus, &self.vocab, 0)?;
                mine_hard_negatives(&index, &self.train_queries, &miner, &self.vocab, pool_size)
            }
        }
    }

    pub fn evaluate(&self, params: &EncoderParams, depth: usize, metric: Metric) -> Result<MetricReport> {
        let index = build_index(params, &self.corpus, &self.vocab, 0)?;
        let run = produce_run(params, &index, &self.eval_queries, &self.vocab, depth)?;
        metric.evaluate(&run, &self.qrels)
    }
}

/// Mines the initial pools, then adapts the Base model with GPL or R-GPL.
/// Returns the run directory.
pub fn cmd_train(config: &ExperimentConfig, mode: Mode, k: Option<usize>) -> Result<PathBuf> {
    config.validate()?;
    let prepared = Prepared::load(config)?;
    train_prepared(config, &prepared, mode, k)
}

fn train_prepared(config: &ExperimentConfig, prepared: &Prepared, mode: Mode, k: Option<usize>) -> Result<PathBuf> {
    let mut train = config.train_config();
    if let Some(k) = k {
        train.refresh_interval_k = k;
    }
    if mode == Mode::Gpl {
        train.refresh_interval_k = 0;
    }
    let layout = Layout::new(config);
    let dir = layout.run_dir(&run_name(mode, train.refresh_interval_k));
    ensure_dir(&dir)?;
    let pool = prepared.initial_pool(config, train.pool_size)?;
    pool.save_tsv(&dir.join("initial_pool.tsv"))?;
    let (params, log) = match mode {
        Mode::Gpl => run_gpl(&train, prepared.base.clone(), &pool, prepared.data(), None)?,
        Mode::Rgpl => run_rgpl(&train, prepared.base.clone(), &pool, prepared.data(), None)?,
    };
    save_checkpoint(&params, train.total_steps as u64, &dir.join("model.ckpt"))?;
    log.save_jsonl(&dir.join("train_log.jsonl"))?;
    write_json(&dir.join("train_config.json"), &train)?;
    let mut manifest = Manifest::new("train", config);
    for f in ["initial_pool.tsv", "model.ckpt", "train_log.jsonl", "train_config.json"] {
        manifest.add(&dir, f)?;
    }
    manifest.details = serde_json::json!({
        "mode": mode.to_string(),
        "refresh_interval_k": train.refresh_interval_k,
        "total_steps": train.total_steps,
        "refresh_events": log.refreshes.len(),
        "train_seed": train.seed,
    });
    manifest.save(&dir)?;
    Ok(dir)
}

/// Result of `cmd_eval`: one report per metric, and a test against the second
/// checkpoint when given.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub reports: Vec<MetricReport>,
    pub significance: Vec<serde_json::Value>,
    pub dir: PathBuf,
}

fn load_model(layout: &Layout, spec: &str) -> Result<(String, EncoderParams)> {
    let (name, path) = if spec == "base" {
        ("base".to_string(), layout.base_checkpoint())
    } else {
        let candidate = layout.run_dir(spec).join("model.ckpt");
        if candidate.exists() {
            (spec.to_string(), candidate)
        } else {
            let p = PathBuf::from(spec);
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            (stem, p)
        }
    };
    require(&path)?;
    Ok((name, load_checkpoint(&path)?.0))
}

/// Evaluates a checkpoint (`base`, a run name, or a path) on the eval queries.
/// With `against`, adds a one-sided Wilcoxon test of `checkpoint > against`.
pub fn cmd_eval(
    config: &ExperimentConfig,
    checkpoint: &str,
    against: Option<&str>,
    metrics: &[Metric],
) -> Result<EvalOutcome> {
    config.validate()?;
    let layout = Layout::new(config);
    let (name, params) = load_model(&layout, checkpoint)?;
    let other = against.map(|a| load_model(&layout, a)).transpose()?;
    let prepared = Prepared::load(config)?;
    let dir = layout.root.join("eval").join(&name);
    ensure_dir(&dir)?;
    let mut manifest = Manifest::new("eval", config);

    let index = build_index(&params, &prepared.corpus, &prepared.vocab, 0)?;
    let run = produce_run(
        &params,
        &index,
        &prepared.eval_queries,
        &prepared.vocab,
        config.eval.depth,
    )?;
    run.save_trec(&dir.join("run.trec"), &name)?;
    manifest.add(&dir, "run.trec")?;

    let mut reports = Vec::new();
    let mut significance = Vec::new();
    for &metric in metrics {
        let report = metric.evaluate(&run, &prepared.qrels)?;
        let stem = metric.to_string();
        report.save(&dir, &stem)?;
        manifest.add(&dir, &format!("{stem}.tsv"))?;
        manifest.add(&dir, &format!("{stem}.json"))?;
        if let Some((other_name, other_params)) = &other {
            let other_report = prepared.evaluate(other_params, config.eval.depth, metric)?;
            let test = compare_reports(&report, &other_report)?;
            let body = serde_json::json!({
                "metric": stem,
                "a": name,
                "b": other_name,
                "a_mean": report.aggregate,
                "b_mean": other_report.aggregate,
                "alternative": "a > b",
                "p_value": test.p_value,
                "n": test.n,
                "statistic": test.statistic,
                "method": test.method,
            });
            let file = format!("significance_{stem}_vs_{other_name}.json");
            write_json(&dir.join(&file), &body)?;
            manifest.add(&dir, &file)?;
            significance.push(body);
        }
        reports.push(report);
    }
    manifest.details = serde_json::json!({ "checkpoint": checkpoint, "against": against });
    manifest.save(&dir)?;
    Ok(EvalOutcome {
        reports,
        significance,
        dir,
    })
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// 0 for plain GPL.
    pub k: usize,
    pub run: String,
    pub metric: String,
    pub value: f64,
    pub p_value_vs_gpl: Option<f64>,
}

/// Trains one model per refresh interval (0 = GPL) and reports each, keyed by k.
pub fn cmd_sweep(config: &ExperimentConfig, k_values: &[usize], metric: Metric) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let prepared = Prepared::load(config)?;
    let layout = Layout::new(config);
    let dir = layout.root.join("sweep");
    ensure_dir(&dir)?;
    let mut ks: Vec<usize> = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let total = config.train_config().total_steps;

    let mut reports: BTreeMap<usize, (String, MetricReport)> = BTreeMap::new();
    for &k in &ks {
        // an interval that never fires is plain GPL
        let mode = if k == 0 || k >= total { Mode::Gpl } else { Mode::Rgpl };
        let run_dir = train_prepared(config, &prepared, mode, Some(k))?;
        let (params, _) = load_checkpoint(&run_dir.join("model.ckpt"))?;
        let name = run_dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        reports.insert(k, (name, prepared.evaluate(&params, config.eval.depth, metric)?));
    }
    let gpl = reports.get(&0).map(|(_, r)| r.clone());
    let mut rows = Vec::new();
    let mut tsv = String::from("k\trun\tmetric\tvalue\tp_value_vs_gpl\n");
    for (k, (name, report)) in &reports {
        let p = match (&gpl, k) {
            (Some(g), k) if *k > 0 => Some(compare_reports(report, g)?.p_value),
            _ => None,
        };
        let p_text = p.map(|p| format!("{p:?}")).unwrap_or_else(|| "NA".into());
        tsv.push_str(&format!("{k}\t{name}\t{metric}\t{:?}\t{p_text}\n", report.aggregate));
        report.save(&dir, &format!("{name}_{metric}"))?;
        rows.push(SweepRow {
            k: *k,
            run: name.clone(),
            metric: metric.to_string(),
            value: report.aggregate,
            p_value_vs_gpl: p,
        });
    }
    write_text(&dir.join("sweep.tsv"), &tsv)?;
    write_json(&dir.join("sweep.json"), &rows)?;
    let mut manifest = Manifest::new("sweep", config);
    manifest.add(&dir, "sweep.tsv")?;
    manifest.add(&dir, "sweep.json")?;
    manifest.details = serde_json::json!({ "k_values": ks, "metric": metric.to_string() });
    manifest.save(&dir)?;
    Ok(rows)
}

/// Writes CSV artifacts for a training run: margin/loss curves with EMA,
/// pool-relevancy series, Base vs adapted score histograms, and a 2-D
/// projection of one query with its retrieved documents.
pub fn cmd_analyze(config: &ExperimentConfig, run: &str) -> Result<PathBuf> {
    config.validate()?;
    let layout = Layout::new(config);
    let run_dir = layout.run_dir(run);
    require(&run_dir.join("train_log.jsonl"))?;
    require(&run_dir.join("model.ckpt"))?;
    let prepared = Prepared::load(config)?;
    let log = TrainLog::load_jsonl(&run_dir.join("train_log.jsonl"))?;
    let (params, _) = load_checkpoint(&run_dir.join("model.ckpt"))?;
    let dir = layout.root.join("analysis").join(run);
    ensure_dir(&dir)?;
    let ev = &config.eval;
    let mut manifest = Manifest::new("analyze", config);

    let margins = margin_series(&log)?;
    write_text(&dir.join("margins.csv"), &margins.to_csv())?;
    write_text(
        &dir.join("loss_ema.csv"),
        &ema_smooth(&margins.loss, ev.ema_window)?.to_csv(),
    )?;
    write_text(
        &dir.join("teacher_margin_ema.csv"),
        &ema_smooth(&margins.teacher_margin, ev.ema_window)?.to_csv(),
    )?;
    let relevancy = negative_relevancy_series(
        &log,
        &prepared.teacher,
        &prepared.train_queries,
        &prepared.corpus,
        ev.relevancy_queries,
        ev.relevancy_top_n,
        config.seed,
    )?;
    write_text(&dir.join("negative_relevancy.csv"), &relevancy.to_csv())?;

    let weight = match &prepared.teacher {
        TeacherScores::Oracle(t) => t.weight,
        TeacherScores::Table(_) => 1.0,
    };
    let edges = uniform_edges(-weight, weight, ev.histogram_bins.max(1));
    let mut hist_csv = String::new();
    let mut means = BTreeMap::new();
    for (label, p) in [("base", &prepared.base), (run, &params)] {
        let index = build_index(p, &prepared.corpus, &prepared.vocab, 0)?;
        let r = produce_run(p, &index, &prepared.eval_queries, &prepared.vocab, ev.histogram_top_n)?;
        let h = score_distribution(
            &r,
            &prepared.teacher,
            &prepared.eval_queries,
            &prepared.corpus,
            ev.histogram_top_n,
            edges.clone(),
            label,
        )?;
        means.insert(label.to_string(), h.mean_center());
        let body = h.to_csv();
        if hist_csv.is_empty() {
            hist_csv.push_str(&body);
        } else {
            hist_csv.push_str(body.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
    }
    write_text(&dir.join("score_histograms.csv"), &hist_csv)?;

    if let Some(q) = prepared.eval_queries.queries().first() {
        let index = build_index(&params, &prepared.corpus, &prepared.vocab, 0)?;
        let qe = params.encode(&q.token_seq(&prepared.vocab))?;
        let hits = index.search_positions(qe.as_slice(), ev.histogram_top_n)?;
        let docs: Vec<Vec<f64>> = hits.iter().map(|&(i, _)| index.row(i).to_vec()).collect();
        let proj = project_embeddings_2d(&docs, qe.as_slice())?;
        write_text(&dir.join("projection.csv"), &projection_csv(&proj))?;
        manifest.add(&dir, "projection.csv")?;
    }

    for f in [
        "margins.csv",
        "loss_ema.csv",
        "teacher_margin_ema.csv",
        "negative_relevancy.csv",
        "score_histograms.csv",
    ] {
        manifest.add(&dir, f)?;
    }
    let run_manifest = Manifest::load(&run_dir).ok();
    manifest.details = serde_json::json!({
        "run": run,
        "checkpoint_sha256": run_manifest.and_then(|m| m.artifacts.get("model.ckpt").cloned()),
        "checkpoint_params_hash": params.content_hash(),
        "histogram_mean": means,
        "refresh_steps": margins.refresh_steps,
    });
    manifest.save(&dir)?;
    Ok(dir)
}
