//! Write TREC run files, score them, and test one model against another.
//!
//!     cargo run --release --example evaluate_and_significance [OUT_DIR]

use std::path::PathBuf;

use rgpl::benchmark::{Benchmark, BenchmarkConfig, Mode};
use rgpl::data::save_qrels;
use rgpl::eval::{compare_reports, Metric, RunFile};

fn main() -> rgpl::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rgpl-eval"));
    std::fs::create_dir_all(&out).expect("create output dir");
    let bench = Benchmark::build(&BenchmarkConfig::small().with_seed(2))?;
    let (adapted, _) = bench.train(Mode::Rgpl, bench.config.train.refresh_interval_k)?;

    save_qrels(&bench.qrels, &out.join("qrels.tsv"))?;
    for (name, params) in [("base", &bench.base), ("rgpl", &adapted)] {
        bench.run(params)?.save_trec(&out.join(format!("{name}.trec")), name)?;
    }

    // everything below reads back from disk
    let base = RunFile::load_trec(&out.join("base.trec"))?;
    let rgpl = RunFile::load_trec(&out.join("rgpl.trec"))?;
    let qrels = rgpl::data::load_qrels(&out.join("qrels.tsv"))?;
    for metric in ["ndcg@10", "success@5"] {
        let metric: Metric = metric.parse()?;
        let a = metric.evaluate(&rgpl, &qrels)?;
        let b = metric.evaluate(&base, &qrels)?;
        let t = compare_reports(&a, &b)?;
        println!(
            "{:<10} base {:.4}  rgpl {:.4}  one-sided Wilcoxon p = {:.2e} (n={}, {})",
            metric.to_string(),
            b.aggregate,
            a.aggregate,
            t.p_value,
            t.n,
            t.method
        );
        a.save(&out, &format!("rgpl_{metric}"))?;
    }
    println!("wrote runs and per-query metrics to {}", out.display());
    Ok(())
}
