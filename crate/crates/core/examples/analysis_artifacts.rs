//! Training-dynamics artifacts for one R-GPL run: margin and loss curves,
//! pool relevancy per refresh, score histograms and a 2-D projection.
//!
//!     cargo run --release --example analysis_artifacts [OUT_DIR]

use std::path::PathBuf;

use rgpl::analysis::{
    ema_smooth, margin_series, negative_relevancy_series, project_embeddings_2d, projection_csv, score_distribution,
    uniform_edges, write_text,
};
use rgpl::benchmark::{Benchmark, BenchmarkConfig, Mode};

fn main() -> rgpl::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rgpl-analysis"));
    let bench = Benchmark::build(&BenchmarkConfig::small().with_seed(4))?;
    let k = bench.config.train.refresh_interval_k;
    let (params, log) = bench.train(Mode::Rgpl, k)?;
    let (corpus, vocab, teacher) = (&bench.target.corpus, &bench.target.vocab, &bench.teacher);

    let margins = margin_series(&log)?;
    write_text(&out.join("margins.csv"), &margins.to_csv())?;
    let loss = ema_smooth(&margins.loss, 50)?;
    write_text(&out.join("loss_ema.csv"), &loss.to_csv())?;
    let first = log.refreshes[0].step;
    println!(
        "loss EMA: {:.2} before the first refresh, {:.2} after, {:.2} at the end",
        loss.mean_in(first - 100, first),
        loss.mean_in(first + 1, first + 100),
        loss.y.last().unwrap()
    );

    let relevancy = negative_relevancy_series(&log, teacher, &bench.train_queries, corpus, 200, 10, 0)?;
    write_text(&out.join("negative_relevancy.csv"), &relevancy.to_csv())?;
    let shown: Vec<String> = relevancy.y.iter().map(|y| format!("{y:.2}")).collect();
    println!("pool relevancy by refresh: {}", shown.join(" "));

    let edges = uniform_edges(-10.0, 10.0, 20);
    for (label, p) in [("base", &bench.base), ("rgpl", &params)] {
        let h = score_distribution(
            &bench.run(p)?,
            teacher,
            &bench.eval_queries,
            corpus,
            20,
            edges.clone(),
            label,
        )?;
        println!("{label}: mean teacher score of top-20 retrieved {:.3}", h.mean_center());
        write_text(&out.join(format!("hist_{label}.csv")), &h.to_csv())?;
    }

    let q = &bench.eval_queries.queries()[0];
    let q_emb = params.encode(&q.token_seq(vocab))?;
    let hits = rgpl::dense_index::build_index(&params, corpus, vocab, 0)?.search(&q_emb, 30)?;
    let docs: Vec<Vec<f64>> = hits
        .iter()
        .map(|(id, _)| Ok(params.encode(&corpus.get(id).unwrap().token_seq(vocab))?.0))
        .collect::<rgpl::Result<_>>()?;
    let proj = project_embeddings_2d(&docs, q_emb.as_slice())?;
    write_text(&out.join("projection.csv"), &projection_csv(&proj))?;
    println!("projection variance {:.3} / {:.3}", proj.variance[0], proj.variance[1]);
    println!("wrote CSVs to {}", out.display());
    Ok(())
}
