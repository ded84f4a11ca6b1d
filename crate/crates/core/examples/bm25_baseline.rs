//! Lexical baseline on the planted benchmark.
//!
//!     cargo run --release --example bm25_baseline

use rgpl::benchmark::{Benchmark, BenchmarkConfig};
use rgpl::bm25::{build_bm25, mine_bm25_negatives};
use rgpl::eval::{ndcg_at_k, success_at_k, RunFile};

fn main() -> rgpl::Result<()> {
    let bench = Benchmark::build(&BenchmarkConfig::small().with_seed(0))?;
    let (corpus, vocab) = (&bench.target.corpus, &bench.target.vocab);
    let index = build_bm25(corpus, vocab)?;
    println!(
        "{} docs, {} distinct terms, average length {:.1}",
        index.num_docs,
        index.postings.len(),
        index.avg_doc_len
    );

    let mut run = RunFile::new();
    for q in bench.eval_queries.queries() {
        run.insert(&q.id, index.search(&q.token_seq(vocab), 100)?)?;
    }
    println!("NDCG@10   {:.4}", ndcg_at_k(&run, &bench.qrels, 10)?.aggregate);
    println!("Success@5 {:.4}", success_at_k(&run, &bench.qrels, 5)?.aggregate);

    let pool = mine_bm25_negatives(&index, &bench.train_queries, vocab, 5)?;
    let q = &bench.train_queries.queries()[0];
    println!("\nBM25 negatives for {} ({}):", q.id, q.text);
    for (d, s) in pool.get(&q.id).unwrap() {
        println!("  {d} {s:.3}");
    }
    Ok(())
}
