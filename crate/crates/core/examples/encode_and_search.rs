//! Encode a corpus with the Base model and search it exhaustively.
//!
//!     cargo run --release --example encode_and_search

use rgpl::benchmark::{Benchmark, BenchmarkConfig};
use rgpl::dense_index::build_index;
use rgpl::encoder::score;

fn main() -> rgpl::Result<()> {
    let bench = Benchmark::build(&BenchmarkConfig::small().with_seed(3))?;
    let (corpus, vocab, params) = (&bench.target.corpus, &bench.target.vocab, &bench.base);
    let index = build_index(params, corpus, vocab, 0)?;
    println!(
        "{} docs x {} dims, snapshot {}",
        index.len(),
        index.out_dim(),
        &index.hash()[..12]
    );

    for q in bench.eval_queries.queries().iter().take(2) {
        let emb = params.encode(&q.token_seq(vocab))?;
        println!("\n{}: {}", q.id, q.text);
        for (rank, (id, s)) in index.search(&emb, 5)?.iter().enumerate() {
            let doc = corpus.get(id).unwrap();
            let again = score(&emb, &params.encode(&doc.token_seq(vocab))?)?;
            let grade = bench.qrels.get(&q.id).and_then(|g| g.get(id)).copied().unwrap_or(0);
            println!(
                "  {} {id:>6} score {s:8.4} (re-encoded {again:8.4}) grade {grade}",
                rank + 1
            );
        }
    }
    Ok(())
}
