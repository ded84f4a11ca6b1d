//! Load a BEIR-layout dataset from disk and tokenize it.
//!
//!     cargo run --example tokenize_and_load [DATASET_DIR]
//!
//! DATASET_DIR needs `corpus.jsonl`, `queries.jsonl` and `qrels/test.tsv`.
//! Without one, a three-document dataset is written to a temp dir first.

use std::fs;
use std::path::{Path, PathBuf};

use rgpl::data::{load_beir_corpus, load_qrels, load_queries, Vocabulary};

fn write_toy(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir.join("qrels"))?;
    fs::write(
        dir.join("corpus.jsonl"),
        concat!(
            r#"{"_id": "d1", "title": "Vitamin D", "text": "Vitamin D deficiency is common in winter."}"#,
            "\n",
            r#"{"_id": "d2", "title": "", "text": "Exercise lowers resting heart rate."}"#,
            "\n",
            r#"{"_id": "d3", "title": "Sleep", "text": "Short sleep raises cortisol levels."}"#,
            "\n",
        ),
    )?;
    fs::write(
        dir.join("queries.jsonl"),
        concat!(
            r#"{"_id": "q1", "text": "does vitamin D drop in winter"}"#,
            "\n",
            r#"{"_id": "q2", "text": "sleep and cortisol"}"#,
            "\n",
        ),
    )?;
    fs::write(
        dir.join("qrels/test.tsv"),
        "query-id\tcorpus-id\tscore\nq1\td1\t2\nq2\td3\t1\n",
    )
}

fn main() -> rgpl::Result<()> {
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            let d = std::env::temp_dir().join("rgpl-toy-beir");
            write_toy(&d).expect("write toy dataset");
            d
        }
    };
    let mut corpus = load_beir_corpus(&dir.join("corpus.jsonl"))?;
    let mut queries = load_queries(&dir.join("queries.jsonl"))?;
    let qrels = load_qrels(&dir.join("qrels/test.tsv"))?;
    println!(
        "{} documents, {} queries, {} judgments",
        corpus.len(),
        queries.len(),
        qrels.num_judgments()
    );

    // vocabulary from the corpus itself; a real run would load a fixed vocab.txt
    let mut words: Vec<String> = corpus
        .docs()
        .iter()
        .flat_map(|d| {
            d.text
                .split(|c: char| !c.is_alphanumeric())
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .filter(|w| !w.is_empty())
        .collect();
    words.sort();
    words.dedup();
    let vocab = Vocabulary::with_words(words)?;
    corpus.tokenize(&vocab);
    queries.tokenize(&vocab);

    for q in queries.queries().iter().take(3) {
        let seq = q.token_seq(&vocab);
        println!("{:>4} {:?}", q.id, seq.ids());
        println!("     {}", vocab.detokenize(&seq));
    }
    let d = &corpus.docs()[0];
    println!(
        "{:>4} {} tokens: {}",
        d.id,
        d.token_seq(&vocab).len(),
        vocab.detokenize(&d.token_seq(&vocab))
    );
    Ok(())
}
