//! Generate a planted-topic domain with pseudo-queries and graded qrels.
//!
//!     cargo run --example synthetic_domain [SEED]

use rgpl::data::{generate_pseudo_queries, generate_synthetic_corpus, PseudoQueryConfig, SyntheticDomainSpec};
use rgpl::teacher::{teacher_score, GradeThresholds, TeacherScores};

fn main() -> rgpl::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let spec = SyntheticDomainSpec {
        vocab_size: 800,
        num_docs: 500,
        num_topics: 20,
        num_themes: 4,
        theme_affinity: 0.75,
        seed,
        ..Default::default()
    };
    let domain = generate_synthetic_corpus(&spec)?;
    let queries = generate_pseudo_queries(
        &domain.corpus,
        &domain.vocab,
        &PseudoQueryConfig {
            max_source_docs: Some(50),
            seed,
            ..Default::default()
        },
    )?;
    let qrels = domain
        .planted
        .qrels(&domain.corpus, &queries, &GradeThresholds::default())?;
    println!(
        "{} docs over {} topics, {} queries, {} positive judgments",
        domain.corpus.len(),
        domain.planted.num_topics(),
        queries.len(),
        qrels.num_judgments()
    );

    let mut sizes = vec![0usize; domain.planted.num_topics()];
    for &t in domain.planted.doc_topics() {
        sizes[t] += 1;
    }
    println!("docs per topic: {sizes:?}");
    let sibling = (1..20).find(|&t| spec.theme_of(t) == spec.theme_of(0)).unwrap();
    let stranger = (1..20).find(|&t| spec.theme_of(t) != spec.theme_of(0)).unwrap();
    println!(
        "cos(topic 0, topic {sibling}) = {:.3} (same theme), cos(topic 0, topic {stranger}) = {:.3}",
        domain.planted.topic_cosine(0, sibling),
        domain.planted.topic_cosine(0, stranger)
    );

    let teacher = TeacherScores::oracle(10.0, 0.0, seed);
    let q = &queries.queries()[0];
    let src = domain.corpus.get(q.source_doc_id.as_deref().unwrap()).unwrap();
    println!("\nquery {}: {}", q.id, q.text);
    println!("source {}: {}", src.id, src.text);
    let mut scored: Vec<(f64, &str)> = domain
        .corpus
        .docs()
        .iter()
        .map(|d| Ok((teacher_score(&teacher, q, d)?, d.id.as_str())))
        .collect::<rgpl::Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let related = scored.iter().filter(|(s, _)| *s > 0.0).count();
    println!(
        "{related} of {} docs score above zero; every {}th of them:",
        scored.len(),
        (related / 5).max(1)
    );
    for (s, id) in scored.iter().step_by((related / 5).max(1)).take(5) {
        println!("  teacher({}, {id}) = {s:.3}", q.id);
    }
    Ok(())
}
