//! Helpers shared by integration tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgpl::data::TokenSeq;
use rgpl::encoder::{grad_triplet, init_params, EncoderParams};

pub mod oracles;

pub const CLS: u32 = 0;
pub const SEP: u32 = 1;

/// Denominator floor for gradient relative errors: coordinates whose true
/// gradient is exactly zero otherwise compare central-difference roundoff
/// (around 1e-10 here) against zero.
pub const GRAD_FLOOR: f64 = 1e-5;

/// Random sequence over ids `3..vocab` (0..3 are the special tokens).
pub fn random_seq(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> TokenSeq {
    let n = rng.random_range(1..=max_len);
    let ids: Vec<u32> = (0..n).map(|_| rng.random_range(3..vocab as u32)).collect();
    TokenSeq::from_content(&ids, CLS, SEP)
}

fn loss_at(p: &EncoderParams, q: &TokenSeq, d1: &TokenSeq, d2: &TokenSeq, t: f64) -> f64 {
    grad_triplet(p, q, d1, d2, t).unwrap().0
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter coordinate of one random triplet.
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn finite_difference_check(seed: u64, vocab: usize, hidden: usize, out: usize, h: f64, floor: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = init_params(vocab, hidden, out, seed).unwrap();
    let (q, pos, neg) = (
        random_seq(&mut rng, vocab, 6),
        random_seq(&mut rng, vocab, 10),
        random_seq(&mut rng, vocab, 10),
    );
    let t = rng.random_range(-3.0..3.0);
    let (_, grads) = grad_triplet(&params, &q, &pos, &neg, t).unwrap();

    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, bump: &dyn Fn(&mut EncoderParams, f64)| {
        let mut plus = params.clone();
        bump(&mut plus, h);
        let mut minus = params.clone();
        bump(&mut minus, -h);
        let numeric = (loss_at(&plus, &q, &pos, &neg, t) - loss_at(&minus, &q, &pos, &neg, t)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
    };
    for id in 0..vocab as u32 {
        let row = grads.embedding_row(id, hidden);
        for c in 0..hidden {
            let idx = id as usize * hidden + c;
            check(row[c], &|p: &mut EncoderParams, d| p.embedding[idx] += d);
        }
    }
    for idx in 0..hidden * out {
        check(grads.projection[idx], &|p: &mut EncoderParams, d| {
            p.projection[idx] += d
        });
    }
    for idx in 0..out {
        check(grads.bias[idx], &|p: &mut EncoderParams, d| p.bias[idx] += d);
    }
    worst
}

/// A planted benchmark small enough to build in well under a second.
pub fn tiny_benchmark_config(seed: u64) -> rgpl::benchmark::BenchmarkConfig {
    use rgpl::benchmark::BenchmarkConfig;
    let mut c = BenchmarkConfig::default();
    for spec in [&mut c.target, &mut c.source] {
        spec.vocab_size = 400;
        spec.num_docs = 300;
        spec.num_topics = 12;
        spec.num_themes = 3;
    }
    c.train_queries.max_source_docs = Some(60);
    c.eval_queries.max_source_docs = Some(30);
    c.hidden_dim = 8;
    c.out_dim = 8;
    c.base_steps = 50;
    c.train.total_steps = 120;
    c.train.batch_size = 8;
    c.train.pool_size = 10;
    c.train.refresh_interval_k = 40;
    c.eval_depth = 20;
    c.with_seed(seed)
}
