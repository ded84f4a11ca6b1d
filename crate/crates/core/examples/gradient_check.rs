//! Compare analytic MarginMSE gradients with central finite differences.
//!
//!     cargo run --example gradient_check [TRIPLETS]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgpl::data::TokenSeq;
use rgpl::encoder::{grad_triplet, init_params, EncoderParams};

const VOCAB: usize = 20;
const H: f64 = 1e-5;

fn seq(rng: &mut ChaCha8Rng, max: usize) -> TokenSeq {
    let ids: Vec<u32> = (0..rng.random_range(1..=max))
        .map(|_| rng.random_range(3..VOCAB as u32))
        .collect();
    TokenSeq::from_content(&ids, 0, 1)
}

fn main() -> rgpl::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    for seed in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = init_params(VOCAB, 4, 4, seed)?;
        let (q, pos, neg) = (seq(&mut rng, 6), seq(&mut rng, 10), seq(&mut rng, 10));
        let target = rng.random_range(-3.0..3.0);
        let (loss, g) = grad_triplet(&p, &q, &pos, &neg, target)?;
        let at = |p: &EncoderParams| grad_triplet(p, &q, &pos, &neg, target).map(|r| r.0);

        let mut worst: f64 = 0.0;
        let mut coords = 0;
        let analytic: Vec<f64> = (0..VOCAB as u32)
            .flat_map(|id| g.embedding_row(id, 4))
            .chain(g.projection.iter().copied())
            .chain(g.bias.iter().copied())
            .collect();
        for (i, a) in analytic.iter().enumerate() {
            let bump = |d: f64| {
                let mut p = p.clone();
                let (e, w) = (p.embedding.len(), p.projection.len());
                match i {
                    i if i < e => p.embedding[i] += d,
                    i if i < e + w => p.projection[i - e] += d,
                    i => p.bias[i - e - w] += d,
                }
                p
            };
            let numeric = (at(&bump(H))? - at(&bump(-H))?) / (2.0 * H);
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5));
            coords += 1;
        }
        println!("triplet {seed:>2}: loss {loss:9.4}, {coords} coordinates, worst relative error {worst:.2e}");
    }
    Ok(())
}
