//! Bi-encoder: token embedding table, mean pooling over non-special tokens,
//! and one affine projection. Queries and documents share the parameters.

mod checkpoint;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TokenSeq;
use crate::error::{Error, Result};
use crate::linalg::dot;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};

/// Trainable parameters. Matrices are row-major: `embedding` is
/// `vocab_size x hidden_dim`, `projection` is `hidden_dim x out_dim` and maps
/// a pooled hidden vector `x` to `out[j] = sum_i x[i] * projection[i][j] + bias[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
    pub embedding: Vec<f64>,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Pooled and projected representation of a query or document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Draws every matrix entry from `N(0, 1/hidden_dim)`; the bias starts at zero.
pub fn init_params(vocab_size: usize, hidden_dim: usize, out_dim: usize, seed: u64) -> Result<EncoderParams> {
    if vocab_size == 0 || hidden_dim == 0 || out_dim == 0 {
        return Err(Error::Config(format!(
            "encoder dimensions must be positive (vocab {vocab_size}, hidden {hidden_dim}, out {out_dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (hidden_dim as f64).sqrt()).expect("finite scale");
    let embedding = (0..vocab_size * hidden_dim).map(|_| normal.sample(&mut rng)).collect();
    let projection = (0..hidden_dim * out_dim).map(|_| normal.sample(&mut rng)).collect();
    Ok(EncoderParams {
        vocab_size,
        hidden_dim,
        out_dim,
        seed,
        embedding,
        projection,
        bias: vec![0.0; out_dim],
    })
}

impl EncoderParams {
    pub fn num_params(&self) -> usize {
        self.embedding.len() + self.projection.len() + self.bias.len()
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let h = self.hidden_dim;
        &self.embedding[id as usize * h..(id as usize + 1) * h]
    }

    pub fn is_finite(&self) -> bool {
        self.embedding
            .iter()
            .chain(&self.projection)
            .chain(&self.bias)
            .all(|x| x.is_finite())
    }

    fn check_ids(&self, seq: &TokenSeq) -> Result<()> {
        match seq.ids().iter().find(|&&id| id as usize >= self.vocab_size) {
            Some(&id) => Err(Error::TokenOutOfRange {
                id,
                vocab_size: self.vocab_size,
            }),
            None => Ok(()),
        }
    }

    /// Mean of the embedding rows of the non-special tokens; zero when none.
    pub fn pool(&self, seq: &TokenSeq) -> Result<Vec<f64>> {
        self.check_ids(seq)?;
        let mut pooled = vec![0.0; self.hidden_dim];
        let mut n = 0usize;
        for id in seq.content() {
            for (p, r) in pooled.iter_mut().zip(self.row(id)) {
                *p += r;
            }
            n += 1;
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            pooled.iter_mut().for_each(|p| *p *= inv);
        }
        Ok(pooled)
    }

    /// `projection^T * pooled + bias`.
    pub fn project(&self, pooled: &[f64]) -> Vec<f64> {
        let o = self.out_dim;
        let mut out = self.bias.clone();
        for (i, &x) in pooled.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (acc, w) in out.iter_mut().zip(&self.projection[i * o..(i + 1) * o]) {
                *acc += x * w;
            }
        }
        out
    }

    pub fn encode(&self, seq: &TokenSeq) -> Result<Embedding> {
        Ok(Embedding(self.project(&self.pool(seq)?)))
    }

    /// `projection * v`, a hidden-sized vector.
    fn back_project(&self, v: &[f64]) -> Vec<f64> {
        let o = self.out_dim;
        (0..self.hidden_dim)
            .map(|i| dot(&self.projection[i * o..(i + 1) * o], v))
            .collect()
    }

    /// Forward and backward pass of `(DR(q,d+) - DR(q,d-) - teacher_margin)^2`.
    pub fn triplet_backward(
        &self,
        query: &TokenSeq,
        positive: &TokenSeq,
        negative: &TokenSeq,
        teacher_margin: f64,
    ) -> Result<TripletBackward> {
        let pooled = [self.pool(query)?, self.pool(positive)?, self.pool(negative)?];
        let [eq, ep, en] = [
            self.project(&pooled[0]),
            self.project(&pooled[1]),
            self.project(&pooled[2]),
        ];
        let student_margin = dot(&eq, &ep) - dot(&eq, &en);
        let residual = student_margin - teacher_margin;
        let g = 2.0 * residual;

        let de_q: Vec<f64> = ep.iter().zip(&en).map(|(p, n)| g * (p - n)).collect();
        let de_p: Vec<f64> = eq.iter().map(|q| g * q).collect();
        let de_n: Vec<f64> = eq.iter().map(|q| -g * q).collect();

        let o = self.out_dim;
        let mut projection = vec![0.0; self.hidden_dim * o];
        for (x, de) in pooled.iter().zip([&de_q, &de_p, &de_n]) {
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                for (acc, d) in projection[i * o..(i + 1) * o].iter_mut().zip(de.iter()) {
                    *acc += xi * d;
                }
            }
        }
        let bias: Vec<f64> = (0..o).map(|j| de_q[j] + de_p[j] + de_n[j]).collect();
        let pooled_grad = [
            self.back_project(&de_q),
            self.back_project(&de_p),
            self.back_project(&de_n),
        ];
        Ok(TripletBackward {
            loss: residual * residual,
            student_margin,
            projection,
            bias,
            pooled_grad,
        })
    }
}

/// Dot-product relevance score.
pub fn score(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(dot(&a.0, &b.0))
}

/// Intermediate result of one triplet's backward pass. Embedding-row
/// gradients are implied: each non-special token of sequence `s` receives
/// `pooled_grad[s] / n_s`.
#[derive(Debug, Clone)]
pub struct TripletBackward {
    pub loss: f64,
    pub student_margin: f64,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
    /// Gradient w.r.t. the pooled vectors of query, positive, negative.
    pub pooled_grad: [Vec<f64>; 3],
}

impl TripletBackward {
    /// Adds `scale` times this gradient to the embedding rows of `seqs`.
    pub fn scatter_rows(&self, seqs: [&TokenSeq; 3], scale: f64, mut sink: impl FnMut(u32, &[f64], f64)) {
        for (seq, g) in seqs.iter().zip(&self.pooled_grad) {
            let n = seq.content().count();
            if n == 0 {
                continue;
            }
            let w = scale / n as f64;
            for id in seq.content() {
                sink(id, g, w);
            }
        }
    }
}

/// Gradient of a loss w.r.t. every parameter tensor. Embedding rows are
/// stored sparsely; absent rows have zero gradient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    pub embedding: BTreeMap<u32, Vec<f64>>,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn is_zero(&self) -> bool {
        self.embedding.values().flatten().all(|&x| x == 0.0)
            && self.projection.iter().all(|&x| x == 0.0)
            && self.bias.iter().all(|&x| x == 0.0)
    }

    /// Dense embedding gradient for row `id`.
    pub fn embedding_row(&self, id: u32, hidden_dim: usize) -> Vec<f64> {
        self.embedding
            .get(&id)
            .cloned()
            .unwrap_or_else(|| vec![0.0; hidden_dim])
    }
}

/// Loss `(DR(q,d+) - DR(q,d-) - teacher_margin)^2` and its gradients.
/// `params` is left untouched.
pub fn grad_triplet(
    params: &EncoderParams,
    query: &TokenSeq,
    positive: &TokenSeq,
    negative: &TokenSeq,
    teacher_margin: f64,
) -> Result<(f64, Gradients)> {
    let back = params.triplet_backward(query, positive, negative, teacher_margin)?;
    let h = params.hidden_dim;
    let mut embedding: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    back.scatter_rows([query, positive, negative], 1.0, |id, g, w| {
        let row = embedding.entry(id).or_insert_with(|| vec![0.0; h]);
        for (r, x) in row.iter_mut().zip(g) {
            *r += w * x;
        }
    });
    Ok((
        back.loss,
        Gradients {
            embedding,
            projection: back.projection,
            bias: back.bias,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLS: u32 = 0;
    const SEP: u32 = 1;

    fn seq(content: &[u32]) -> TokenSeq {
        TokenSeq::from_content(content, CLS, SEP)
    }

    #[test]
    fn same_seed_same_params() {
        assert_eq!(init_params(30, 4, 3, 9).unwrap(), init_params(30, 4, 3, 9).unwrap());
        assert_ne!(init_params(30, 4, 3, 9).unwrap(), init_params(30, 4, 3, 10).unwrap());
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(init_params(10, 4, 0, 0).is_err());
        assert!(init_params(10, 0, 4, 0).is_err());
        assert!(init_params(0, 4, 4, 0).is_err());
    }

    #[test]
    fn row_norms_concentrate_near_one() {
        let p = init_params(2000, 8, 4, 3).unwrap();
        let near = (0..2000u32)
            .filter(|&i| {
                let n = crate::linalg::norm(p.row(i));
                (0.5..=1.5).contains(&n)
            })
            .count();
        assert!(near as f64 / 2000.0 >= 0.95, "{near}");
    }

    #[test]
    fn single_token_is_projected_row() {
        let mut p = init_params(10, 4, 3, 1).unwrap();
        p.bias = vec![0.1, -0.2, 0.3];
        let e = p.encode(&seq(&[5])).unwrap();
        let expected = p.project(p.row(5));
        assert_eq!(e.0, expected);
        for j in 0..3 {
            let manual: f64 = (0..4).map(|i| p.row(5)[i] * p.projection[i * 3 + j]).sum::<f64>() + p.bias[j];
            assert!((e.0[j] - manual).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sequence_encodes_to_bias() {
        let mut p = init_params(10, 4, 3, 1).unwrap();
        p.bias = vec![1.0, 2.0, 3.0];
        assert_eq!(p.encode(&seq(&[])).unwrap().0, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn permutation_invariant() {
        let p = init_params(10, 4, 3, 1).unwrap();
        let a = p.encode(&seq(&[2, 3, 4, 4])).unwrap();
        let b = p.encode(&seq(&[4, 2, 4, 3])).unwrap();
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_id_errors() {
        let p = init_params(10, 4, 3, 1).unwrap();
        assert!(matches!(
            p.encode(&seq(&[10])),
            Err(Error::TokenOutOfRange { id: 10, .. })
        ));
    }

    #[test]
    fn score_cases() {
        let e1 = Embedding(vec![1.0, 0.0, 0.0]);
        assert_eq!(score(&e1, &e1).unwrap(), 1.0);
        assert_eq!(
            score(&Embedding(vec![3.0, -2.0]), &Embedding(vec![0.0, 0.0])).unwrap(),
            0.0
        );
        let a = Embedding(vec![0.3, -1.2, 2.5, 0.7]);
        let b = Embedding(vec![-0.4, 0.9, 1.1, -2.0]);
        let hand = 0.3 * -0.4 + -1.2 * 0.9 + 2.5 * 1.1 + 0.7 * -2.0;
        assert!((score(&a, &b).unwrap() - hand).abs() < 1e-12);
        assert!(score(&a, &e1).is_err());
    }

    /// Picks a teacher margin equal to the current student margin plus `offset`.
    fn margin_of(p: &EncoderParams, q: &TokenSeq, d1: &TokenSeq, d2: &TokenSeq) -> f64 {
        let eq = p.encode(q).unwrap();
        score(&eq, &p.encode(d1).unwrap()).unwrap() - score(&eq, &p.encode(d2).unwrap()).unwrap()
    }

    #[test]
    fn matching_margin_has_zero_loss_and_gradient() {
        let p = init_params(12, 4, 4, 2).unwrap();
        let (q, d1, d2) = (seq(&[3, 4]), seq(&[3, 5, 6]), seq(&[7, 8]));
        let m = margin_of(&p, &q, &d1, &d2);
        let (loss, g) = grad_triplet(&p, &q, &d1, &d2, m).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.is_zero());
    }

    #[test]
    fn unit_residual_loss() {
        let p = init_params(12, 4, 4, 2).unwrap();
        let (q, d1, d2) = (seq(&[3, 4]), seq(&[3, 5, 6]), seq(&[7, 8]));
        let m = margin_of(&p, &q, &d1, &d2);
        let (loss, _) = grad_triplet(&p, &q, &d1, &d2, m + 1.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grad_leaves_params_untouched() {
        let p = init_params(12, 4, 4, 2).unwrap();
        let before = p.clone();
        grad_triplet(&p, &seq(&[1, 2]), &seq(&[3]), &seq(&[4]), 2.0).unwrap();
        assert_eq!(p, before);
    }
}
