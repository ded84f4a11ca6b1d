//! SGD and Adam over the encoder's three parameter tensors.

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Dense gradient laid out like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub embedding: Vec<f64>,
    pub projection: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseGrad {
    pub fn zeros_like(p: &EncoderParams) -> Self {
        Self {
            embedding: vec![0.0; p.embedding.len()],
            projection: vec![0.0; p.projection.len()],
            bias: vec![0.0; p.bias.len()],
        }
    }

    pub fn clear(&mut self) {
        self.embedding.fill(0.0);
        self.projection.fill(0.0);
        self.bias.fill(0.0);
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Option<DenseGrad>,
    v: Option<DenseGrad>,
}

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], c: (f64, f64, f64, f64, f64)) {
    let (b1, b2, step_size, bias2_sqrt, eps) = c;
    for i in 0..p.len() {
        let gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        p[i] -= step_size * m[i] / (v[i].sqrt() / bias2_sqrt + eps);
    }
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            kind,
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: None,
            v: None,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn apply(&mut self, params: &mut EncoderParams, grad: &DenseGrad) {
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.lr;
                for (p, g) in [
                    (&mut params.embedding, &grad.embedding),
                    (&mut params.projection, &grad.projection),
                    (&mut params.bias, &grad.bias),
                ] {
                    p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
                }
            }
            OptimizerKind::Adam => {
                let m = self.m.get_or_insert_with(|| DenseGrad::zeros_like(params));
                let v = self.v.get_or_insert_with(|| DenseGrad::zeros_like(params));
                let t = self.t as i32;
                let bias1 = 1.0 - self.beta1.powi(t);
                let bias2 = 1.0 - self.beta2.powi(t);
                let c = (self.beta1, self.beta2, self.lr / bias1, bias2.sqrt(), self.eps);
                adam_update(
                    &mut params.embedding,
                    &grad.embedding,
                    &mut m.embedding,
                    &mut v.embedding,
                    c,
                );
                adam_update(
                    &mut params.projection,
                    &grad.projection,
                    &mut m.projection,
                    &mut v.projection,
                    c,
                );
                adam_update(&mut params.bias, &grad.bias, &mut m.bias, &mut v.bias, c);
            }
        }
    }
}
