//! Adam optimizer and the seeded mini-batch stream shared by the linear
//! trainers and UDA.

use rand::seq::SliceRandom;

use crate::rng;

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Endless stream of mini-batches over `0..n`: each pass is a fresh seeded
/// shuffle cut into consecutive chunks, the last one possibly short.
#[derive(Debug, Clone)]
pub struct BatchStream {
    order: Vec<usize>,
    cursor: usize,
    batch: usize,
    rng: rng::Rng,
}

impl BatchStream {
    pub fn new(n: usize, batch: usize, seed: u64) -> Self {
        BatchStream {
            order: (0..n).collect(),
            cursor: 0,
            batch: batch.max(1),
            rng: rng::seeded(seed),
        }
    }

    /// Number of batches in one pass.
    pub fn batches_per_pass(&self) -> usize {
        self.order.len().div_ceil(self.batch)
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.order.is_empty() {
            return Vec::new();
        }
        if self.cursor == 0 {
            self.order.shuffle(&mut self.rng);
        }
        let end = (self.cursor + self.batch).min(self.order.len());
        let out = self.order[self.cursor..end].to_vec();
        self.cursor = if end == self.order.len() { 0 } else { end };
        out
    }
}
