//! Softmax regression and one-vs-rest linear SVM.
//!
//! Parameters travel as one flat vector `theta`: the `K x d` weight matrix
//! row-major, followed by the `K` biases.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::optim::{Adam, BatchStream};
use super::Classifier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearKind {
    LogReg,
    Svm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub classes: Vec<String>,
    pub dim: usize,
    /// `K x d`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl LinearModel {
    pub(crate) fn from_theta(kind: LinearKind, classes: Vec<String>, dim: usize, theta: Vec<f64>, l2: f64) -> Self {
        let k = classes.len();
        let mut weights = theta;
        let bias = weights.split_off(k * dim);
        LinearModel {
            kind,
            classes,
            dim,
            weights,
            bias,
            l2,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Raw class scores `W x + b`.
    pub fn decision(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }

    /// Class probabilities of a softmax-regression model.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if self.kind != LinearKind::LogReg {
            return Err(Error::Invalid("probabilities are only defined for logreg models".into()));
        }
        rows.iter().map(|x| Ok(softmax(&self.decision(x)?))).collect()
    }
}

impl Classifier for LinearModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.decision(x)?;
        Ok(match self.kind {
            LinearKind::LogReg => softmax(&z),
            LinearKind::Svm => z,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn logits(theta: &[f64], k: usize, dim: usize, x: &[f64]) -> Vec<f64> {
    let (w, b) = theta.split_at(k * dim);
    w.chunks_exact(dim).zip(b).map(|(row, bias)| dot(row, x) + bias).collect()
}

/// `grad += coef * d(logits)/d(theta)^T dlogits` for one input row.
pub(crate) fn add_logit_grad(grad: &mut [f64], k: usize, dim: usize, x: &[f64], dlogits: &[f64], coef: f64) {
    let (gw, gb) = grad.split_at_mut(k * dim);
    for ((row, b), dz) in gw.chunks_exact_mut(dim).zip(gb).zip(dlogits) {
        let c = coef * dz;
        if c == 0.0 {
            continue;
        }
        for (g, xi) in row.iter_mut().zip(x) {
            *g += c * xi;
        }
        *b += c;
    }
}

/// Mean softmax cross-entropy over `rows` plus `(l2/2)||W||^2`, with its
/// gradient added into `grad`. An empty row set contributes no data term.
pub(crate) fn supervised_grad(
    theta: &[f64],
    data: &FeatureMatrix,
    rows: &[usize],
    l2: f64,
    grad: &mut [f64],
) -> f64 {
    let (k, dim) = (data.n_classes(), data.dim());
    let coef = 1.0 / rows.len().max(1) as f64;
    let mut loss = 0.0;
    for &i in rows {
        let x = data.row(i);
        let y = data.labels()[i];
        let z = logits(theta, k, dim, x);
        loss += log_sum_exp(&z) - z[y];
        let mut dz = softmax(&z);
        dz[y] -= 1.0;
        add_logit_grad(grad, k, dim, x, &dz, coef);
    }
    loss * coef + l2_penalty(theta, k * dim, l2, grad)
}

fn l2_penalty(theta: &[f64], n_weights: usize, l2: f64, grad: &mut [f64]) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    let mut sq = 0.0;
    for (g, w) in grad[..n_weights].iter_mut().zip(&theta[..n_weights]) {
        sq += w * w;
        *g += l2 * w;
    }
    0.5 * l2 * sq
}

/// Softmax-regression objective on `rows` of `data` and its gradient.
pub fn logreg_loss_grad(theta: &[f64], data: &FeatureMatrix, rows: &[usize], l2: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; theta.len()];
    let loss = supervised_grad(theta, data, rows, l2, &mut grad);
    (loss, grad)
}

/// Sum over classes of the one-vs-rest hinge objective
/// `(1/n) Σ max(0, 1 - y s(x)) + ||w||^2 / (2C)` and a subgradient
/// (zero at the kink).
pub fn svm_objective_grad(theta: &[f64], data: &FeatureMatrix, rows: &[usize], c: f64) -> (f64, Vec<f64>) {
    let (k, dim) = (data.n_classes(), data.dim());
    let mut grad = vec![0.0; theta.len()];
    let coef = 1.0 / rows.len().max(1) as f64;
    let mut loss = 0.0;
    let mut dz = vec![0.0; k];
    for &i in rows {
        let x = data.row(i);
        let z = logits(theta, k, dim, x);
        for (class, (s, d)) in z.iter().zip(&mut dz).enumerate() {
            let y = if data.labels()[i] == class { 1.0 } else { -1.0 };
            let margin = 1.0 - y * s;
            if margin > 0.0 {
                loss += margin;
                *d = -y;
            } else {
                *d = 0.0;
            }
        }
        add_logit_grad(&mut grad, k, dim, x, &dz, coef);
    }
    let loss = loss * coef + l2_penalty(theta, k * dim, 1.0 / c, &mut grad);
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1e-3,
            epochs: 100,
            lr: 0.05,
            batch_size: 32,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 100,
            lr: 0.05,
            batch_size: 32,
            seed: 1,
        }
    }
}

fn check_optimizer(lr: f64, batch_size: usize) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidConfig(format!("learning rate {lr} must be positive")));
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    Ok(())
}

/// Mini-batch Adam on the softmax cross-entropy, starting from zero.
pub fn train_logreg(data: &FeatureMatrix, params: &LogRegParams) -> Result<LinearModel> {
    check_optimizer(params.lr, params.batch_size)?;
    if !(params.l2 >= 0.0 && params.l2.is_finite()) {
        return Err(Error::InvalidConfig(format!("l2 {} must be nonnegative", params.l2)));
    }
    let (k, dim) = (data.n_classes(), data.dim());
    let mut theta = vec![0.0; k * dim + k];
    let mut opt = Adam::new(theta.len(), params.lr);
    let mut stream = BatchStream::new(data.n_rows(), params.batch_size, params.seed);
    let steps = params.epochs * stream.batches_per_pass();
    let mut grad = vec![0.0; theta.len()];
    for _ in 0..steps {
        let batch = stream.next_batch();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = supervised_grad(&theta, data, &batch, params.l2, &mut grad);
        if !loss.is_finite() {
            return Err(Error::NonFinite("logreg loss; the learning rate is probably too high".into()));
        }
        opt.step(&mut theta, &grad);
    }
    Ok(LinearModel::from_theta(LinearKind::LogReg, data.classes().to_vec(), dim, theta, params.l2))
}

/// One-vs-rest linear SVM trained by Adam on hinge-loss subgradients.
pub fn train_svm(data: &FeatureMatrix, params: &SvmParams) -> Result<LinearModel> {
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(Error::InvalidConfig(format!("C {} must be positive", params.c)));
    }
    check_optimizer(params.lr, params.batch_size)?;
    let (k, dim) = (data.n_classes(), data.dim());
    let mut theta = vec![0.0; k * dim + k];
    let mut opt = Adam::new(theta.len(), params.lr);
    let mut stream = BatchStream::new(data.n_rows(), params.batch_size, params.seed);
    let steps = params.epochs * stream.batches_per_pass();
    for _ in 0..steps {
        let batch = stream.next_batch();
        let (loss, grad) = svm_objective_grad(&theta, data, &batch, params.c);
        if !loss.is_finite() {
            return Err(Error::NonFinite("svm objective; the learning rate is probably too high".into()));
        }
        opt.step(&mut theta, &grad);
    }
    Ok(LinearModel::from_theta(LinearKind::Svm, data.classes().to_vec(), dim, theta, 1.0 / params.c))
}
