//! Skip-gram with negative sampling, trained single-threaded so a fixed
//! `(corpus, config)` always yields the same vectors.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingMatrix;
use super::vocab::build_vocab;
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 600,
            window: 10,
            min_count: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("skip-gram {what} must be positive")));
        if self.dim == 0 {
            return bad("dim");
        }
        if self.window == 0 {
            return bad("window");
        }
        if self.min_count == 0 {
            return bad("min_count");
        }
        if self.negatives == 0 {
            return bad("negatives");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate");
        }
        Ok(())
    }
}

/// Loss and gradients of one center/context pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsPairGrad {
    pub loss: f64,
    pub grad_input: Vec<f64>,
    pub grad_context: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, evaluated without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Scalar coefficients of the pair gradient: `dL/du_c = coef_context * v`,
/// `dL/du_n = coef_negative[n] * v` and `dL/dv = coef_context * u_c + Σ coef_negative[n] * u_n`.
fn pair_coefficients<'a>(
    input: &[f64],
    context: &[f64],
    negatives: impl Iterator<Item = &'a [f64]>,
    coef_negative: &mut Vec<f64>,
) -> (f64, f64) {
    let s = dot(context, input);
    let mut loss = neg_log_sigmoid(s);
    let coef_context = sigmoid(s) - 1.0;
    coef_negative.clear();
    for neg in negatives {
        let sn = dot(neg, input);
        loss += neg_log_sigmoid(-sn);
        coef_negative.push(sigmoid(sn));
    }
    (loss, coef_context)
}

/// Negative log-likelihood `-ln σ(u_c·v) - Σ ln σ(-u_n·v)` of one skip-gram
/// pair with its analytic gradients.
pub fn sgns_pair_loss_grad(input: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsPairGrad {
    let mut coef_neg = Vec::with_capacity(negatives.len());
    let (loss, coef_ctx) = pair_coefficients(input, context, negatives.iter().map(Vec::as_slice), &mut coef_neg);
    let mut grad_input: Vec<f64> = context.iter().map(|u| coef_ctx * u).collect();
    for (neg, c) in negatives.iter().zip(&coef_neg) {
        for (g, u) in grad_input.iter_mut().zip(neg) {
            *g += c * u;
        }
    }
    SgnsPairGrad {
        loss,
        grad_input,
        grad_context: input.iter().map(|v| coef_ctx * v).collect(),
        grad_negatives: coef_neg
            .iter()
            .map(|c| input.iter().map(|v| c * v).collect())
            .collect(),
    }
}

/// Train word vectors with skip-gram and negative sampling.
///
/// Input vectors start uniform in `[-0.5/dim, 0.5/dim]`, context vectors at
/// zero. Negatives are drawn from the unigram distribution raised to 0.75
/// and the learning rate decays linearly over all epochs.
pub fn train_skipgram(corpus: &[TokenizedDoc], cfg: &SkipGramConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let vocab = build_vocab(corpus, cfg.min_count)?;
    let dim = cfg.dim;
    let vsize = vocab.len();

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.index_of(t)).collect())
        .collect();
    let total_tokens: usize = sentences.iter().map(Vec::len).sum();

    let mut rng = rng::seeded(cfg.seed);
    let mut input: Vec<f64> = (0..vsize * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0f64; vsize * dim];

    let weights: Vec<f64> = (0..vsize).map(|i| (vocab.count(i) as f64).powf(0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let budget = (cfg.epochs * total_tokens).max(1) as f64;
    let mut processed = 0usize;
    let mut negs: Vec<usize> = Vec::with_capacity(cfg.negatives);
    let mut coef_neg = Vec::with_capacity(cfg.negatives);
    let mut grad_in = vec![0.0f64; dim];

    for _ in 0..cfg.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - processed as f64 / budget).max(1e-4);
                processed += 1;
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window).min(sentence.len() - 1);
                for (cpos, &ctx) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut rng);
                        if n != ctx {
                            negs.push(n);
                        }
                    }
                    let v = &input[center * dim..(center + 1) * dim];
                    let (_, coef_ctx) = pair_coefficients(
                        v,
                        &output[ctx * dim..(ctx + 1) * dim],
                        negs.iter().map(|&n| &output[n * dim..(n + 1) * dim]),
                        &mut coef_neg,
                    );
                    for (g, u) in grad_in.iter_mut().zip(&output[ctx * dim..(ctx + 1) * dim]) {
                        *g = coef_ctx * u;
                    }
                    for (&n, c) in negs.iter().zip(&coef_neg) {
                        for (g, u) in grad_in.iter_mut().zip(&output[n * dim..(n + 1) * dim]) {
                            *g += c * u;
                        }
                    }
                    // Output rows step from the pre-update input vector.
                    let (vin, out) = (&input[center * dim..(center + 1) * dim], &mut output);
                    for (u, x) in out[ctx * dim..(ctx + 1) * dim].iter_mut().zip(vin) {
                        *u -= lr * coef_ctx * x;
                    }
                    for (&n, c) in negs.iter().zip(&coef_neg) {
                        for (u, x) in out[n * dim..(n + 1) * dim].iter_mut().zip(vin) {
                            *u -= lr * c * x;
                        }
                    }
                    for (x, g) in input[center * dim..(center + 1) * dim].iter_mut().zip(&grad_in) {
                        *x -= lr * g;
                    }
                }
            }
        }
    }

    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("skip-gram vectors diverged; lower the learning rate".into()));
    }
    EmbeddingMatrix::new(vocab, dim, input.into_iter().map(|x| x as f32).collect())
}
