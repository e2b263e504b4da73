//! Semi-supervised consistency training (UDA) for softmax regression over
//! fixed document features.
//!
//! Each step combines a supervised cross-entropy, masked by the training
//! signal annealing (TSA) threshold, with a KL consistency term between the
//! sharpened prediction on an unlabeled document and the prediction on its
//! augmentation. The sharpened target is held constant for the gradient.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::optim::{Adam, BatchStream};
use crate::classifiers::{softmax, FeatureMatrix, LinearKind, LinearModel};
use crate::classifiers::linear::{add_logit_grad, logits, supervised_grad};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TsaSchedule {
    None,
    Linear,
    Exp,
    #[default]
    Log,
}

impl FromStr for TsaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TsaSchedule::None),
            "linear" => Ok(TsaSchedule::Linear),
            "exp" => Ok(TsaSchedule::Exp),
            "log" => Ok(TsaSchedule::Log),
            other => Err(Error::Invalid(format!("unknown TSA schedule {other:?} (none|linear|exp|log)"))),
        }
    }
}

impl fmt::Display for TsaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TsaSchedule::None => "none",
            TsaSchedule::Linear => "linear",
            TsaSchedule::Exp => "exp",
            TsaSchedule::Log => "log",
        })
    }
}

const TSA_SCALE: f64 = 5.0;

/// Correct-class probability above which a labeled example is masked at
/// step `t` of `total`: `alpha(t) * (1 - 1/K) + 1/K`, with
/// `alpha = t/T` (linear), `1 - exp(-5t/T)` (log) or `exp(5(t/T - 1))` (exp).
pub fn tsa_threshold(schedule: TsaSchedule, t: usize, total: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("TSA needs at least 2 classes, got {k}")));
    }
    if total == 0 {
        return Err(Error::InvalidConfig("TSA needs total_steps >= 1".into()));
    }
    if t > total {
        return Err(Error::InvalidConfig(format!("step {t} beyond total {total}")));
    }
    let progress = t as f64 / total as f64;
    let alpha = match schedule {
        TsaSchedule::None => return Ok(1.0),
        TsaSchedule::Linear => progress,
        TsaSchedule::Log => 1.0 - (-progress * TSA_SCALE).exp(),
        TsaSchedule::Exp => ((progress - 1.0) * TSA_SCALE).exp(),
    };
    let floor = 1.0 / k as f64;
    Ok(alpha * (1.0 - floor) + floor)
}

/// Mean negative log-likelihood over the examples whose correct-class
/// probability is at most `eta`, with the mask of kept examples.
pub fn supervised_tsa_loss(probs: &[Vec<f64>], labels: &[usize], eta: f64) -> (f64, Vec<bool>) {
    let kept: Vec<bool> = probs.iter().zip(labels).map(|(p, &y)| p[y] <= eta).collect();
    let n = kept.iter().filter(|&&k| k).count();
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|((p, &y), _)| -p[y].ln())
        .sum();
    (sum / n.max(1) as f64, kept)
}

/// `p^(1/tau)` renormalized; identity for `tau == 1`.
pub fn sharpen(p: &[f64], tau: f64) -> Vec<f64> {
    if tau == 1.0 {
        return p.to_vec();
    }
    let logs: Vec<f64> = p.iter().map(|v| v.ln() / tau).collect();
    softmax(&logs)
}

fn kl(q: &[f64], p: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (&qk, &pk) in q.iter().zip(p) {
        if qk == 0.0 {
            continue;
        }
        if pk <= 0.0 {
            return Err(Error::Invalid("augmented prediction has a zero where the target does not".into()));
        }
        sum += qk * (qk / pk).ln();
    }
    Ok(sum)
}

/// Mean `KL(sharpen(p_orig, tau) || p_aug)` over rows whose original
/// prediction is at least `beta` confident.
pub fn consistency_loss(p_orig: &[Vec<f64>], p_aug: &[Vec<f64>], tau: f64, beta: f64) -> Result<f64> {
    if p_orig.len() != p_aug.len() {
        return Err(Error::DimensionMismatch {
            expected: p_orig.len(),
            got: p_aug.len(),
        });
    }
    let mut sum = 0.0;
    let mut kept = 0usize;
    for (po, pa) in p_orig.iter().zip(p_aug) {
        if po.iter().copied().fold(f64::NEG_INFINITY, f64::max) < beta {
            continue;
        }
        sum += kl(&sharpen(po, tau), pa)?;
        kept += 1;
    }
    Ok(sum / kept.max(1) as f64)
}

/// Features of an unlabeled document and of its augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledPair {
    pub id: String,
    pub original: Vec<f64>,
    pub augmented: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UdaConfig {
    pub schedule: TsaSchedule,
    pub total_steps: usize,
    /// Weight of the consistency term.
    pub lambda: f64,
    /// Sharpening temperature.
    pub temperature: f64,
    /// Minimum original-prediction confidence for a consistency row; 0 disables masking.
    pub confidence: f64,
    pub sup_batch: usize,
    pub unsup_batch: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for UdaConfig {
    fn default() -> Self {
        UdaConfig {
            schedule: TsaSchedule::Log,
            total_steps: 1000,
            lambda: 1.0,
            temperature: 0.4,
            confidence: 0.0,
            sup_batch: 32,
            unsup_batch: 96,
            lr: 0.05,
            l2: 0.0,
            seed: 1,
        }
    }
}

impl UdaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.total_steps == 0 {
            return fail("total_steps must be at least 1".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return fail(format!("temperature {} must be positive", self.temperature));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda {} must be nonnegative", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return fail(format!("confidence {} outside [0, 1]", self.confidence));
        }
        if self.sup_batch == 0 || self.unsup_batch == 0 {
            return fail("batch sizes must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("learning rate {} must be positive", self.lr));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail(format!("l2 {} must be nonnegative", self.l2));
        }
        Ok(())
    }
}

/// Total UDA objective at `theta` on one supervised and one unsupervised
/// batch, with its gradient. `theta` is laid out as for the linear models.
pub fn uda_loss_grad(
    theta: &[f64],
    labeled: &FeatureMatrix,
    sup_rows: &[usize],
    unlabeled: &[UnlabeledPair],
    unsup_rows: &[usize],
    eta: f64,
    cfg: &UdaConfig,
) -> Result<(f64, Vec<f64>)> {
    let (k, dim) = (labeled.n_classes(), labeled.dim());
    let mut grad = vec![0.0; theta.len()];

    let mut kept = Vec::with_capacity(sup_rows.len());
    for &i in sup_rows {
        let p = softmax(&logits(theta, k, dim, labeled.row(i)))[labeled.labels()[i]];
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("class probability of labeled row {i}")));
        }
        if p <= eta {
            kept.push(i);
        }
    }
    let mut loss = supervised_grad(theta, labeled, &kept, cfg.l2, &mut grad);

    if cfg.lambda > 0.0 && !unsup_rows.is_empty() {
        let mut targets = Vec::with_capacity(unsup_rows.len());
        for &j in unsup_rows {
            let pair = &unlabeled[j];
            let p_orig = softmax(&logits(theta, k, dim, &pair.original));
            if p_orig.iter().copied().fold(f64::NEG_INFINITY, f64::max) >= cfg.confidence {
                targets.push((j, sharpen(&p_orig, cfg.temperature)));
            }
        }
        let coef = cfg.lambda / targets.len().max(1) as f64;
        let mut cons = 0.0;
        for (j, q) in &targets {
            let x = &unlabeled[*j].augmented;
            let p_aug = softmax(&logits(theta, k, dim, x));
            cons += kl(q, &p_aug)?;
            let dz: Vec<f64> = p_aug.iter().zip(q).map(|(p, q)| p - q).collect();
            add_logit_grad(&mut grad, k, dim, x, &dz, coef);
        }
        loss += cfg.lambda * cons / targets.len().max(1) as f64;
    }
    Ok((loss, grad))
}

/// Train softmax regression with the UDA objective for `cfg.total_steps`
/// Adam steps. Labeled and unlabeled batches come from independent seeded
/// streams, each reshuffled every pass.
///
/// With `lambda = 0` and no TSA the parameter trajectory is identical to
/// [`crate::classifiers::train_logreg`] with the same seed, batch size and
/// `epochs * batches_per_epoch == total_steps`.
pub fn train_uda(labeled: &FeatureMatrix, unlabeled: &[UnlabeledPair], cfg: &UdaConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let (k, dim) = (labeled.n_classes(), labeled.dim());
    if let Some(bad) = unlabeled
        .iter()
        .find(|p| p.original.len() != dim || p.augmented.len() != dim)
    {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: if bad.original.len() != dim {
                bad.original.len()
            } else {
                bad.augmented.len()
            },
        });
    }
    let mut theta = vec![0.0; k * dim + k];
    let mut opt = Adam::new(theta.len(), cfg.lr);
    let mut sup = BatchStream::new(labeled.n_rows(), cfg.sup_batch, cfg.seed);
    let mut unsup = BatchStream::new(unlabeled.len(), cfg.unsup_batch, rng::derive_seed(cfg.seed, "unsup"));
    let use_unsup = cfg.lambda > 0.0 && !unlabeled.is_empty();
    for t in 1..=cfg.total_steps {
        let eta = tsa_threshold(cfg.schedule, t, cfg.total_steps, k)?;
        let sup_rows = sup.next_batch();
        let unsup_rows = if use_unsup { unsup.next_batch() } else { Vec::new() };
        let (loss, grad) = uda_loss_grad(&theta, labeled, &sup_rows, unlabeled, &unsup_rows, eta, cfg)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("UDA loss at step {t}")));
        }
        opt.step(&mut theta, &grad);
    }
    Ok(LinearModel::from_theta(LinearKind::LogReg, labeled.classes().to_vec(), dim, theta, cfg.l2))
}
