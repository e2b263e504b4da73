use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleKind, TreeEnsembleModel};
use super::linear::softmax;
use super::matrix::FeatureMatrix;
use super::tree::grow_regressor;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradBoostParams {
    pub n_rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    /// Fraction of rows each round's trees are fitted on; 1.0 uses all rows.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GradBoostParams {
    fn default() -> Self {
        GradBoostParams {
            n_rounds: 100,
            shrinkage: 0.1,
            max_depth: 3,
            subsample: 1.0,
            seed: 1,
        }
    }
}

/// Multiclass gradient boosting on the softmax loss.
///
/// Scores start at the log class priors; every round fits one regression
/// tree per class to the residuals `1{y = k} - p_k` and adds it with the
/// shrinkage factor.
pub fn train_gradient_boost(data: &FeatureMatrix, params: &GradBoostParams) -> Result<TreeEnsembleModel> {
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::InvalidConfig(format!("shrinkage {} outside (0, 1]", params.shrinkage)));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::InvalidConfig(format!("subsample {} outside (0, 1]", params.subsample)));
    }
    if params.max_depth == 0 {
        return Err(Error::InvalidConfig("max_depth must be positive".into()));
    }
    let (n, k) = (data.n_rows(), data.n_classes());
    // Absent classes get half a count so the prior stays finite.
    let base_score: Vec<f64> = data
        .class_counts()
        .iter()
        .map(|&c| ((c as f64).max(0.5) / n as f64).ln())
        .collect();

    let mut scores: Vec<Vec<f64>> = vec![base_score.clone(); n];
    let mut trees = Vec::with_capacity(params.n_rounds * k);
    let mut rng = rng::seeded(params.seed);
    let all: Vec<usize> = (0..n).collect();
    let take = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let mut residual = vec![0.0; n];
    for _ in 0..params.n_rounds {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let rows = if take < n {
            let mut r = index::sample(&mut rng, n, take).into_vec();
            r.sort_unstable();
            r
        } else {
            all.clone()
        };
        for class in 0..k {
            for (i, r) in residual.iter_mut().enumerate() {
                let target = if data.labels()[i] == class { 1.0 } else { 0.0 };
                *r = target - probs[i][class];
            }
            let tree = grow_regressor(data, &residual, &rows, 0, params.max_depth);
            for (i, s) in scores.iter_mut().enumerate() {
                s[class] += params.shrinkage * tree.evaluate(data.row(i))[0];
            }
            trees.push(tree);
        }
        if scores.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boosting scores".into()));
        }
    }
    Ok(TreeEnsembleModel {
        kind: EnsembleKind::GradBoost,
        classes: data.classes().to_vec(),
        dim: data.dim(),
        trees,
        shrinkage: params.shrinkage,
        base_score,
    })
}
