use serde::{Deserialize, Serialize};

use super::linear::softmax;
use super::tree::Node;
use super::Classifier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    RandomForest,
    GradBoost,
}

/// Random forest or multiclass gradient-boosted trees.
///
/// Forest trees hold class proportions in their leaves and are averaged.
/// Boosted trees come `K` per round, round-major; tree `r*K + k` adds
/// `shrinkage * leaf[0]` to the score of class `k` on top of `base_score`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsembleModel {
    pub kind: EnsembleKind,
    pub classes: Vec<String>,
    pub dim: usize,
    pub trees: Vec<Node>,
    pub shrinkage: f64,
    pub base_score: Vec<f64>,
}

impl TreeEnsembleModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn rounds(&self) -> usize {
        match self.kind {
            EnsembleKind::RandomForest => self.trees.len(),
            EnsembleKind::GradBoost => self.trees.len() / self.n_classes(),
        }
    }

    /// The same model keeping only the first `rounds` rounds (or trees).
    pub fn truncated(&self, rounds: usize) -> TreeEnsembleModel {
        let keep = match self.kind {
            EnsembleKind::RandomForest => rounds,
            EnsembleKind::GradBoost => rounds * self.n_classes(),
        };
        TreeEnsembleModel {
            trees: self.trees[..keep.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Accumulated boosting scores (logits) for one row.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let k = self.n_classes();
        match self.kind {
            EnsembleKind::GradBoost => {
                let mut f = self.base_score.clone();
                for (i, tree) in self.trees.iter().enumerate() {
                    f[i % k] += self.shrinkage * tree.evaluate(x)[0];
                }
                Ok(f)
            }
            EnsembleKind::RandomForest => {
                let mut sum = vec![0.0; k];
                for tree in &self.trees {
                    for (s, p) in sum.iter_mut().zip(tree.evaluate(x)) {
                        *s += p;
                    }
                }
                Ok(sum)
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl Classifier for TreeEnsembleModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Vote shares for the forest, softmax probabilities for boosting.
    fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.raw_scores(x)?;
        Ok(match self.kind {
            EnsembleKind::RandomForest => {
                let n = self.trees.len().max(1) as f64;
                raw.into_iter().map(|s| s / n).collect()
            }
            EnsembleKind::GradBoost => softmax(&raw),
        })
    }
}
