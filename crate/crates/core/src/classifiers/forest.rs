use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleKind, TreeEnsembleModel};
use super::matrix::FeatureMatrix;
use super::tree::{grow_classifier, GrowParams};
use crate::error::{Error, Result};
use crate::rng;

/// Features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))`
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt().ceil() as usize).max(1),
            MaxFeatures::All => dim,
            MaxFeatures::Count(n) => n.clamp(1, dim.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestParams {
    pub n_trees: usize,
    /// `None` grows until purity or `min_leaf`.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 1,
        }
    }
}

/// Bagged CART trees with Gini splits over a random feature subset per node.
pub fn train_random_forest(data: &FeatureMatrix, params: &RandomForestParams) -> Result<TreeEnsembleModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("random forest needs at least one tree".into()));
    }
    if params.min_leaf == 0 {
        return Err(Error::InvalidConfig("min_leaf must be positive".into()));
    }
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features: Some(params.max_features.resolve(data.dim())),
    };
    let n = data.n_rows();
    let mut rng = rng::seeded(params.seed);
    let trees = (0..params.n_trees)
        .map(|_| {
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_classifier(data, &rows, 0, &grow, &mut rng)
        })
        .collect();
    Ok(TreeEnsembleModel {
        kind: EnsembleKind::RandomForest,
        classes: data.classes().to_vec(),
        dim: data.dim(),
        trees,
        shrinkage: 1.0,
        base_score: Vec::new(),
    })
}
