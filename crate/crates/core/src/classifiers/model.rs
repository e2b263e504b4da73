use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleKind, TreeEnsembleModel};
use super::grid::ModelKind;
use super::linear::{LinearKind, LinearModel};
use super::tree::Node;
use super::Classifier;
use crate::error::{Error, Result};
use crate::features::LayerStrategy;
use crate::io;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Trees(TreeEnsembleModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(m) if m.kind == LinearKind::LogReg => ModelKind::LogReg,
            Model::Linear(_) => ModelKind::Svm,
            Model::Trees(m) if m.kind == EnsembleKind::RandomForest => ModelKind::RandomForest,
            Model::Trees(_) => ModelKind::GradBoost,
        }
    }
}

impl Classifier for Model {
    fn classes(&self) -> &[String] {
        match self {
            Model::Linear(m) => m.classes(),
            Model::Trees(m) => m.classes(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Linear(m) => m.dim(),
            Model::Trees(m) => m.dim(),
        }
    }

    fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Linear(m) => m.class_scores(x),
            Model::Trees(m) => m.class_scores(x),
        }
    }
}

/// How raw text becomes the model's input vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Featurizer {
    /// Averaged word vectors from an embedding file.
    Embeddings { path: String, sha256: String },
    /// Precomputed transformer layers; raw text cannot be featurized.
    Layers { strategy: LayerStrategy },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LinearPayload {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TreesPayload {
    trees: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shrinkage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_score: Option<Vec<f64>>,
}

/// On-disk model: `{"schema_version", "kind", "classes", "dim", "params",
/// "payload", "featurizer"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub classes: Vec<String>,
    pub dim: usize,
    pub params: serde_json::Value,
    pub payload: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub featurizer: Option<Featurizer>,
}

impl ModelFile {
    pub fn new(model: &Model, params: serde_json::Value, featurizer: Option<Featurizer>) -> Self {
        let payload = match model {
            Model::Linear(m) => serde_json::to_value(LinearPayload {
                weights: m.weights.chunks(m.dim.max(1)).map(<[f64]>::to_vec).collect(),
                bias: m.bias.clone(),
                l2: m.l2,
            }),
            Model::Trees(m) => serde_json::to_value(TreesPayload {
                trees: m.trees.clone(),
                shrinkage: (m.kind == EnsembleKind::GradBoost).then_some(m.shrinkage),
                base_score: (m.kind == EnsembleKind::GradBoost).then(|| m.base_score.clone()),
            }),
        }
        .expect("model payload serializes");
        ModelFile {
            schema_version: SCHEMA_VERSION,
            kind: model.kind(),
            classes: model.classes().to_vec(),
            dim: model.dim(),
            params,
            payload,
            featurizer,
        }
    }

    /// Rebuild the model, checking every shape against `classes` and `dim`.
    pub fn model(&self) -> Result<Model> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!("unsupported schema_version {}", self.schema_version)));
        }
        let k = self.classes.len();
        let bad = |msg: String| Error::Invalid(format!("model payload: {msg}"));
        match self.kind {
            ModelKind::LogReg | ModelKind::Svm => {
                let p: LinearPayload = serde_json::from_value(self.payload.clone()).map_err(|e| bad(e.to_string()))?;
                if p.weights.len() != k || p.bias.len() != k || p.weights.iter().any(|w| w.len() != self.dim) {
                    return Err(bad(format!("expected {k} x {} weights and {k} biases", self.dim)));
                }
                let kind = if self.kind == ModelKind::LogReg {
                    LinearKind::LogReg
                } else {
                    LinearKind::Svm
                };
                Ok(Model::Linear(LinearModel {
                    kind,
                    classes: self.classes.clone(),
                    dim: self.dim,
                    weights: p.weights.concat(),
                    bias: p.bias,
                    l2: p.l2,
                }))
            }
            ModelKind::RandomForest | ModelKind::GradBoost => {
                let p: TreesPayload = serde_json::from_value(self.payload.clone()).map_err(|e| bad(e.to_string()))?;
                let boost = self.kind == ModelKind::GradBoost;
                let leaf_len = if boost { 1 } else { k };
                for tree in &p.trees {
                    check_tree(tree, self.dim, leaf_len).map_err(bad)?;
                }
                let base_score = p.base_score.unwrap_or_default();
                if boost && (base_score.len() != k || !p.trees.len().is_multiple_of(k.max(1))) {
                    return Err(bad("boosting needs K base scores and K trees per round".into()));
                }
                Ok(Model::Trees(TreeEnsembleModel {
                    kind: if boost {
                        EnsembleKind::GradBoost
                    } else {
                        EnsembleKind::RandomForest
                    },
                    classes: self.classes.clone(),
                    dim: self.dim,
                    trees: p.trees,
                    shrinkage: p.shrinkage.unwrap_or(1.0),
                    base_score,
                }))
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e))
    }
}

fn check_tree(node: &Node, dim: usize, leaf_len: usize) -> std::result::Result<(), String> {
    match node {
        Node::Split {
            feature, left, right, ..
        } => {
            if *feature >= dim {
                return Err(format!("split feature {feature} >= dim {dim}"));
            }
            check_tree(left, dim, leaf_len)?;
            check_tree(right, dim, leaf_len)
        }
        Node::Leaf { leaf } if leaf.len() != leaf_len => {
            Err(format!("leaf has {} values, expected {leaf_len}", leaf.len()))
        }
        Node::Leaf { .. } => Ok(()),
    }
}
