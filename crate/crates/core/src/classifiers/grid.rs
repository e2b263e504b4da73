use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boost::{train_gradient_boost, GradBoostParams};
use super::forest::{train_random_forest, RandomForestParams};
use super::linear::{train_logreg, train_svm, LogRegParams, SvmParams};
use super::matrix::FeatureMatrix;
use super::model::Model;
use super::Classifier;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logreg")]
    LogReg,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "gb")]
    GradBoost,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::LogReg),
            "svm" => Ok(ModelKind::Svm),
            "rf" => Ok(ModelKind::RandomForest),
            "gb" => Ok(ModelKind::GradBoost),
            other => Err(Error::Invalid(format!("unknown model {other:?} (logreg|svm|rf|gb)"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::LogReg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::RandomForest => "rf",
            ModelKind::GradBoost => "gb",
        })
    }
}

/// Hyperparameters of one of the four trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum TrainParams {
    #[serde(rename = "logreg")]
    LogReg(LogRegParams),
    #[serde(rename = "svm")]
    Svm(SvmParams),
    #[serde(rename = "rf")]
    RandomForest(RandomForestParams),
    #[serde(rename = "gb")]
    GradBoost(GradBoostParams),
}

/// A grid value; `None` (JSON `null`) means "unbounded", e.g. for `max_depth`.
pub type ParamValue = Option<f64>;

fn as_count(name: &str, value: ParamValue) -> Result<usize> {
    match value {
        Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
        _ => Err(Error::InvalidConfig(format!("{name} must be a nonnegative integer, got {value:?}"))),
    }
}

fn as_real(name: &str, value: ParamValue) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidConfig(format!("{name} cannot be null")))
}

impl TrainParams {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::LogReg => TrainParams::LogReg(LogRegParams::default()),
            ModelKind::Svm => TrainParams::Svm(SvmParams::default()),
            ModelKind::RandomForest => TrainParams::RandomForest(RandomForestParams::default()),
            ModelKind::GradBoost => TrainParams::GradBoost(GradBoostParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainParams::LogReg(_) => ModelKind::LogReg,
            TrainParams::Svm(_) => ModelKind::Svm,
            TrainParams::RandomForest(_) => ModelKind::RandomForest,
            TrainParams::GradBoost(_) => ModelKind::GradBoost,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            TrainParams::LogReg(p) => p.seed = seed,
            TrainParams::Svm(p) => p.seed = seed,
            TrainParams::RandomForest(p) => p.seed = seed,
            TrainParams::GradBoost(p) => p.seed = seed,
        }
    }

    /// Set a hyperparameter by name.
    pub fn set(&mut self, name: &str, value: ParamValue) -> Result<()> {
        match (self, name) {
            (TrainParams::LogReg(p), "l2") => p.l2 = as_real(name, value)?,
            (TrainParams::LogReg(p), "lr") => p.lr = as_real(name, value)?,
            (TrainParams::LogReg(p), "epochs") => p.epochs = as_count(name, value)?,
            (TrainParams::LogReg(p), "batch_size") => p.batch_size = as_count(name, value)?,
            (TrainParams::Svm(p), "c") => p.c = as_real(name, value)?,
            (TrainParams::Svm(p), "lr") => p.lr = as_real(name, value)?,
            (TrainParams::Svm(p), "epochs") => p.epochs = as_count(name, value)?,
            (TrainParams::Svm(p), "batch_size") => p.batch_size = as_count(name, value)?,
            (TrainParams::RandomForest(p), "n_trees") => p.n_trees = as_count(name, value)?,
            (TrainParams::RandomForest(p), "max_depth") => {
                p.max_depth = value.map(|v| as_count(name, Some(v))).transpose()?
            }
            (TrainParams::RandomForest(p), "min_leaf") => p.min_leaf = as_count(name, value)?,
            (TrainParams::GradBoost(p), "n_rounds") => p.n_rounds = as_count(name, value)?,
            (TrainParams::GradBoost(p), "shrinkage") => p.shrinkage = as_real(name, value)?,
            (TrainParams::GradBoost(p), "max_depth") => p.max_depth = as_count(name, value)?,
            (TrainParams::GradBoost(p), "subsample") => p.subsample = as_real(name, value)?,
            (p, _) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown hyperparameter {name:?} for {}",
                    p.kind()
                )))
            }
        }
        Ok(())
    }

    pub fn train(&self, data: &FeatureMatrix) -> Result<Model> {
        Ok(match self {
            TrainParams::LogReg(p) => Model::Linear(train_logreg(data, p)?),
            TrainParams::Svm(p) => Model::Linear(train_svm(data, p)?),
            TrainParams::RandomForest(p) => Model::Trees(train_random_forest(data, p)?),
            TrainParams::GradBoost(p) => Model::Trees(train_gradient_boost(data, p)?),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<ParamValue>,
}

/// Cartesian hyperparameter grid evaluated with stratified k-fold CV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    5
}

fn axis(name: &str, values: &[ParamValue]) -> GridAxis {
    GridAxis {
        name: name.to_string(),
        values: values.to_vec(),
    }
}

impl GridSpec {
    /// The conventional small grid for each model kind.
    pub fn default_for(kind: ModelKind) -> Self {
        let axes = match kind {
            ModelKind::LogReg => vec![axis("l2", &[Some(1e-4), Some(1e-3), Some(1e-2), Some(1e-1)])],
            ModelKind::Svm => vec![axis("c", &[Some(0.1), Some(1.0), Some(10.0)])],
            ModelKind::RandomForest => vec![
                axis("n_trees", &[Some(100.0), Some(300.0)]),
                axis("max_depth", &[Some(8.0), Some(16.0), None]),
            ],
            ModelKind::GradBoost => vec![
                axis("shrinkage", &[Some(0.05), Some(0.1)]),
                axis("n_rounds", &[Some(100.0), Some(200.0)]),
                axis("max_depth", &[Some(2.0), Some(3.0)]),
            ],
        };
        GridSpec { axes, folds: 5, seed: 1 }
    }

    /// Every configuration, first axis varying slowest.
    pub fn configs(&self) -> Vec<Vec<(String, ParamValue)>> {
        let mut out: Vec<Vec<(String, ParamValue)>> = vec![Vec::new()];
        for ax in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    ax.values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((ax.name.clone(), *v));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

/// Held-out index sets of a stratified k-fold partition. Every class is
/// spread round-robin over the folds after a seeded shuffle, so per-class
/// counts differ by at most one between folds.
pub fn stratified_folds(data: &FeatureMatrix, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least 2 folds".into()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); data.n_classes()];
    for (i, &y) in data.labels().iter().enumerate() {
        members[y].push(i);
    }
    if let Some((k, m)) = members.iter().enumerate().find(|(_, m)| m.len() < folds) {
        return Err(Error::TooFewForFolds {
            class: data.classes()[k].clone(),
            count: m.len(),
            folds,
        });
    }
    let mut rng = rng::seeded(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for m in &mut members {
        m.shuffle(&mut rng);
        for &i in m.iter() {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub config: Vec<(String, ParamValue)>,
    pub fold_accuracy: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best_index: usize,
    pub best: TrainParams,
}

/// Evaluate every grid configuration applied on top of `base` and return
/// the one with the highest mean fold accuracy (earliest wins ties).
pub fn grid_search_cv(base: &TrainParams, data: &FeatureMatrix, grid: &GridSpec) -> Result<GridResult> {
    let configs = grid.configs();
    if configs.is_empty() || grid.axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::InvalidConfig("grid has no configurations".into()));
    }
    let folds = stratified_folds(data, grid.folds, grid.seed)?;
    let params: Vec<TrainParams> = configs
        .iter()
        .map(|cfg| {
            let mut p = base.clone();
            for (name, value) in cfg {
                p.set(name, *value)?;
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..params.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let model = params[c].train(&data.subset(&train)?)?;
            model.accuracy(&data.subset(&folds[f])?)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<GridRow> = configs
        .into_iter()
        .zip(scores.chunks(folds.len()))
        .map(|(config, acc)| {
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            GridRow {
                config,
                fold_accuracy: acc.to_vec(),
                mean,
                std: var.sqrt(),
            }
        })
        .collect();
    let mut best_index = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean > rows[best_index].mean {
            best_index = i;
        }
    }
    Ok(GridResult {
        best: params[best_index].clone(),
        rows,
        best_index,
    })
}
