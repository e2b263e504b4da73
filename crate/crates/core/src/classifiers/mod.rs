//! Supervised classifiers over dense document features: softmax regression,
//! one-vs-rest linear SVM, random forest and gradient boosting, plus
//! stratified k-fold grid search and a JSON model file.

mod boost;
mod ensemble;
mod forest;
mod grid;
pub(crate) mod linear;
mod matrix;
mod model;
pub mod optim;
mod tree;

pub use boost::{train_gradient_boost, GradBoostParams};
pub use ensemble::{EnsembleKind, TreeEnsembleModel};
pub use forest::{train_random_forest, MaxFeatures, RandomForestParams};
pub use grid::{
    grid_search_cv, stratified_folds, GridAxis, GridResult, GridRow, GridSpec, ModelKind, ParamValue, TrainParams,
};
pub use linear::{
    logreg_loss_grad, softmax, svm_objective_grad, train_logreg, train_svm, LinearKind, LinearModel, LogRegParams,
    SvmParams,
};
pub use matrix::FeatureMatrix;
pub use model::{Featurizer, Model, ModelFile, SCHEMA_VERSION};
pub use tree::Node;

use crate::error::Result;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that scores every class for a feature vector.
pub trait Classifier {
    fn classes(&self) -> &[String];

    fn dim(&self) -> usize;

    /// One score per class; probabilities for the probabilistic models,
    /// decision values for the SVM.
    fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.class_scores(x)?))
    }

    /// Fraction of rows of `data` predicted correctly.
    fn accuracy(&self, data: &FeatureMatrix) -> Result<f64> {
        let mut hits = 0usize;
        for i in 0..data.n_rows() {
            if self.predict(data.row(i))? == data.labels()[i] {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.n_rows() as f64)
    }
}
