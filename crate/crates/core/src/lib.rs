//! Few-label text classification.
//!
//! The crate covers the whole pipeline: text normalization and balanced
//! splits ([`corpus`]), TF-IDF and skip-gram embeddings ([`features`]),
//! label-preserving augmentation ([`augment`]), supervised baselines with
//! grid search ([`classifiers`]), semi-supervised consistency training with
//! training signal annealing ([`uda`]) and evaluation reports ([`eval`]).
//! The [`cli`] module drives everything from the command line and hosts the
//! prediction endpoint.

pub mod augment;
pub mod classifiers;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod rng;
pub mod uda;

pub use error::{Error, Result};
