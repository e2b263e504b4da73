use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TFIDF_SUFFIX;
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::features::{TfIdfTable, Vocabulary};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Replacement probability of the least informative position.
    pub p_max: f64,
    /// Share of the vocabulary, lowest idf first, that replacements are drawn from.
    pub pool_fraction: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p_max: 0.3,
            pool_fraction: 0.5,
            seed: 1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_max) {
            return Err(Error::InvalidConfig(format!("p_max {} outside [0, 1]", self.p_max)));
        }
        if !(self.pool_fraction > 0.0 && self.pool_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "pool_fraction {} outside (0, 1]",
                self.pool_fraction
            )));
        }
        Ok(())
    }
}

/// TF-IDF word replacement with a precomputed replacement pool.
///
/// Position `i` of a document with scores `s` is replaced with probability
/// `p_max * (max(s) - s_i) / (max(s) - min(s))` (zero when all scores are
/// equal) by a word drawn uniformly from the pool.
#[derive(Debug, Clone)]
pub struct TfIdfReplacer {
    table: TfIdfTable,
    pool: Vec<String>,
    cfg: AugmentConfig,
}

impl TfIdfReplacer {
    pub fn new(table: &TfIdfTable, vocab: &Vocabulary, cfg: &AugmentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut ranked: Vec<(f64, &String)> = vocab
            .tokens()
            .iter()
            .filter_map(|t| table.idf(t).ok().map(|idf| (idf, t)))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let take = (cfg.pool_fraction * ranked.len() as f64).ceil() as usize;
        let pool: Vec<String> = ranked.into_iter().take(take).map(|(_, t)| t.clone()).collect();
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(TfIdfReplacer {
            table: table.clone(),
            pool,
            cfg: cfg.clone(),
        })
    }

    pub fn pool(&self) -> &[String] {
        &self.pool
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.cfg
    }

    /// Per-position replacement probabilities.
    pub fn probabilities(&self, doc: &TokenizedDoc) -> Result<Vec<f64>> {
        let scores = self.table.position_scores(&doc.tokens)?;
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(scores
            .iter()
            .map(|&s| {
                if max > min {
                    self.cfg.p_max * (max - s) / (max - min)
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Generator used for `doc`; seeded from the config seed and the doc id.
    pub fn doc_rng(&self, doc: &TokenizedDoc) -> rng::Rng {
        rng::seeded(rng::derive_seed(self.cfg.seed, &doc.id))
    }

    pub fn replace(&self, doc: &TokenizedDoc) -> Result<TokenizedDoc> {
        let probs = self.probabilities(doc)?;
        let mut rng = self.doc_rng(doc);
        let tokens = doc
            .tokens
            .iter()
            .zip(probs)
            .map(|(tok, p)| {
                if rng.random::<f64>() < p {
                    self.pool[rng.random_range(0..self.pool.len())].clone()
                } else {
                    tok.clone()
                }
            })
            .collect();
        Ok(TokenizedDoc {
            id: format!("{}{TFIDF_SUFFIX}", doc.id),
            tokens,
            label: doc.label.clone(),
        })
    }
}

pub fn tfidf_replace(
    doc: &TokenizedDoc,
    table: &TfIdfTable,
    vocab: &Vocabulary,
    cfg: &AugmentConfig,
) -> Result<TokenizedDoc> {
    TfIdfReplacer::new(table, vocab, cfg)?.replace(doc)
}
