use std::collections::HashMap;

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Token to dense index mapping with occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    /// Build from an ordered token list with known counts.
    pub fn from_counts(entries: Vec<(String, u64)>, min_count: u64) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (token, count)) in entries.into_iter().enumerate() {
            if index.insert(token.clone(), i).is_some() {
                return Err(Error::DuplicateId(token));
            }
            tokens.push(token);
            counts.push(count);
        }
        Ok(Vocabulary {
            tokens,
            counts,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Occurrence count (0 for vocabularies loaded from an embedding file).
    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }
}

/// Keep tokens seen at least `min_count` times, indexed by descending count
/// with lexicographic tie-breaks.
pub fn build_vocab(corpus: &[TokenizedDoc], min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary(min_count));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_counts(kept, min_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<TokenizedDoc> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| TokenizedDoc {
                id: i.to_string(),
                tokens: t.split(' ').map(String::from).collect(),
                label: None,
            })
            .collect()
    }

    #[test]
    fn min_count_filters() {
        let v = build_vocab(&docs(&["a a b"]), 2).unwrap();
        assert_eq!(v.tokens(), ["a"]);
        assert_eq!(v.count(0), 2);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocab(&docs(&["a b", "b c"]), 1).unwrap();
        assert_eq!(v.tokens(), ["b", "a", "c"]);
        assert_eq!(v.index_of("c"), Some(2));
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        assert!(matches!(build_vocab(&docs(&["a"]), 2), Err(Error::EmptyVocabulary(2))));
        assert!(build_vocab(&[], 1).is_err());
    }
}
