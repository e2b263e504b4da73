use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Document frequencies over a corpus; `idf(w) = ln(N / df(w))`, unsmoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfTable {
    pub doc_count: usize,
    pub df: BTreeMap<String, usize>,
}

pub fn compute_tfidf(corpus: &[TokenizedDoc]) -> Result<TfIdfTable> {
    if corpus.is_empty() {
        return Err(Error::Invalid("TF-IDF needs a nonempty corpus".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for tok in seen {
            *df.entry(tok.to_string()).or_default() += 1;
        }
    }
    Ok(TfIdfTable {
        doc_count: corpus.len(),
        df,
    })
}

impl TfIdfTable {
    pub fn idf(&self, token: &str) -> Result<f64> {
        let df = *self
            .df
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        Ok((self.doc_count as f64 / df as f64).ln())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.df.contains_key(token)
    }

    /// `tf(w, doc) * idf(w)` with `tf = count / |doc|`.
    pub fn score(&self, token: &str, doc: &[String]) -> Result<f64> {
        let idf = self.idf(token)?;
        if doc.is_empty() {
            return Ok(0.0);
        }
        let count = doc.iter().filter(|t| *t == token).count();
        Ok(count as f64 / doc.len() as f64 * idf)
    }

    /// Score of every position of `doc`, in order.
    pub fn position_scores(&self, doc: &[String]) -> Result<Vec<f64>> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in doc {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
        let len = doc.len() as f64;
        doc.iter()
            .map(|tok| Ok(counts[tok.as_str()] as f64 / len * self.idf(tok)?))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> TokenizedDoc {
        TokenizedDoc {
            id: text.to_string(),
            tokens: text.split(' ').map(String::from).collect(),
            label: None,
        }
    }

    #[test]
    fn common_word_scores_zero() {
        let corpus = [doc("gato come peixe"), doc("cachorro come osso")];
        let table = compute_tfidf(&corpus).unwrap();
        assert_eq!(table.score("come", &corpus[0].tokens).unwrap(), 0.0);
        let gato = table.score("gato", &corpus[0].tokens).unwrap();
        assert!((gato - 0.231_049_060_186_648_4).abs() < 1e-12, "{gato}");
    }

    #[test]
    fn single_document_has_zero_idf() {
        let table = compute_tfidf(&[doc("a b a")]).unwrap();
        assert_eq!(table.idf("a").unwrap(), 0.0);
        assert_eq!(table.idf("b").unwrap(), 0.0);
    }

    #[test]
    fn unknown_token_is_an_error() {
        let table = compute_tfidf(&[doc("a")]).unwrap();
        assert!(matches!(table.idf("z"), Err(Error::UnknownToken(_))));
        assert!(compute_tfidf(&[]).is_err());
    }

    #[test]
    fn position_scores_match_score() {
        let corpus = [doc("a b a c"), doc("b d"), doc("a e")];
        let table = compute_tfidf(&corpus).unwrap();
        let scores = table.position_scores(&corpus[0].tokens).unwrap();
        for (tok, s) in corpus[0].tokens.iter().zip(scores) {
            assert_eq!(s, table.score(tok, &corpus[0].tokens).unwrap());
        }
    }
}
