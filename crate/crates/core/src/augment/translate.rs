use std::collections::HashMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BACK_TRANSLATION_SUFFIX;
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Machine translation backend.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String>;
}

/// Word-for-word translator backed by two dictionaries. Words missing from
/// a dictionary pass through unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockTranslator {
    /// Language whose text is translated with `forward`; any other source
    /// language uses `backward`.
    pub source: String,
    #[serde(default)]
    pub forward: HashMap<String, String>,
    #[serde(default)]
    pub backward: HashMap<String, String>,
}

impl MockTranslator {
    pub fn identity(source: &str) -> Self {
        MockTranslator {
            source: source.to_string(),
            ..Default::default()
        }
    }
}

impl Translator for MockTranslator {
    fn translate(&self, text: &str, source: &str, _target: &str) -> Result<String> {
        let map = if source == self.source { &self.forward } else { &self.backward };
        Ok(text
            .split_whitespace()
            .map(|w| map.get(w).map_or(w, String::as_str))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TranslateResponse {
    translated_text: String,
}

/// JSON-over-HTTP translator: POSTs `{"q","source","target"}` and expects
/// `{"translatedText"}` back. The optional key is sent as a bearer token.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTranslator {
            endpoint: endpoint.into(),
            key,
            agent,
        }
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(TranslateRequest { q: text, source, target })
            .map_err(|e| Error::Invalid(format!("translator request to {}: {e}", self.endpoint)))?;
        let body: TranslateResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Invalid(format!("translator response: {e}")))?;
        Ok(body.translated_text)
    }
}

/// Translate every document to `pivot` and back to `source`, then normalize
/// and tokenize the result again. Output order and labels follow the input;
/// any failure aborts the whole batch.
pub fn back_translate(
    docs: &[TokenizedDoc],
    translator: &dyn Translator,
    source: &str,
    pivot: &str,
) -> Result<Vec<TokenizedDoc>> {
    docs.par_iter()
        .map(|doc| {
            let fail = |e: Error| Error::Translation {
                id: doc.id.clone(),
                message: e.to_string(),
            };
            let there = translator.translate(&doc.detokenize(), source, pivot).map_err(fail)?;
            let back = translator.translate(&there, pivot, source).map_err(fail)?;
            let out = TokenizedDoc::from_text(format!("{}{BACK_TRANSLATION_SUFFIX}", doc.id), &back, doc.label.clone());
            if out.tokens.is_empty() {
                return Err(Error::Translation {
                    id: doc.id.clone(),
                    message: "translation came back empty".into(),
                });
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str, label: &str) -> TokenizedDoc {
        TokenizedDoc::from_text(id, text, Some(label.into()))
    }

    #[test]
    fn identity_round_trip() {
        let docs = vec![doc("1", "a demanda: chegou!", "A"), doc("2", "EMAIL enviado em 0", "B")];
        let out = back_translate(&docs, &MockTranslator::identity("pt"), "pt", "en").unwrap();
        for (a, b) in docs.iter().zip(&out) {
            assert_eq!(a.tokens, b.tokens);
            assert_eq!(a.label, b.label);
            assert_eq!(b.id, format!("{}#bt", a.id));
        }
    }

    #[test]
    fn mock_dictionaries_paraphrase() {
        let mock = MockTranslator {
            source: "pt".into(),
            forward: HashMap::from([("demanda".into(), "complaint".into())]),
            backward: HashMap::from([("complaint".into(), "reclamação".into())]),
        };
        let out = back_translate(&[doc("1", "nova demanda", "A")], &mock, "pt", "en").unwrap();
        assert_eq!(out[0].tokens, ["nova", "reclamação"]);
    }

    struct Failing;

    impl Translator for Failing {
        fn translate(&self, text: &str, _: &str, _: &str) -> Result<String> {
            if text.contains("quebra") {
                Err(Error::Invalid("boom".into()))
            } else {
                Ok(text.to_string())
            }
        }
    }

    #[test]
    fn failure_names_the_document() {
        let docs = vec![doc("ok", "tudo bem", "A"), doc("bad", "isto quebra", "A")];
        match back_translate(&docs, &Failing, "pt", "en") {
            Err(Error::Translation { id, .. }) => assert_eq!(id, "bad"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
