//! Documents, text normalization, tokenization, JSONL ingestion and
//! stratified splitting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rng;

/// Sentinel emitted in place of a URL.
pub const URL_TOKEN: &str = "URL";
/// Sentinel emitted in place of an e-mail address.
pub const EMAIL_TOKEN: &str = "EMAIL";

/// One line of a raw dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub label: Option<String>,
}

/// A normalized, tokenized document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: Option<String>,
}

impl TokenizedDoc {
    pub fn from_text(id: impl Into<String>, text: &str, label: Option<String>) -> Self {
        TokenizedDoc {
            id: id.into(),
            tokens: tokenize(&normalize_text(text)),
            label,
        }
    }

    /// Tokens joined with single spaces.
    pub fn detokenize(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Documents plus the ordered set of category names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub docs: Vec<TokenizedDoc>,
    pub classes: Vec<String>,
}

impl Dataset {
    /// Build a dataset whose class list is the sorted set of observed labels.
    pub fn from_docs(docs: Vec<TokenizedDoc>) -> Self {
        let classes: BTreeSet<String> = docs.iter().filter_map(|d| d.label.clone()).collect();
        Dataset {
            docs,
            classes: classes.into_iter().collect(),
        }
    }

    /// Build a dataset with an explicit class list; every label must belong to it.
    pub fn with_classes(docs: Vec<TokenizedDoc>, classes: Vec<String>) -> Result<Self> {
        let known: HashSet<&str> = classes.iter().map(String::as_str).collect();
        if known.len() != classes.len() {
            return Err(Error::Invalid("class list contains duplicates".into()));
        }
        if let Some(bad) = docs
            .iter()
            .filter_map(|d| d.label.as_deref())
            .find(|l| !known.contains(l))
        {
            return Err(Error::UnknownClass(bad.to_string()));
        }
        Ok(Dataset { docs, classes })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Number of labeled documents per class, in class order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for doc in &self.docs {
            if let Some(k) = doc.label.as_deref().and_then(|l| self.class_index(l)) {
                counts[k] += 1;
            }
        }
        counts
    }

    /// Write the dataset in tokenized JSONL form.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &io::to_jsonl(&self.docs)?)
    }
}

static LINK_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(?P<url>[a-z][a-z0-9+.\-]*://\S+|\bwww\.\S+)|(?P<email>[\w.+%\-]+@[\w\-]+(?:\.[\w\-]+)*\.[a-z]{2,})",
    )
    .unwrap()
});
static SENTINEL_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:URL|EMAIL)\b").unwrap());
static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").unwrap());

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '\'', '"', '»', '”'];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn push_plain(out: &mut String, segment: &str) {
    let mut last = 0;
    for m in SENTINEL_WORD.find_iter(segment) {
        push_lowered(out, &segment[last..m.start()]);
        out.push_str(m.as_str());
        last = m.end();
    }
    push_lowered(out, &segment[last..]);
}

fn push_lowered(out: &mut String, segment: &str) {
    let lowered = segment.to_lowercase();
    out.push_str(&DIGITS.replace_all(&lowered, "0"));
}

fn push_sentinel(out: &mut String, sentinel: &str, next: Option<char>) {
    if out.chars().next_back().is_some_and(is_word_char) {
        out.push(' ');
    }
    out.push_str(sentinel);
    if next.is_some_and(is_word_char) {
        out.push(' ');
    }
}

/// Lowercase the text, replace URLs and e-mail addresses with the `URL` and
/// `EMAIL` sentinels and collapse every digit run to a single `0`.
///
/// Standalone words already equal to a sentinel are left uppercase, so the
/// output of [`tokenize`] keeps a single spelling for them.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in LINK_PATTERN.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        push_plain(&mut out, &text[last..whole.start()]);
        let end = if caps.name("url").is_some() {
            let trimmed = whole.as_str().trim_end_matches(URL_TRAILING);
            whole.start() + trimmed.len()
        } else {
            whole.end()
        };
        let sentinel = if caps.name("url").is_some() {
            URL_TOKEN
        } else {
            EMAIL_TOKEN
        };
        push_sentinel(&mut out, sentinel, text[end..].chars().next());
        last = end;
    }
    push_plain(&mut out, &text[last..]);
    out
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '«' | '»' | '“' | '”' | '‘' | '’' | '…' | '–' | '—' | '¿' | '¡' | '•' | '·' | '§' | '°'
        )
}

/// Split on whitespace and emit each punctuation character as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// A dataset line: either raw text or already-tokenized output of `preprocess`.
#[derive(Deserialize)]
struct AnyRecord {
    id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    label: Option<String>,
}

/// Load a JSONL dataset.
///
/// Lines carrying `text` are normalized and tokenized; lines carrying
/// `tokens` (the output of a previous run) are taken as they are so that
/// normalization is never applied twice.
pub fn load_dataset(path: &Path, require_labels: bool) -> Result<Dataset> {
    let context = path.display().to_string();
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (line, rec) in io::read_jsonl::<AnyRecord>(path)? {
        if rec.id.is_empty() {
            return Err(Error::parse(&context, line, "empty id"));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        if require_labels && rec.label.is_none() {
            return Err(Error::MissingLabel { line, id: rec.id });
        }
        let tokens = match (rec.text, rec.tokens) {
            (Some(text), None) => {
                if text.trim().is_empty() {
                    return Err(Error::parse(&context, line, "text is empty"));
                }
                tokenize(&normalize_text(&text))
            }
            (None, Some(tokens)) => {
                if tokens.is_empty() || tokens.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
                    return Err(Error::parse(&context, line, "tokens must be nonempty and whitespace-free"));
                }
                tokens
            }
            _ => return Err(Error::parse(&context, line, "expected exactly one of \"text\" or \"tokens\"")),
        };
        docs.push(TokenizedDoc {
            id: rec.id,
            tokens,
            label: rec.label,
        });
    }
    Ok(Dataset::from_docs(docs))
}

/// Per-class sample counts for [`stratified_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub seed: u64,
}

impl SplitSpec {
    fn per_class(&self) -> usize {
        self.train + self.valid + self.test
    }
}

/// Draw exactly `spec.train / valid / test` documents of every class,
/// without replacement. Unlabeled documents are ignored. The three splits
/// keep the full class list of the input.
pub fn stratified_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.classes.len()];
    let index: HashMap<&str, usize> = dataset
        .classes
        .iter()
        .enumerate()
        .map(|(k, c)| (c.as_str(), k))
        .collect();
    for (i, doc) in dataset.docs.iter().enumerate() {
        if let Some(label) = &doc.label {
            let k = *index
                .get(label.as_str())
                .ok_or_else(|| Error::UnknownClass(label.clone()))?;
            by_class[k].push(i);
        }
    }
    let deficient: Vec<String> = by_class
        .iter()
        .zip(&dataset.classes)
        .filter(|(members, _)| members.len() < spec.per_class())
        .map(|(_, name)| name.clone())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::InfeasibleSplit(deficient));
    }

    let mut rng = rng::seeded(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let (train, rest) = members.split_at(spec.train);
        let (valid, rest) = rest.split_at(spec.valid);
        parts[0].extend_from_slice(train);
        parts[1].extend_from_slice(valid);
        parts[2].extend_from_slice(&rest[..spec.test]);
    }
    let [train, valid, test] = parts.map(|mut idx| {
        idx.shuffle(&mut rng);
        Dataset {
            docs: idx.into_iter().map(|i| dataset.docs[i].clone()).collect(),
            classes: dataset.classes.clone(),
        }
    });
    Ok((train, valid, test))
}
