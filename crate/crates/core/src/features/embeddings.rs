use std::fmt::Write as _;
use std::path::Path;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::io;

/// Vocabulary-indexed word vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocabulary,
    dim: usize,
    vectors: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be positive".into()));
        }
        if vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                got: vectors.len(),
            });
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding component".into()));
        }
        Ok(EmbeddingMatrix { vocab, dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vocab.index_of(token).map(|i| self.row(i))
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = (self.get(a)?, self.get(b)?);
        let dot: f64 = x.iter().zip(y).map(|(p, q)| *p as f64 * *q as f64).sum();
        let nx: f64 = x.iter().map(|p| (*p as f64).powi(2)).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|p| (*p as f64).powi(2)).sum::<f64>().sqrt();
        Some(dot / (nx * ny).max(f64::MIN_POSITIVE))
    }
}

/// Mean of the vectors of the in-vocabulary tokens; zero vector when none are known.
pub fn doc_vector(tokens: &[String], embeddings: &EmbeddingMatrix) -> Vec<f64> {
    let mut known: Vec<usize> = tokens.iter().filter_map(|t| embeddings.vocab.index_of(t)).collect();
    let mut out = vec![0.0; embeddings.dim];
    if known.is_empty() {
        return out;
    }
    // Summing in index order makes the result independent of token order.
    known.sort_unstable();
    for &i in &known {
        for (o, x) in out.iter_mut().zip(embeddings.row(i)) {
            *o += *x as f64;
        }
    }
    let n = known.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Raw term counts over `vocab`; out-of-vocabulary tokens are skipped.
pub fn term_counts(tokens: &[String], vocab: &Vocabulary) -> Vec<f64> {
    let mut out = vec![0.0; vocab.len()];
    for i in tokens.iter().filter_map(|t| vocab.index_of(t)) {
        out[i] += 1.0;
    }
    out
}

/// Relative term frequencies over `vocab`; out-of-vocabulary tokens are skipped.
pub fn bag_of_words(tokens: &[String], vocab: &Vocabulary) -> Vec<f64> {
    let mut out = term_counts(tokens, vocab);
    let n: f64 = out.iter().sum();
    if n > 0.0 {
        out.iter_mut().for_each(|o| *o /= n);
    }
    out
}

/// Write the text embedding format: a `"<vocab_size> <dim>"` header then
/// one `"<token> <c1> ... <cdim>"` line per token with 9 significant digits.
pub fn write_embeddings(path: &Path, embeddings: &EmbeddingMatrix) -> Result<()> {
    let mut buf = String::new();
    let _ = writeln!(buf, "{} {}", embeddings.vocab.len(), embeddings.dim);
    for (i, token) in embeddings.vocab.tokens().iter().enumerate() {
        buf.push_str(token);
        for x in embeddings.row(i) {
            let _ = write!(buf, " {x:.8e}");
        }
        buf.push('\n');
    }
    io::write_atomic(path, buf.as_bytes())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let context = path.display().to_string();
    let text = io::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&context, 1, "missing header"))?;
    let header: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(&context, 1, format!("bad header: {e}")))?;
    let &[size, dim] = header.as_slice() else {
        return Err(Error::parse(&context, 1, "header must be \"<vocab_size> <dim>\""));
    };

    let mut entries = Vec::with_capacity(size);
    let mut vectors = Vec::with_capacity(size * dim);
    for (i, line) in lines {
        let lineno = i + 1;
        if entries.len() == size {
            return Err(Error::parse(&context, lineno, format!("more vectors than the {size} declared")));
        }
        let mut parts = line.split(' ');
        let token = parts.next().unwrap_or_default();
        let mut n = 0;
        for part in parts {
            let x: f32 = part
                .parse()
                .map_err(|_| Error::parse(&context, lineno, format!("non-numeric component {part:?}")))?;
            vectors.push(x);
            n += 1;
        }
        if n != dim {
            return Err(Error::parse(&context, lineno, format!("expected {dim} components, found {n}")));
        }
        entries.push((token.to_string(), 0));
    }
    if entries.len() != size {
        return Err(Error::parse(
            &context,
            text.lines().count(),
            format!("header declares {size} vectors, found {}", entries.len()),
        ));
    }
    EmbeddingMatrix::new(Vocabulary::from_counts(entries, 0)?, dim, vectors)
}
