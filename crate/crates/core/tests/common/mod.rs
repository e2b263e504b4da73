#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udatext::classifiers::FeatureMatrix;
use udatext::corpus::TokenizedDoc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("c{i}")).collect()
}

/// Two classes in 2-d split by the sign of x1 with margin 1.
pub fn separable(n: usize, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let sign = if y == 1 { 1.0 } else { -1.0 };
        rows.push(vec![sign * (1.0 + r.random::<f64>()), r.random_range(-2.0..2.0)]);
        labels.push(y);
    }
    FeatureMatrix::new(rows, labels, names(2)).unwrap()
}

/// Gaussian-ish blobs: `per_class` rows per class around distinct centers.
pub fn blobs(k: usize, per_class: usize, dim: usize, spread: f64, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| r.random_range(-3.0..3.0)).collect())
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            rows.push(center.iter().map(|m| m + spread * r.random_range(-1.0..1.0)).collect());
            labels.push(c);
        }
    }
    FeatureMatrix::new(rows, labels, names(k)).unwrap()
}

/// Random rows (pairwise distinct with probability 1) and random labels.
pub fn random_labels(n: usize, dim: usize, k: usize, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let rows = (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect();
    let labels = (0..n).map(|_| r.random_range(0..k)).collect();
    FeatureMatrix::new(rows, labels, names(k)).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// Central finite differences of `f` at `x`.
pub fn numeric_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a|| + ||b||, 1e-10)`.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    diff / (norm(&mut a.iter().copied()) + norm(&mut b.iter().copied())).max(1e-10)
}

/// Class-conditional unigram corpus: each class mixes its own block of
/// `vocab / k` topic words with a Zipf background shared by every class, so
/// the frequent (low idf) words carry no label information.
pub struct SyntheticCorpus {
    pub k: usize,
    pub vocab: usize,
    pub doc_len: usize,
    /// Probability that a token comes from the class block.
    pub signal: f64,
}

impl SyntheticCorpus {
    /// Letters only, so text normalization leaves the word intact:
    /// 0 -> "waa", 1 -> "wab", 27 -> "wbb".
    pub fn word(i: usize) -> String {
        let letter = |n: usize| char::from(b'a' + n as u8);
        format!("w{}{}", letter(i / 26), letter(i % 26))
    }

    fn background_cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=self.vocab)
            .map(|rank| {
                acc += 1.0 / rank as f64;
                acc
            })
            .collect();
        cdf.iter_mut().for_each(|c| *c /= acc);
        cdf
    }

    fn doc_with(&self, cdf: &[f64], r: &mut ChaCha8Rng, id: String, class: usize, labeled: bool) -> TokenizedDoc {
        let block = self.vocab / self.k;
        let tokens = (0..self.doc_len)
            .map(|_| {
                let i = if r.random::<f64>() < self.signal {
                    class * block + r.random_range(0..block)
                } else {
                    let u: f64 = r.random();
                    let rank = cdf.partition_point(|&c| c < u).min(self.vocab - 1);
                    // stride 7 spreads the frequent words over every block
                    (rank * 7) % self.vocab
                };
                Self::word(i)
            })
            .collect();
        TokenizedDoc {
            id,
            tokens,
            label: labeled.then(|| format!("c{class}")),
        }
    }

    pub fn doc(&self, r: &mut ChaCha8Rng, id: String, class: usize, labeled: bool) -> TokenizedDoc {
        self.doc_with(&self.background_cdf(), r, id, class, labeled)
    }

    pub fn docs(&self, r: &mut ChaCha8Rng, prefix: &str, per_class: usize, labeled: bool) -> Vec<TokenizedDoc> {
        let cdf = self.background_cdf();
        let mut out = Vec::new();
        for c in 0..self.k {
            for j in 0..per_class {
                out.push(self.doc_with(&cdf, r, format!("{prefix}-{c}-{j}"), c, labeled));
            }
        }
        out
    }
}
