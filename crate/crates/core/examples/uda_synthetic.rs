//! Few labels, many unlabeled documents: supervised softmax regression
//! against UDA (log TSA, TF-IDF replacement pairs) on a synthetic
//! 10-class corpus.
//!
//! cargo run --release --example uda_synthetic -- [seeds] [steps]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udatext::augment::{AugmentConfig, TfIdfReplacer};
use udatext::classifiers::{Classifier, FeatureMatrix};
use udatext::corpus::TokenizedDoc;
use udatext::features::{build_vocab, compute_tfidf, term_counts, Vocabulary};
use udatext::uda::{train_uda, TsaSchedule, UdaConfig, UnlabeledPair};

const K: usize = 10;
const VOCAB: usize = 500;
const DOC_LEN: usize = 20;
const SIGNAL: f64 = 0.3;

/// Each class mixes its own 50-word topic block with a Zipf background
/// shared by every class.
struct Generator {
    background: Vec<f64>,
}

impl Generator {
    fn new() -> Self {
        let mut acc = 0.0;
        let mut background: Vec<f64> = (1..=VOCAB)
            .map(|r| {
                acc += 1.0 / r as f64;
                acc
            })
            .collect();
        background.iter_mut().for_each(|c| *c /= acc);
        Self { background }
    }

    fn doc(&self, r: &mut ChaCha8Rng, id: String, class: usize) -> TokenizedDoc {
        let block = VOCAB / K;
        let tokens = (0..DOC_LEN)
            .map(|_| {
                let w = if r.random::<f64>() < SIGNAL {
                    class * block + r.random_range(0..block)
                } else {
                    let u: f64 = r.random();
                    let rank = self.background.partition_point(|&c| c < u).min(VOCAB - 1);
                    // spread the frequent words over every block
                    (rank * 7) % VOCAB
                };
                format!("w{w:03}")
            })
            .collect();
        TokenizedDoc {
            id,
            tokens,
            label: Some(format!("c{class}")),
        }
    }

    fn docs(&self, r: &mut ChaCha8Rng, prefix: &str, per_class: usize) -> Vec<TokenizedDoc> {
        (0..K)
            .flat_map(|c| (0..per_class).map(move |j| (c, j)))
            .map(|(c, j)| self.doc(r, format!("{prefix}{c}-{j}"), c))
            .collect()
    }
}

fn matrix(docs: &[TokenizedDoc], vocab: &Vocabulary) -> FeatureMatrix {
    let classes: Vec<String> = (0..K).map(|c| format!("c{c}")).collect();
    let rows = docs.iter().map(|d| term_counts(&d.tokens, vocab)).collect();
    let labels = docs
        .iter()
        .map(|d| classes.iter().position(|c| Some(c) == d.label.as_ref()).unwrap())
        .collect();
    FeatureMatrix::new(rows, labels, classes).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map_or(5, |s| s.parse().expect("seeds"));
    let steps: usize = args.get(2).map_or(600, |s| s.parse().expect("steps"));
    let generator = Generator::new();
    let mut gains = Vec::new();
    for seed in 1..=seeds {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let labeled = generator.docs(&mut r, "l", 10);
        let unlabeled = generator.docs(&mut r, "u", 200);
        let test = generator.docs(&mut r, "t", 30);

        let seen: Vec<TokenizedDoc> = labeled.iter().chain(&unlabeled).cloned().collect();
        let vocab = build_vocab(&seen, 1).unwrap();
        let table = compute_tfidf(&seen).unwrap();
        let replacer = TfIdfReplacer::new(
            &table,
            &vocab,
            &AugmentConfig {
                p_max: 0.5,
                pool_fraction: 0.5,
                seed,
            },
        )
        .unwrap();
        let pairs: Vec<UnlabeledPair> = unlabeled
            .iter()
            .map(|d| UnlabeledPair {
                id: d.id.clone(),
                original: term_counts(&d.tokens, &vocab),
                augmented: term_counts(&replacer.replace(d).unwrap().tokens, &vocab),
            })
            .collect();

        let train = matrix(&labeled, &vocab);
        let test = matrix(&test, &vocab);
        let supervised_cfg = UdaConfig {
            schedule: TsaSchedule::None,
            total_steps: steps,
            lambda: 0.0,
            unsup_batch: 128,
            l2: 1e-4,
            seed,
            ..Default::default()
        };
        let supervised = train_uda(&train, &[], &supervised_cfg).unwrap();
        let uda_cfg = UdaConfig {
            schedule: TsaSchedule::Log,
            lambda: 1.0,
            ..supervised_cfg
        };
        let uda = train_uda(&train, &pairs, &uda_cfg).unwrap();
        let (a, b) = (supervised.accuracy(&test).unwrap(), uda.accuracy(&test).unwrap());
        println!("seed {seed}: supervised {a:.3}  uda {b:.3}");
        gains.push(b - a);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    println!("mean gain {:.1} points", 100.0 * mean);
}
