//! Both augmentation strategies: TF-IDF word replacement and back
//! translation through a dictionary translator.
//!
//! cargo run --example augment

use std::collections::HashMap;

use udatext::augment::{augment_dataset, augmented_pairs, AugmentConfig, Augmentation, MockTranslator, TfIdfReplacer};
use udatext::corpus::{Dataset, TokenizedDoc};
use udatext::features::{build_vocab, compute_tfidf};

fn main() -> udatext::Result<()> {
    let texts = [
        ("d1", "a demanda sobre a fatura foi aberta ontem", "billing"),
        ("d2", "a entrega do pedido atrasou de novo", "delivery"),
        ("d3", "nao consigo acessar a conta com a senha nova", "account"),
        ("d4", "a fatura veio com valor errado e a demanda continua", "billing"),
    ];
    let data = Dataset::from_docs(
        texts
            .iter()
            .map(|(id, t, l)| TokenizedDoc::from_text(*id, t, Some(l.to_string())))
            .collect(),
    );

    let table = compute_tfidf(&data.docs)?;
    let vocab = build_vocab(&data.docs, 1)?;
    let cfg = AugmentConfig {
        p_max: 0.7,
        pool_fraction: 0.5,
        seed: 3,
    };
    let replacer = TfIdfReplacer::new(&table, &vocab, &cfg)?;
    println!("replacement pool (lowest idf): {:?}", replacer.pool());
    let augmented = augment_dataset(&data, &Augmentation::TfIdf(&replacer))?;
    for pair in augmented_pairs(&augmented) {
        let orig = augmented.docs.iter().find(|d| d.id == pair.id).unwrap();
        let aug = augmented.docs.iter().find(|d| d.id == pair.aug_id).unwrap();
        println!("{:<6} {}\n{:<6} {}", orig.id, orig.detokenize(), aug.id, aug.detokenize());
    }

    let dict = |pairs: &[(&str, &str)]| pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect::<HashMap<_, _>>();
    let translator = MockTranslator {
        source: "pt".into(),
        forward: dict(&[("demanda", "complaint"), ("fatura", "invoice")]),
        backward: dict(&[("complaint", "reclamação"), ("invoice", "conta")]),
    };
    let strategy = Augmentation::BackTranslation {
        translator: &translator,
        source: "pt",
        pivot: "en",
    };
    let back = augment_dataset(&data, &strategy)?;
    println!("\nback translation doubles {} -> {} documents", data.len(), back.len());
    println!("{}", back.docs[data.len()].detokenize());
    Ok(())
}
