//! Train skip-gram word vectors on a toy corpus and featurize documents by
//! averaging them.
//!
//! cargo run --release --example embeddings

use udatext::corpus::TokenizedDoc;
use udatext::features::{doc_vector, train_skipgram, SkipGramConfig};

fn main() -> udatext::Result<()> {
    // "gato" and "cachorro" share every context; "imposto" never does
    let templates = [
        "o {} dorme no sofa da sala",
        "meu {} come racao todo dia",
        "levei o {} ao veterinario ontem",
    ];
    let mut docs = Vec::new();
    for (i, t) in templates.iter().cycle().take(300).enumerate() {
        let pet = if i % 2 == 0 { "gato" } else { "cachorro" };
        docs.push(TokenizedDoc::from_text(format!("p{i}"), &t.replace("{}", pet), None));
        docs.push(TokenizedDoc::from_text(
            format!("t{i}"),
            "o imposto de renda vence em abril e a declaracao atrasou",
            None,
        ));
    }

    let cfg = SkipGramConfig {
        dim: 32,
        window: 3,
        min_count: 1,
        epochs: 5,
        ..Default::default()
    };
    let emb = train_skipgram(&docs, &cfg)?;
    println!("vocabulary {} words, dim {}", emb.vocab().len(), emb.dim());
    for (a, b) in [("gato", "cachorro"), ("gato", "imposto"), ("declaracao", "imposto")] {
        println!("cosine({a}, {b}) = {:.3}", emb.cosine(a, b).unwrap_or(f64::NAN));
    }

    let v = doc_vector(&docs[0].tokens, &emb);
    println!("doc {:?} -> first components {:.4?}", docs[0].tokens, &v[..4]);
    println!("unknown words only -> zero vector: {}", doc_vector(&["zzz".to_string()], &emb).iter().all(|&x| x == 0.0));
    Ok(())
}
