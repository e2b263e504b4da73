//! Cross-validated grid search over the four supervised learners on
//! averaged-embedding features, then a saved and reloaded winner.
//!
//! cargo run --release --example grid_search

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udatext::classifiers::{grid_search_cv, Classifier, FeatureMatrix, GridAxis, GridSpec, ModelFile, ModelKind, TrainParams};
use udatext::corpus::TokenizedDoc;
use udatext::features::{doc_vector, train_skipgram, SkipGramConfig};

const TOPICS: [&[&str]; 3] = [
    &["fatura", "boleto", "valor", "cobranca", "pagamento", "juros"],
    &["entrega", "pedido", "atraso", "prazo", "correios", "rastreio"],
    &["senha", "login", "acesso", "conta", "cadastro", "bloqueio"],
];
const FILLER: [&str; 8] = ["o", "a", "de", "que", "meu", "com", "nao", "para"];

fn corpus(r: &mut ChaCha8Rng, per_class: usize) -> Vec<TokenizedDoc> {
    let mut docs = Vec::new();
    for (c, words) in TOPICS.iter().enumerate() {
        for i in 0..per_class {
            let tokens = (0..10)
                .map(|_| {
                    let pool: &[&str] = if r.random::<f64>() < 0.3 { words } else { &FILLER };
                    pool[r.random_range(0..pool.len())].to_string()
                })
                .collect();
            docs.push(TokenizedDoc {
                id: format!("{c}-{i}"),
                tokens,
                label: Some(format!("topic{c}")),
            });
        }
    }
    docs
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let docs = corpus(&mut r, 30);
    let emb = train_skipgram(
        &docs,
        &SkipGramConfig {
            dim: 16,
            window: 4,
            min_count: 1,
            epochs: 10,
            ..Default::default()
        },
    )?;
    let classes: Vec<String> = (0..3).map(|c| format!("topic{c}")).collect();
    let rows = docs.iter().map(|d| doc_vector(&d.tokens, &emb)).collect();
    let labels = docs.iter().map(|d| classes.iter().position(|c| Some(c) == d.label.as_ref()).unwrap()).collect();
    let data = FeatureMatrix::new(rows, labels, classes)?;

    let axis = |name: &str, values: &[f64]| GridAxis {
        name: name.into(),
        values: values.iter().map(|v| Some(*v)).collect(),
    };
    let grids = [
        (ModelKind::LogReg, vec![axis("l2", &[1e-4, 1e-2]), axis("epochs", &[300.0])]),
        (ModelKind::Svm, vec![axis("c", &[1.0, 100.0]), axis("epochs", &[300.0])]),
        (ModelKind::RandomForest, vec![axis("n_trees", &[20.0, 50.0])]),
        (ModelKind::GradBoost, vec![axis("max_depth", &[2.0, 3.0]), axis("n_rounds", &[30.0])]),
    ];
    let dir = tempfile::tempdir()?;
    for (kind, axes) in grids {
        let spec = GridSpec { axes, folds: 5, seed: 1 };
        let result = grid_search_cv(&TrainParams::default_for(kind), &data, &spec)?;
        for row in &result.rows {
            println!("{kind:<6} {:?}: mean {:.3} (std {:.3})", row.config, row.mean, row.std);
        }
        let model = result.best.train(&data)?;
        let path = dir.path().join(format!("{kind}.json"));
        ModelFile::new(&model, result.best.to_json(), None).save(&path)?;
        let reloaded = ModelFile::load(&path)?.model()?;
        println!(
            "{kind:<6} best #{}; training accuracy {:.3}, after reload {:.3}\n",
            result.best_index,
            model.accuracy(&data)?,
            reloaded.accuracy(&data)?
        );
    }
    Ok(())
}
