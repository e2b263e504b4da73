//! Train a small model with an embedding featurizer, save it, and answer
//! prediction requests over HTTP.
//!
//! cargo run --example serve            # one request against an ephemeral port
//! cargo run --example serve -- --listen 127.0.0.1:8080

use std::sync::Arc;

use udatext::classifiers::{train_logreg, FeatureMatrix, Featurizer, LogRegParams, Model, ModelFile};
use udatext::cli::{router, Predictor};
use udatext::corpus::TokenizedDoc;
use udatext::features::{doc_vector, train_skipgram, write_embeddings, SkipGramConfig};
use udatext::io::sha256_file;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topics = [
        ("billing", "a fatura veio com valor errado no boleto"),
        ("delivery", "o pedido atrasou e a entrega nao chegou"),
        ("account", "esqueci a senha e perdi o acesso a conta"),
    ];
    let docs: Vec<TokenizedDoc> = (0..60)
        .map(|i| {
            let (label, text) = topics[i % 3];
            TokenizedDoc::from_text(format!("d{i}"), text, Some(label.into()))
        })
        .collect();

    let dir = tempfile::tempdir()?;
    let emb_path = dir.path().join("embeddings.txt");
    let emb = train_skipgram(
        &docs,
        &SkipGramConfig {
            dim: 16,
            window: 3,
            min_count: 1,
            epochs: 5,
            ..Default::default()
        },
    )?;
    write_embeddings(&emb_path, &emb)?;

    let classes: Vec<String> = topics.iter().map(|(l, _)| l.to_string()).collect();
    let rows = docs.iter().map(|d| doc_vector(&d.tokens, &emb)).collect();
    let labels = (0..docs.len()).map(|i| i % 3).collect();
    let data = FeatureMatrix::new(rows, labels, classes)?;
    let params = LogRegParams {
        epochs: 50,
        ..Default::default()
    };
    let model = Model::Linear(train_logreg(&data, &params)?);
    let model_path = dir.path().join("model.json");
    let featurizer = Featurizer::Embeddings {
        path: emb_path.display().to_string(),
        sha256: sha256_file(&emb_path)?,
    };
    ModelFile::new(&model, serde_json::to_value(&params)?, Some(featurizer)).save(&model_path)?;

    let predictor = Arc::new(Predictor::load(&model_path)?);
    let listen = std::env::args().skip_while(|a| a != "--listen").nth(1);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen.as_deref().unwrap_or("127.0.0.1:0")).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}  (POST /predict, GET /healthz)");
        if listen.is_some() {
            axum::serve(listener, router(predictor)).await?;
            return Ok::<_, Box<dyn std::error::Error>>(());
        }
        tokio::spawn(async move { axum::serve(listener, router(predictor)).await });
        let body = r#"{"text": "minha fatura veio errada", "k": 2}"#;
        let answer = tokio::task::spawn_blocking(move || {
            ureq::post(format!("http://{addr}/predict"))
                .header("content-type", "application/json")
                .send(body)
                .and_then(|mut r| r.body_mut().read_to_string())
        })
        .await??;
        println!("POST /predict {body}\n-> {answer}");
        Ok(())
    })
}
