use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Featurizer, Model, ModelFile};
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::eval::PredRanking;
use crate::features::{doc_vector, load_embeddings, EmbeddingMatrix};
use crate::io;

/// A loaded model together with what it needs to featurize raw text.
#[derive(Debug)]
pub struct Predictor {
    model: Model,
    embeddings: Option<EmbeddingMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub score: f64,
}

fn resolve(recorded: &str, model_path: &Path) -> PathBuf {
    let p = PathBuf::from(recorded);
    if p.is_absolute() || p.exists() {
        return p;
    }
    match model_path.parent() {
        Some(dir) => dir.join(&p),
        None => p,
    }
}

impl Predictor {
    pub fn new(model: Model, embeddings: Option<EmbeddingMatrix>) -> Result<Self> {
        if let Some(e) = &embeddings {
            if e.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: e.dim(),
                });
            }
        }
        Ok(Predictor { model, embeddings })
    }

    /// Load a model file and the embedding file it records. A recorded
    /// relative path is tried as given, then next to the model file.
    pub fn load(path: &Path) -> Result<Self> {
        let file = ModelFile::load(path)?;
        let model = file.model()?;
        let embeddings = match &file.featurizer {
            Some(Featurizer::Embeddings { path: emb, sha256 }) => {
                let emb_path = resolve(emb, path);
                if !emb_path.exists() {
                    return Err(Error::Featurizer(format!("embedding file {} is missing", emb_path.display())));
                }
                let actual = io::sha256_file(&emb_path)?;
                if &actual != sha256 {
                    return Err(Error::Featurizer(format!(
                        "embedding file {} has changed since training",
                        emb_path.display()
                    )));
                }
                Some(load_embeddings(&emb_path)?)
            }
            _ => None,
        };
        Predictor::new(model, embeddings)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn featurize(&self, text: &str) -> Result<Vec<f64>> {
        let emb = self.embeddings.as_ref().ok_or_else(|| {
            Error::Featurizer("the model records no embedding file, so raw text cannot be featurized".into())
        })?;
        Ok(doc_vector(&TokenizedDoc::from_text("", text, None).tokens, emb))
    }

    /// All classes of the model ranked for `text`.
    pub fn rank(&self, text: &str) -> Result<PredRanking> {
        let x = self.featurize(text)?;
        PredRanking::from_scores("", self.model.classes(), &self.model.class_scores(&x)?)
    }

    pub fn predict(&self, text: &str, k: usize) -> Result<Vec<Prediction>> {
        Ok(self
            .rank(text)?
            .top(k)
            .iter()
            .map(|(label, score)| Prediction {
                label: label.clone(),
                score: *score,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub text: String,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub predictions: Vec<Prediction>,
}

const DEFAULT_K: usize = 3;

fn bad_request(message: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": message }))).into_response()
}

async fn predict(State(p): State<Arc<Predictor>>, body: Bytes) -> Response {
    let req: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(format!("malformed request: {e}")),
    };
    if req.text.trim().is_empty() {
        return bad_request("text is empty".into());
    }
    let k = req.k.unwrap_or(DEFAULT_K);
    if k == 0 {
        return bad_request("k must be at least 1".into());
    }
    match p.predict(&req.text, k) {
        Ok(predictions) => Json(PredictResponse { predictions }).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": e.to_string() }))).into_response(),
    }
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// `POST /predict` and `GET /healthz` over a shared, read-only predictor.
pub fn router(predictor: Arc<Predictor>) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/healthz", get(healthz))
        .with_state(predictor)
}

/// Bind `addr` and serve until the process is stopped.
pub async fn serve(predictor: Arc<Predictor>, addr: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Invalid(format!("cannot bind {addr}: {e}")))?;
    eprintln!("listening on {}", listener.local_addr().map_or(addr.to_string(), |a| a.to_string()));
    axum::serve(listener, router(predictor))
        .await
        .map_err(|e| Error::Invalid(format!("server error: {e}")))
}
