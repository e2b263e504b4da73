mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use common::*;
use udatext::cli::{self, FeatureRecord, PredictResponse, Predictor, RunManifest};
use udatext::classifiers::{Classifier, ModelFile};
use udatext::eval::{EvalReport, PredRanking};

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("udatext").chain(args.iter().copied()))
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

/// Raw text corpus: 4 classes, 14 documents each, plus 20 unlabeled ones.
fn write_raw(dir: &Path) -> PathBuf {
    let corpus = SyntheticCorpus {
        k: 4,
        vocab: 80,
        doc_len: 12,
        signal: 0.7,
    };
    let mut r = rng(1);
    let mut lines = Vec::new();
    for d in corpus.docs(&mut r, "doc", 14, true) {
        let text = format!("Ticket {}: {} see https://portal.example.org/x", d.id, d.tokens.join(" "));
        lines.push(serde_json::json!({ "id": d.id, "text": text, "label": d.label }));
    }
    for d in corpus.docs(&mut r, "pool", 5, false) {
        lines.push(serde_json::json!({ "id": d.id, "text": d.tokens.join(" "), "label": null }));
    }
    let path = dir.join("raw.jsonl");
    let body: String = lines.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, body).unwrap();
    path
}

struct Pipeline {
    dir: tempfile::TempDir,
}

impl Pipeline {
    fn path(&self, name: &str) -> String {
        p(self.dir.path(), name)
    }

    /// preprocess -> split -> embeddings -> featurize -> train logreg.
    fn build() -> Pipeline {
        let dir = tempfile::tempdir().unwrap();
        let pl = Pipeline { dir };
        let raw = write_raw(pl.dir.path());
        let s = |n: &str| pl.path(n);
        assert_eq!(run(&["preprocess", "--input", raw.to_str().unwrap(), "--output", &s("docs.jsonl")]), 0);
        assert_eq!(
            run(&["split", "--input", &s("docs.jsonl"), "--out-dir", &s("split"), "--train", "8", "--valid", "2", "--test", "4", "--seed", "3"]),
            0
        );
        assert_eq!(
            run(&[
                "train-embeddings", "--input", &s("docs.jsonl"), "--output", &s("emb.txt"), "--dim", "12", "--window", "3",
                "--min-count", "1", "--epochs", "3",
            ]),
            0
        );
        for part in ["train", "test"] {
            assert_eq!(
                run(&[
                    "featurize", "embeddings", "--input", &s(&format!("split/{part}.jsonl")), "--embeddings", &s("emb.txt"),
                    "--output", &s(&format!("{part}.feat.jsonl")),
                ]),
                0
            );
        }
        assert_eq!(
            run(&[
                "train", "--train", &s("train.feat.jsonl"), "--model", "logreg", "--output", &s("model.json"), "--embeddings",
                &s("emb.txt"), "--set", "epochs=30",
            ]),
            0
        );
        pl
    }
}

#[test]
fn pipeline_produces_every_artifact() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);

    for part in ["train", "valid", "test"] {
        assert!(Path::new(&s(&format!("split/{part}.jsonl"))).exists());
    }
    let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(s("split/manifest.json")).unwrap()).unwrap();
    assert_eq!((manifest.command.as_str(), manifest.seed, manifest.outputs.len()), ("split", Some(3), 3));
    let docs = std::fs::read_to_string(s("docs.jsonl")).unwrap();
    assert!(docs.contains("\"URL\"") && !docs.contains("https"));

    assert_eq!(run(&["evaluate", "--model", &s("model.json"), "--test", &s("test.feat.jsonl"), "--topk", "1,3,5", "--output", &s("report.json")]), 0);
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(s("report.json")).unwrap()).unwrap();
    assert_eq!(report.acc_at.keys().collect::<Vec<_>>(), ["1", "3", "5"]);
    assert!(report.acc_at["1"] <= report.acc_at["3"] && report.acc_at["3"] <= report.acc_at["5"]);
    assert_eq!(report.per_class.len(), 4);

    let audit = "class,human_accuracy,audited_count\nc0,0.5,10\nc1,0.6,10\nc2,0.99,10\nc3,0.1,10\n";
    std::fs::write(s("audit.csv"), audit).unwrap();
    assert_eq!(
        run(&["report-compare", "--report", &s("report.json"), "--audit", &s("audit.csv"), "--csv", &s("cmp.csv"), "--svg", &s("cmp.svg")]),
        0
    );
    assert!(std::fs::read_to_string(s("cmp.csv")).unwrap().starts_with("class,human_acc,model_acc,delta\n"));
    assert!(std::fs::read_to_string(s("cmp.svg")).unwrap().contains("viewBox=\"0 0 800 120\""));

    std::fs::write(s("bad_audit.csv"), "class,human_accuracy,audited_count\nc0,0.5,10\n").unwrap();
    assert_eq!(
        run(&["report-compare", "--report", &s("report.json"), "--audit", &s("bad_audit.csv"), "--csv", &s("x.csv"), "--svg", &s("x.svg")]),
        2
    );
    assert!(!Path::new(&s("x.csv")).exists());
}

#[test]
fn augmentation_and_uda_from_the_command_line() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);
    assert_eq!(run(&["tfidf", "--input", &s("docs.jsonl"), "--output", &s("tfidf.json")]), 0);
    assert_eq!(
        run(&[
            "augment", "tfidf-replace", "--input", &s("docs.jsonl"), "--tfidf", &s("tfidf.json"), "--output", &s("aug.jsonl"),
            "--pairs", &s("pairs.jsonl"), "--p-max", "0.5",
        ]),
        0
    );
    let aug = std::fs::read_to_string(s("aug.jsonl")).unwrap();
    let docs = std::fs::read_to_string(s("docs.jsonl")).unwrap();
    assert_eq!(aug.lines().count(), 2 * docs.lines().count());
    assert_eq!(std::fs::read_to_string(s("pairs.jsonl")).unwrap().lines().count(), docs.lines().count());

    assert_eq!(
        run(&["featurize", "embeddings", "--input", &s("aug.jsonl"), "--embeddings", &s("emb.txt"), "--output", &s("aug.feat.jsonl")]),
        0
    );
    assert_eq!(
        run(&[
            "train-uda", "--labeled", &s("train.feat.jsonl"), "--unlabeled", &s("aug.feat.jsonl"), "--pairs", &s("pairs.jsonl"),
            "--output", &s("uda.json"), "--tsa", "log", "--steps", "60", "--embeddings", &s("emb.txt"),
        ]),
        0
    );
    let file = ModelFile::load(Path::new(&s("uda.json"))).unwrap();
    assert_eq!(file.params["uda"]["schedule"], "log");

    std::fs::write(s("dict.json"), r#"{"source": "pt", "forward": {"wab": "zz"}, "backward": {"zz": "wac"}}"#).unwrap();
    assert_eq!(
        run(&[
            "augment", "back-translate", "--input", &s("docs.jsonl"), "--output", &s("bt.jsonl"), "--pairs", &s("bt_pairs.jsonl"),
            "--mock-map", &s("dict.json"),
        ]),
        0
    );
    let bt = std::fs::read_to_string(s("bt.jsonl")).unwrap();
    assert!(bt.contains("#bt"));
}

#[test]
fn reruns_are_byte_identical() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);
    let first = std::fs::read(s("model.json")).unwrap();
    let first_manifest = std::fs::read(s("model.json.manifest.json")).unwrap();
    assert_eq!(
        run(&[
            "train", "--train", &s("train.feat.jsonl"), "--model", "logreg", "--output", &s("model.json"), "--embeddings",
            &s("emb.txt"), "--set", "epochs=30",
        ]),
        0
    );
    assert_eq!(std::fs::read(s("model.json")).unwrap(), first);
    assert_eq!(std::fs::read(s("model.json.manifest.json")).unwrap(), first_manifest);

    for model in ["rf", "gb"] {
        let out = s(&format!("{model}.json"));
        let args = ["train", "--train", &s("train.feat.jsonl"), "--model", model, "--output", &out, "--grid", "--folds", "2"];
        assert_eq!(run(&args), 0);
        let a = std::fs::read(&out).unwrap();
        assert_eq!(run(&args), 0);
        assert_eq!(std::fs::read(&out).unwrap(), a);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);
    std::fs::write(s("cfg.json"), r#"{"seed": 5, "train": {"model": "svm", "set": ["epochs=3"]}}"#).unwrap();
    assert_eq!(run(&["--config", &s("cfg.json"), "train", "--train", &s("train.feat.jsonl"), "--output", &s("a.json")]), 0);
    let a = ModelFile::load(Path::new(&s("a.json"))).unwrap();
    assert_eq!(a.kind.to_string(), "svm");
    assert_eq!((a.params["seed"].as_u64(), a.params["epochs"].as_u64()), (Some(5), Some(3)));
    assert_eq!(
        run(&["--config", &s("cfg.json"), "train", "--train", &s("train.feat.jsonl"), "--output", &s("b.json"), "--model", "logreg", "--seed", "8"]),
        0
    );
    let b = ModelFile::load(Path::new(&s("b.json"))).unwrap();
    assert_eq!((b.kind.to_string().as_str(), b.params["seed"].as_u64()), ("logreg", Some(8)));
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let s = |n: &str| p(dir.path(), n);
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["train", "--bogus"]), 1);
    assert_eq!(run(&["train-uda", "--tsa", "cubic"]), 1);
    assert_eq!(run(&["preprocess", "--input", &s("missing.jsonl"), "--output", &s("out.jsonl")]), 2);
    assert!(!Path::new(&s("out.jsonl")).exists());

    let huge: Vec<FeatureRecord> = (0..8)
        .map(|i| FeatureRecord {
            id: format!("r{i}"),
            label: Some(format!("c{}", i % 2)),
            features: vec![1e150 * (i as f64 + 1.0), -1e150],
        })
        .collect();
    std::fs::write(s("huge.jsonl"), udatext::io::to_jsonl(&huge).unwrap()).unwrap();
    assert_eq!(
        run(&["train", "--train", &s("huge.jsonl"), "--output", &s("m.json"), "--set", "lr=1e300", "--set", "epochs=3"]),
        3
    );
    assert!(!Path::new(&s("m.json")).exists());
}

#[test]
fn prediction_needs_the_recorded_featurizer() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);
    assert_eq!(run(&["predict", "--model", &s("model.json"), "--text", "wab wac", "-k", "4"]), 0);
    assert_eq!(
        run(&["train", "--train", &s("train.feat.jsonl"), "--output", &s("bare.json"), "--set", "epochs=1"]),
        0
    );
    assert_eq!(run(&["predict", "--model", &s("bare.json"), "--text", "wab"]), 2);
    std::fs::remove_file(s("emb.txt")).unwrap();
    assert!(matches!(Predictor::load(Path::new(&s("model.json"))), Err(udatext::Error::Featurizer(_))));
}

#[test]
fn predict_agrees_with_evaluate() {
    let pl = Pipeline::build();
    let s = |n: &str| pl.path(n);
    let predictor = Predictor::load(Path::new(&s("model.json"))).unwrap();
    let test = udatext::corpus::load_dataset(Path::new(&s("split/test.jsonl")), true).unwrap();
    let feats = cli::load_feature_records(Path::new(&s("test.feat.jsonl"))).unwrap();
    let model = predictor.model();
    for (doc, rec) in test.docs.iter().zip(&feats) {
        assert_eq!(doc.id, rec.id);
        let from_features = PredRanking::from_scores(&rec.id, model.classes(), &model.class_scores(&rec.features).unwrap()).unwrap();
        let from_text = predictor.predict(&doc.detokenize(), 4).unwrap();
        assert_eq!(from_text.len(), 4);
        assert_eq!(from_text[0].label, from_features.ranked[0].0);
        let total: f64 = from_text.iter().map(|p| p.score).sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }
}

fn start_server(predictor: Predictor) -> (String, tokio::runtime::Runtime) {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    let app = cli::router(Arc::new(predictor));
    rt.spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), rt)
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn post(agent: &ureq::Agent, url: &str, body: &str) -> (u16, String) {
    let mut resp = agent
        .post(url)
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
}

#[test]
fn server_contract() {
    let pl = Pipeline::build();
    let predictor = Predictor::load(Path::new(&pl.path("model.json"))).unwrap();
    let (base, _rt) = start_server(predictor);
    let agent = agent();

    let mut health = agent.get(format!("{base}/healthz")).call().unwrap();
    assert_eq!(health.status().as_u16(), 200);
    assert_eq!(health.body_mut().read_to_string().unwrap(), r#"{"status":"ok"}"#);

    let url = format!("{base}/predict");
    let (status, body) = post(&agent, &url, r#"{"text": "wab waf wak"}"#);
    assert_eq!(status, 200);
    let resp: PredictResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.predictions.len(), 3);
    assert!(resp.predictions.windows(2).all(|w| w[0].score >= w[1].score));

    let (status, body) = post(&agent, &url, r#"{"text": "wab", "k": 10}"#);
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<PredictResponse>(&body).unwrap().predictions.len(), 4);

    for bad in [r#"{"text": ""}"#, r#"{"text": "   "}"#, "{not json", r#"{"k": 2}"#, r#"{"text": "a", "k": 0}"#] {
        let (status, body) = post(&agent, &url, bad);
        assert_eq!(status, 400, "{bad}");
        assert!(body.contains("error"));
    }

    let expected = post(&agent, &url, r#"{"text": "wau wav waw"}"#).1;
    let bodies: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..100)
            .map(|_| {
                let (agent, url) = (agent.clone(), url.clone());
                scope.spawn(move || post(&agent, &url, r#"{"text": "wau wav waw"}"#))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).map(|(s, b)| {
            assert_eq!(s, 200);
            b
        }).collect()
    });
    assert!(bodies.iter().all(|b| *b == expected));
}
