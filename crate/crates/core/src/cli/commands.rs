use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::manifest::RunManifest;
use super::serve::{serve, Predictor, PredictResponse};
use super::*;
use crate::augment::{
    augment_dataset, augmented_pairs, AugmentConfig, Augmentation, AugmentedPair, HttpTranslator, MockTranslator,
    TfIdfReplacer, Translator,
};
use crate::classifiers::{
    grid_search_cv, Classifier, FeatureMatrix, Featurizer, GridSpec, Model, ModelFile, ParamValue, TrainParams,
};
use crate::corpus::{load_dataset, stratified_split, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{comparison_report, model_class_accuracy, rows_to_csv, rows_to_svg, summary_line, EvalReport, HumanAudit, PredRanking};
use crate::features::{
    build_vocab, compute_tfidf, doc_vector, load_embeddings, load_layer_features, select_layers, train_skipgram,
    write_embeddings, SkipGramConfig, TfIdfTable,
};
use crate::io;
use crate::uda::{train_uda, UdaConfig, UnlabeledPair};

/// One line of a features file: `{"id", "label", "features"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    pub features: Vec<f64>,
}

pub fn load_feature_records(path: &Path) -> Result<Vec<FeatureRecord>> {
    let records: Vec<FeatureRecord> = io::read_jsonl(path)?.into_iter().map(|(_, r)| r).collect();
    let mut seen = std::collections::HashSet::new();
    let dim = records.first().map_or(0, |r| r.features.len());
    for r in &records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
        if r.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.features.len(),
            });
        }
    }
    Ok(records)
}

/// Labeled rows as a matrix over `classes`, or over the sorted set of
/// observed labels when `classes` is `None`.
fn to_matrix(records: &[FeatureRecord], classes: Option<&[String]>) -> Result<FeatureMatrix> {
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => records
            .iter()
            .filter_map(|r| r.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for r in records {
        let label = r.label.as_deref().ok_or_else(|| Error::MissingLabel {
            line: 0,
            id: r.id.clone(),
        })?;
        labels.push(*index.get(label).ok_or_else(|| Error::UnknownClass(label.to_string()))?);
        rows.push(r.features.clone());
    }
    FeatureMatrix::new(rows, labels, classes)
}

fn args_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn featurizer(embeddings: &Option<std::path::PathBuf>, strategy: Option<LayerStrategy>) -> Result<Option<Featurizer>> {
    Ok(match (embeddings, strategy) {
        (Some(p), _) => Some(Featurizer::Embeddings {
            path: p.display().to_string(),
            sha256: io::sha256_file(p)?,
        }),
        (None, Some(strategy)) => Some(Featurizer::Layers { strategy }),
        (None, None) => None,
    })
}

pub(super) fn execute(command: &Command) -> std::result::Result<(), CliError> {
    match command {
        Command::Preprocess(a) => preprocess(a)?,
        Command::Split(a) => split(a)?,
        Command::TrainEmbeddings(a) => train_embeddings(a)?,
        Command::Tfidf(a) => tfidf(a)?,
        Command::Augment(AugmentCommand::TfidfReplace(a)) => augment_tfidf(a)?,
        Command::Augment(AugmentCommand::BackTranslate(a)) => augment_back_translate(a)?,
        Command::Featurize(FeaturizeCommand::Embeddings(a)) => featurize_embeddings(a)?,
        Command::Featurize(FeaturizeCommand::Layers(a)) => featurize_layers(a)?,
        Command::Train(a) => train(a)?,
        Command::TrainUda(a) => train_uda_cmd(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::ReportCompare(a) => report_compare(a)?,
        Command::Predict(a) => predict(a)?,
        Command::Serve(a) => serve_cmd(a)?,
    }
    Ok(())
}

fn preprocess(a: &PreprocessArgs) -> Result<()> {
    let data = load_dataset(&a.input, a.require_labels)?;
    data.write_jsonl(&a.output)?;
    let mut m = RunManifest::new("preprocess", None, args_json(a));
    m.input(&a.input)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    eprintln!("{} documents, {} classes", data.len(), data.classes.len());
    Ok(())
}

fn split(a: &SplitArgs) -> Result<()> {
    let data = load_dataset(&a.input, false)?;
    let spec = SplitSpec {
        train: a.train,
        valid: a.valid,
        test: a.test,
        seed: a.seed,
    };
    let parts = stratified_split(&data, &spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut m = RunManifest::new("split", Some(a.seed), args_json(a));
    m.input(&a.input)?;
    for (name, part) in [("train", &parts.0), ("valid", &parts.1), ("test", &parts.2)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        part.write_jsonl(&path)?;
        m.output(&path)?;
        eprintln!("{name}: {} documents", part.len());
    }
    m.write(&a.out_dir)?;
    Ok(())
}

fn train_embeddings(a: &TrainEmbeddingsArgs) -> Result<()> {
    let data = load_dataset(&a.input, false)?;
    let cfg = SkipGramConfig {
        dim: a.dim,
        window: a.window,
        min_count: a.min_count,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: a.seed,
    };
    let emb = train_skipgram(&data.docs, &cfg)?;
    write_embeddings(&a.output, &emb)?;
    let mut m = RunManifest::new("train-embeddings", Some(a.seed), args_json(a));
    m.input(&a.input)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    eprintln!("{} words x {} dimensions", emb.vocab().len(), emb.dim());
    Ok(())
}

fn tfidf(a: &TfidfArgs) -> Result<()> {
    let data = load_dataset(&a.input, false)?;
    let table = compute_tfidf(&data.docs)?;
    let mut text = serde_json::to_string_pretty(&table).expect("table serializes");
    text.push('\n');
    io::write_atomic(&a.output, text.as_bytes())?;
    let mut m = RunManifest::new("tfidf", None, args_json(a));
    m.input(&a.input)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    Ok(())
}

fn write_augmented(
    command: &str,
    io_args: &AugmentOutput,
    extra_inputs: &[&Path],
    seed: Option<u64>,
    args: serde_json::Value,
    strategy: &Augmentation<'_>,
    data: &crate::corpus::Dataset,
) -> Result<()> {
    let out = augment_dataset(data, strategy)?;
    let pairs: Vec<AugmentedPair> = augmented_pairs(&out);
    let pairs_bytes = io::to_jsonl(&pairs)?;
    out.write_jsonl(&io_args.output)?;
    io::write_atomic(&io_args.pairs, &pairs_bytes)?;
    let mut m = RunManifest::new(command, seed, args);
    m.input(&io_args.input)?;
    for p in extra_inputs {
        m.input(p)?;
    }
    m.output(&io_args.output)?;
    m.output(&io_args.pairs)?;
    m.write(&io_args.output)?;
    eprintln!("{} originals, {} augmented", data.len(), out.len() - data.len());
    Ok(())
}

fn augment_tfidf(a: &TfidfReplaceArgs) -> Result<()> {
    let data = load_dataset(&a.io.input, false)?;
    let table: TfIdfTable = match &a.tfidf {
        Some(p) => serde_json::from_str(&io::read_to_string(p)?)
            .map_err(|e| Error::parse(p.display().to_string(), e.line(), e))?,
        None => compute_tfidf(&data.docs)?,
    };
    let vocab = build_vocab(&data.docs, 1)?;
    let cfg = AugmentConfig {
        p_max: a.p_max,
        pool_fraction: a.pool_fraction,
        seed: a.seed,
    };
    let replacer = TfIdfReplacer::new(&table, &vocab, &cfg)?;
    let extra: Vec<&Path> = a.tfidf.iter().map(|p| p.as_path()).collect();
    write_augmented(
        "augment tfidf-replace",
        &a.io,
        &extra,
        Some(a.seed),
        args_json(a),
        &Augmentation::TfIdf(&replacer),
        &data,
    )
}

fn augment_back_translate(a: &BackTranslateArgs) -> Result<()> {
    let data = load_dataset(&a.io.input, false)?;
    let endpoint = a.endpoint.clone().or_else(|| std::env::var("TRANSLATOR_ENDPOINT").ok());
    let translator: Box<dyn Translator> = match (&a.mock_map, endpoint) {
        (Some(p), _) => Box::new(
            serde_json::from_str::<MockTranslator>(&io::read_to_string(p)?)
                .map_err(|e| Error::parse(p.display().to_string(), e.line(), e))?,
        ),
        (None, Some(url)) => Box::new(HttpTranslator::new(
            url,
            std::env::var("TRANSLATOR_KEY").ok(),
            Duration::from_secs(a.timeout_secs),
        )),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "back translation needs --mock-map, --endpoint or TRANSLATOR_ENDPOINT".into(),
            ))
        }
    };
    let strategy = Augmentation::BackTranslation {
        translator: translator.as_ref(),
        source: &a.source,
        pivot: &a.pivot,
    };
    let extra: Vec<&Path> = a.mock_map.iter().map(|p| p.as_path()).collect();
    write_augmented("augment back-translate", &a.io, &extra, None, args_json(a), &strategy, &data)
}

fn write_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    io::write_atomic(path, &io::to_jsonl(records)?)
}

fn featurize_embeddings(a: &FeaturizeEmbeddingsArgs) -> Result<()> {
    let data = load_dataset(&a.input, false)?;
    let emb = load_embeddings(&a.embeddings)?;
    let records: Vec<FeatureRecord> = data
        .docs
        .iter()
        .map(|d| FeatureRecord {
            id: d.id.clone(),
            label: d.label.clone(),
            features: doc_vector(&d.tokens, &emb),
        })
        .collect();
    write_features(&a.output, &records)?;
    let mut m = RunManifest::new("featurize embeddings", None, args_json(a));
    m.input(&a.input)?;
    m.input(&a.embeddings)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    Ok(())
}

fn featurize_layers(a: &FeaturizeLayersArgs) -> Result<()> {
    let layers = load_layer_features(&a.input)?;
    let labels: HashMap<String, Option<String>> = match &a.labels {
        Some(p) => load_dataset(p, false)?
            .docs
            .into_iter()
            .map(|d| (d.id, d.label))
            .collect(),
        None => HashMap::new(),
    };
    let records = layers
        .iter()
        .map(|l| {
            Ok(FeatureRecord {
                id: l.id.clone(),
                label: labels.get(&l.id).cloned().flatten(),
                features: select_layers(l, a.strategy)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_features(&a.output, &records)?;
    let mut m = RunManifest::new("featurize layers", None, args_json(a));
    m.input(&a.input)?;
    if let Some(p) = &a.labels {
        m.input(p)?;
    }
    m.output(&a.output)?;
    m.write(&a.output)?;
    Ok(())
}

fn parse_setting(s: &str) -> Result<(String, ParamValue)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("--set expects NAME=VALUE, got {s:?}")))?;
    let value = match value {
        "null" | "none" => None,
        v => Some(
            v.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("value of {name} is not a number: {v:?}")))?,
        ),
    };
    Ok((name.to_string(), value))
}

fn train(a: &TrainArgs) -> Result<()> {
    let data = to_matrix(&load_feature_records(&a.train)?, None)?;
    let mut params = TrainParams::default_for(a.model);
    params.set_seed(a.seed);
    for s in &a.set {
        let (name, value) = parse_setting(s)?;
        params.set(&name, value)?;
    }
    let mut m = RunManifest::new("train", Some(a.seed), args_json(a));
    m.input(&a.train)?;
    if a.grid || a.grid_file.is_some() {
        let mut grid = match &a.grid_file {
            Some(p) => {
                m.input(p)?;
                serde_json::from_str(&io::read_to_string(p)?)
                    .map_err(|e| Error::parse(p.display().to_string(), e.line(), e))?
            }
            None => {
                let mut g = GridSpec::default_for(a.model);
                g.folds = a.folds;
                g
            }
        };
        grid.seed = a.seed;
        let result = grid_search_cv(&params, &data, &grid)?;
        for row in &result.rows {
            eprintln!("{:?}: mean {:.4} (std {:.4})", row.config, row.mean, row.std);
        }
        params = result.best.clone();
        if let Some(p) = &a.grid_report {
            let mut text = serde_json::to_string_pretty(&result).expect("grid result serializes");
            text.push('\n');
            io::write_atomic(p, text.as_bytes())?;
            m.output(p)?;
        }
    }
    let model = params.train(&data)?;
    let feat = featurizer(&a.embeddings, a.layer_strategy)?;
    if let Some(p) = &a.embeddings {
        m.input(p)?;
    }
    ModelFile::new(&model, params.to_json(), feat).save(&a.output)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    eprintln!("training accuracy {:.4}", model.accuracy(&data)?);
    Ok(())
}

fn train_uda_cmd(a: &TrainUdaArgs) -> Result<()> {
    let labeled = to_matrix(&load_feature_records(&a.labeled)?, None)?;
    let unlabeled: HashMap<String, Vec<f64>> = load_feature_records(&a.unlabeled)?
        .into_iter()
        .map(|r| (r.id, r.features))
        .collect();
    let lookup = |id: &str| {
        unlabeled
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("pairs file references {id:?}, absent from {}", a.unlabeled.display())))
    };
    let pairs = io::read_jsonl::<AugmentedPair>(&a.pairs)?
        .into_iter()
        .map(|(_, p)| {
            Ok(UnlabeledPair {
                original: lookup(&p.id)?,
                augmented: lookup(&p.aug_id)?,
                id: p.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = UdaConfig {
        schedule: a.tsa,
        total_steps: a.steps,
        lambda: a.lambda,
        temperature: a.temp,
        confidence: a.conf,
        sup_batch: a.sup_batch,
        unsup_batch: a.unsup_batch,
        lr: a.lr,
        l2: a.l2,
        seed: a.seed,
    };
    let model = Model::Linear(train_uda(&labeled, &pairs, &cfg)?);
    let params = serde_json::json!({ "model": "uda", "uda": cfg });
    let mut m = RunManifest::new("train-uda", Some(a.seed), args_json(a));
    for p in [&a.labeled, &a.unlabeled, &a.pairs] {
        m.input(p)?;
    }
    if let Some(p) = &a.embeddings {
        m.input(p)?;
    }
    ModelFile::new(&model, params, featurizer(&a.embeddings, a.layer_strategy)?).save(&a.output)?;
    m.output(&a.output)?;
    m.write(&a.output)?;
    eprintln!("training accuracy {:.4} on {} pairs", model.accuracy(&labeled)?, pairs.len());
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let model = ModelFile::load(&a.model)?.model()?;
    let records = load_feature_records(&a.test)?;
    let mut gold = HashMap::new();
    let mut rankings = Vec::with_capacity(records.len());
    for r in &records {
        let label = r.label.clone().ok_or_else(|| Error::MissingGold(r.id.clone()))?;
        gold.insert(r.id.clone(), label);
        rankings.push(PredRanking::from_scores(&r.id, model.classes(), &model.class_scores(&r.features)?)?);
    }
    let report = EvalReport::build(&rankings, &gold, model.classes(), &a.topk)?;
    io::write_atomic(&a.output, report.to_json().as_bytes())?;
    let mut m = RunManifest::new("evaluate", None, args_json(a));
    m.input(&a.model)?;
    m.input(&a.test)?;
    m.output(&a.output)?;
    if let Some(p) = &a.predictions {
        let lines: Vec<serde_json::Value> = rankings
            .iter()
            .map(|r| serde_json::json!({ "id": r.id, "label": r.ranked[0].0, "score": r.ranked[0].1 }))
            .collect();
        io::write_atomic(p, &io::to_jsonl(&lines)?)?;
        m.output(p)?;
    }
    m.write(&a.output)?;
    let at: Vec<String> = report.acc_at.iter().map(|(k, v)| format!("acc@{k} {v:.4}")).collect();
    eprintln!("accuracy {:.4}, macro-F1 {:.4}, {}", report.accuracy, report.macro_avg.f1, at.join(", "));
    Ok(())
}

fn report_compare(a: &ReportCompareArgs) -> Result<()> {
    let report: EvalReport = serde_json::from_str(&io::read_to_string(&a.report)?)
        .map_err(|e| Error::parse(a.report.display().to_string(), e.line(), e))?;
    let audit = HumanAudit::load(&a.audit)?;
    let rows = comparison_report(&model_class_accuracy(&report.per_class), &audit)?;
    io::write_atomic(&a.csv, rows_to_csv(&rows).as_bytes())?;
    io::write_atomic(&a.svg, rows_to_svg(&rows).as_bytes())?;
    let mut m = RunManifest::new("report-compare", None, args_json(a));
    m.input(&a.report)?;
    m.input(&a.audit)?;
    m.output(&a.csv)?;
    m.output(&a.svg)?;
    m.write(&a.csv)?;
    println!("{}", summary_line(&rows));
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    if a.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let predictor = Predictor::load(&a.model)?;
    let predictions = predictor.predict(&a.text, a.k)?;
    println!(
        "{}",
        serde_json::to_string(&PredictResponse { predictions }).expect("predictions serialize")
    );
    Ok(())
}

fn serve_cmd(a: &ServeArgs) -> Result<()> {
    let predictor = Arc::new(Predictor::load(&a.model)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start runtime: {e}")))?;
    runtime.block_on(serve(predictor, &a.addr))
}
