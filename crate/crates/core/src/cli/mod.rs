//! Command-line front end.
//!
//! Every batch subcommand reads its inputs, computes all outputs in memory,
//! writes them atomically and then records a run manifest next to the main
//! artifact. A JSON config file (`--config`) supplies default flag values per
//! subcommand; flags given on the command line win.

mod commands;
mod manifest;
mod serve;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::classifiers::ModelKind;
use crate::error::Error;
use crate::features::LayerStrategy;
use crate::uda::TsaSchedule;

pub use commands::{load_feature_records, FeatureRecord};
pub use manifest::{FileDigest, RunManifest};
pub use serve::{router, serve, Prediction, PredictRequest, PredictResponse, Predictor};

/// Exit status for malformed command lines.
pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "udatext", version, about = "Few-label text classification pipeline", args_override_self = true)]
pub struct Cli {
    /// JSON file with default flag values: {"seed": n, "<subcommand>": {"<flag>": value}}
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Normalize and tokenize a raw JSONL dataset
    Preprocess(PreprocessArgs),
    /// Draw a class-balanced train/valid/test split
    Split(SplitArgs),
    /// Train skip-gram word embeddings
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Compute the document-frequency table
    Tfidf(TfidfArgs),
    /// Create one synthetic document per input document
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Turn documents into dense feature vectors
    #[command(subcommand)]
    Featurize(FeaturizeCommand),
    /// Train a supervised classifier, optionally with grid search
    Train(TrainArgs),
    /// Train softmax regression with consistency training on unlabeled pairs
    TrainUda(TrainUdaArgs),
    /// Score a model on labeled features
    Evaluate(EvaluateArgs),
    /// Compare per-class model accuracy with a human audit
    ReportCompare(ReportCompareArgs),
    /// Rank the classes for a piece of text
    Predict(PredictArgs),
    /// Serve predictions over HTTP
    Serve(ServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Fail on records without a label
    #[arg(long)]
    pub require_labels: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving train.jsonl, valid.jsonl and test.jsonl
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Documents per class in each split
    #[arg(long, default_value_t = 70)]
    pub train: usize,
    #[arg(long, default_value_t = 30)]
    pub valid: usize,
    #[arg(long, default_value_t = 30)]
    pub test: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainEmbeddingsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 600)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TfidfArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentCommand {
    /// Replace uninformative words by other uninformative words
    TfidfReplace(TfidfReplaceArgs),
    /// Translate to a pivot language and back
    BackTranslate(BackTranslateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentOutput {
    #[arg(long)]
    pub input: PathBuf,
    /// Originals followed by their augmentations
    #[arg(long)]
    pub output: PathBuf,
    /// Pairs file joining each original id to its augmentation id
    #[arg(long)]
    pub pairs: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TfidfReplaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: AugmentOutput,
    /// Precomputed table; computed from the input when omitted
    #[arg(long)]
    pub tfidf: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub pool_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BackTranslateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: AugmentOutput,
    #[arg(long, default_value = "pt")]
    pub source: String,
    #[arg(long, default_value = "en")]
    pub pivot: String,
    /// Dictionary translator (JSON {"source", "forward", "backward"}) instead of HTTP
    #[arg(long, value_name = "FILE")]
    pub mock_map: Option<PathBuf>,
    /// Translator URL; defaults to $TRANSLATOR_ENDPOINT
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturizeCommand {
    /// Average the word vectors of each document
    Embeddings(FeaturizeEmbeddingsArgs),
    /// Select precomputed transformer layers
    Layers(FeaturizeLayersArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeEmbeddingsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeLayersArgs {
    /// Layer-features JSONL
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = LayerStrategy::Last)]
    pub strategy: LayerStrategy,
    /// Dataset whose labels are attached by id
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Labeled features JSONL
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value_t = ModelKind::LogReg)]
    pub model: ModelKind,
    #[arg(long)]
    pub output: PathBuf,
    /// Hyperparameter override, e.g. --set l2=0.01 or --set max_depth=null
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Run the default grid search before the final fit
    #[arg(long)]
    pub grid: bool,
    /// Grid specification JSON (implies --grid)
    #[arg(long, value_name = "FILE")]
    pub grid_file: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Where to write the grid-search table
    #[arg(long)]
    pub grid_report: Option<PathBuf>,
    /// Embedding file the features came from; enables prediction on raw text
    #[arg(long, conflicts_with = "layer_strategy")]
    pub embeddings: Option<PathBuf>,
    /// Layer strategy the features came from
    #[arg(long)]
    pub layer_strategy: Option<LayerStrategy>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainUdaArgs {
    #[arg(long)]
    pub labeled: PathBuf,
    /// Features of the unlabeled originals and of their augmentations
    #[arg(long)]
    pub unlabeled: PathBuf,
    /// Pairs file written by `augment`
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = TsaSchedule::Log)]
    pub tsa: TsaSchedule,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.4)]
    pub temp: f64,
    #[arg(long, default_value_t = 0.0)]
    pub conf: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub sup_batch: usize,
    #[arg(long, default_value_t = 96)]
    pub unsup_batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long, conflicts_with = "layer_strategy")]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub layer_strategy: Option<LayerStrategy>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled features JSONL
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 5])]
    pub topk: Vec<usize>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the top-ranked class of every document
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportCompareArgs {
    /// Report written by `evaluate`
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub audit: PathBuf,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub text: String,
    #[arg(short, long, default_value_t = 3)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

/// Failure of a CLI invocation.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) => e.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

/// Parse `args` (including the program name) and run the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn config_path(args: &[OsString]) -> Option<(usize, usize, PathBuf)> {
    for (i, a) in args.iter().enumerate().skip(1) {
        let s = a.to_string_lossy();
        if s == "--config" {
            return args.get(i + 1).map(|p| (i, 2, PathBuf::from(p)));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some((i, 1, PathBuf::from(p)));
        }
    }
    None
}

fn flag_value(value: &serde_json::Value) -> Option<String> {
    match value {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Null => Some("null".into()),
        serde_json::Value::Array(items) => Some(items.iter().filter_map(flag_value).collect::<Vec<_>>().join(",")),
        _ => None,
    }
}

/// Splice the config file's values for the chosen subcommand in front of the
/// user's own flags, so the user's (later) occurrences take precedence.
fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some((at, width, path)) = config_path(&args) else {
        return Ok(args);
    };
    args.drain(at..at + width);
    let text = crate::io::read_to_string(&path)?;
    let config: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse {
            context: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;

    let mut path_len = 0;
    let mut cmd = Cli::command();
    let mut section_names = Vec::new();
    for a in args.iter().skip(1) {
        let name = a.to_string_lossy().to_string();
        match cmd.find_subcommand(&name) {
            Some(sub) => {
                section_names.push(name);
                cmd = sub.clone();
                path_len += 1;
            }
            None => break,
        }
    }
    if path_len == 0 {
        return Ok(args);
    }
    let flags: Vec<String> = cmd
        .get_arguments()
        .filter_map(|a| a.get_long().map(String::from))
        .collect();
    let section_key = section_names.join(" ");
    let mut extra: Vec<OsString> = Vec::new();
    let mut push = |key: &str, value: &serde_json::Value| -> Result<(), CliError> {
        let flag = key.replace('_', "-");
        if !flags.contains(&flag) {
            return Err(CliError::Usage(format!("config key {key:?} is not a flag of `{section_key}`")));
        }
        match value {
            serde_json::Value::Bool(true) => extra.push(format!("--{flag}").into()),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Array(items) if flag == "set" => {
                for item in items.iter().filter_map(flag_value) {
                    extra.push(format!("--{flag}={item}").into());
                }
            }
            v => {
                let v = flag_value(v).ok_or_else(|| CliError::Usage(format!("config value for {key:?} is not a scalar")))?;
                extra.push(format!("--{flag}={v}").into());
            }
        }
        Ok(())
    };
    if let Some(seed) = config.get("seed") {
        if flags.iter().any(|f| f == "seed") {
            push("seed", seed)?;
        }
    }
    if let Some(section) = config.get(&section_key) {
        let section = section
            .as_object()
            .ok_or_else(|| CliError::Usage(format!("config section {section_key:?} must be an object")))?;
        for (k, v) in section {
            push(k, v)?;
        }
    }
    let rest = args.split_off(1 + path_len);
    args.extend(extra);
    args.extend(rest);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_values_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"seed": 9, "split": {"train": 5, "out_dir": "o"}}"#).unwrap();
        let args: Vec<OsString> = ["udatext", "--config", cfg.to_str().unwrap(), "split", "--input", "x", "--train", "7"]
            .iter()
            .map(OsString::from)
            .collect();
        let merged = apply_config(args).unwrap();
        let cli = Cli::try_parse_from(merged).unwrap();
        match cli.command {
            Command::Split(a) => {
                assert_eq!((a.train, a.seed), (7, 9));
                assert_eq!(a.out_dir, PathBuf::from("o"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_config_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"tfidf": {"bogus": 1}}"#).unwrap();
        let args: Vec<OsString> = ["udatext", "tfidf", "--config", cfg.to_str().unwrap()]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(apply_config(args).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
