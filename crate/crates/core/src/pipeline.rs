//! Run configuration, manifests and the end-to-end pipeline.
//!
//! A run writes six files to the output directory: `predictions.jsonl`,
//! `report.txt`, `report.csv`, `report.json`, `confusion.svg` and
//! `manifest.json`. Each file is written to a temporary name and renamed
//! into place.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ingest_corpus, Corpus, CorpusError, CorpusFormat, FieldMap};
use crate::eval::{
    confusion_matrix, render_heatmap, render_report, ConfusionMatrix, EvalError, EvaluationReport,
    ReportFormat,
};
use crate::taxonomy::{builtin_label_set, LabelSet, LabelVariant, TaxonomyError};
use crate::zeroshot::{
    predictions_to_jsonl, read_predictions, validate_template, BackendDescriptor, BackendError,
    CacheError, Classifier, ClassifyOptions, MockBackend, NliBackend, Prediction, PredictionRecord,
    RemoteNliBackend, RetryPolicy, RunFailure, ScoreCache, ScoringCounters, ScoringMode,
    DEFAULT_BATCH_SIZE, DEFAULT_TEMPLATE, DEFAULT_TRUNCATION_CHARS,
};

pub const TOOL_NAME: &str = "sectorzero";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ENDPOINT_ENV: &str = "SECTORZERO_ENDPOINT";
pub const DEFAULT_REMOTE_MODEL: &str = "valhalla/distilbart-mnli-12-3";
pub const MIN_TRUNCATION_CHARS: usize = 64;

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const HEATMAP_FILE: &str = "confusion.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Labels(#[from] TaxonomyError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("backend setup failed: {0}")]
    Backend(BackendError),
    #[error(transparent)]
    Classify(#[from] RunFailure),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("bad predictions input: {0}")]
    Predictions(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 2 for usage, configuration and input problems; 3 for failures while
    /// running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Corpus(_)
            | PipelineError::Labels(_)
            | PipelineError::Cache(_)
            | PipelineError::Backend(_)
            | PipelineError::Predictions(_) => 2,
            PipelineError::Classify(_) | PipelineError::Eval(_) | PipelineError::Io { .. } => 3,
        }
    }
}

/// Which label set to classify against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum LabelSource {
    Original,
    Enriched,
    Custom(PathBuf),
}

impl From<String> for LabelSource {
    fn from(s: String) -> Self {
        match s.as_str() {
            "original" => LabelSource::Original,
            "enriched" => LabelSource::Enriched,
            _ => LabelSource::Custom(PathBuf::from(s)),
        }
    }
}

impl From<LabelSource> for String {
    fn from(l: LabelSource) -> Self {
        l.to_string()
    }
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelSource::Original => f.write_str("original"),
            LabelSource::Enriched => f.write_str("enriched"),
            LabelSource::Custom(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!(
                "unknown backend {other:?} (expected mock or remote)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: CorpusFormat,
    pub field_map: FieldMap,
    pub require_gold: bool,
    pub labels: LabelSource,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub template: String,
    pub mode: ScoringMode,
    pub truncation_chars: usize,
    pub batch_size: usize,
    pub parallelism: usize,
    pub cache: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
    pub request_timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            format: CorpusFormat::Csv,
            field_map: FieldMap::default(),
            require_gold: true,
            labels: LabelSource::Original,
            backend: BackendKind::Mock,
            endpoint: None,
            model: None,
            template: DEFAULT_TEMPLATE.to_string(),
            mode: ScoringMode::Single,
            truncation_chars: DEFAULT_TRUNCATION_CHARS,
            batch_size: DEFAULT_BATCH_SIZE,
            parallelism: 1,
            cache: None,
            seed: 0,
            out: PathBuf::from("out"),
            retry_attempts: 3,
            retry_backoff_ms: 500,
            request_timeout_secs: 30,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Endpoint from the config, falling back to `SECTORZERO_ENDPOINT`.
    pub fn resolved_endpoint(&self) -> Option<String> {
        self.endpoint
            .clone()
            .or_else(|| std::env::var(ENDPOINT_ENV).ok())
            .filter(|e| !e.trim().is_empty())
    }

    /// Every violated constraint, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.batch_size < 1 {
            out.push("batch_size must be at least 1".to_string());
        }
        if self.parallelism < 1 {
            out.push("parallelism must be at least 1".to_string());
        }
        if self.truncation_chars < MIN_TRUNCATION_CHARS {
            out.push(format!(
                "truncation_chars must be at least {MIN_TRUNCATION_CHARS}"
            ));
        }
        if self.retry_attempts < 1 {
            out.push("retry_attempts must be at least 1".to_string());
        }
        if validate_template(&self.template).is_err() {
            out.push(format!(
                "template {:?} must contain exactly one {{}} placeholder",
                self.template
            ));
        }
        if self.backend == BackendKind::Remote && self.resolved_endpoint().is_none() {
            out.push(format!(
                "remote backend needs --endpoint, an \"endpoint\" config entry or {ENDPOINT_ENV}"
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match self.problems() {
            p if p.is_empty() => Ok(()),
            p => Err(PipelineError::Config(p.join("; "))),
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.retry_attempts,
            initial_backoff: Duration::from_millis(self.retry_backoff_ms),
            request_timeout: Duration::from_secs(self.request_timeout_secs),
        }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            mode: self.mode,
            truncation_chars: self.truncation_chars,
            parallelism: self.parallelism,
        }
    }

    fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out");
        }
        v
    }
}

pub fn load_corpus(config: &RunConfig) -> Result<Corpus, PipelineError> {
    let path = config
        .corpus
        .as_deref()
        .ok_or_else(|| PipelineError::Config("no corpus given (--corpus)".into()))?;
    Ok(ingest_corpus(
        path,
        config.format,
        &config.field_map,
        config.require_gold,
    )?)
}

pub fn load_labels(config: &RunConfig) -> Result<LabelSet, PipelineError> {
    Ok(match &config.labels {
        LabelSource::Original => builtin_label_set(LabelVariant::Original),
        LabelSource::Enriched => builtin_label_set(LabelVariant::Enriched),
        LabelSource::Custom(path) => LabelSet::load(path)?,
    })
}

pub fn build_backend(config: &RunConfig) -> Result<Box<dyn NliBackend>, PipelineError> {
    Ok(match config.backend {
        BackendKind::Mock => {
            Box::new(MockBackend::new(&config.template).map_err(PipelineError::Backend)?)
        }
        BackendKind::Remote => {
            let endpoint = config
                .resolved_endpoint()
                .ok_or_else(|| PipelineError::Config("remote backend without endpoint".into()))?;
            Box::new(
                RemoteNliBackend::new(
                    &endpoint,
                    config.model.as_deref().unwrap_or(DEFAULT_REMOTE_MODEL),
                    &config.template,
                    config.retry_policy(),
                    config.batch_size,
                )
                .map_err(PipelineError::Backend)?,
            )
        }
    })
}

/// Source of manifest timestamps.
pub trait Clock {
    fn now(&self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Always returns the same instant.
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub records: usize,
    pub filtered: usize,
    pub predictions: usize,
    pub cache_hits: u64,
    pub backend_calls: u64,
    pub scored_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseTruncation {
    pub max_chars: usize,
    pub policy: String,
    pub backend_may_truncate_further: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub template_is_default: bool,
    pub mode_is_default: bool,
    pub premise_truncation: PremiseTruncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub status: String,
    pub started_at: String,
    pub finished_at: String,
    pub error: Option<String>,
    pub config: serde_json::Value,
    pub backend: BackendDescriptor,
    pub counts: RunCounts,
    pub metadata: RunMetadata,
}

impl RunManifest {
    fn new(config: &RunConfig, backend: &BackendDescriptor, started_at: String) -> Self {
        RunManifest {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            status: "running".to_string(),
            started_at,
            finished_at: String::new(),
            error: None,
            config: config.snapshot(),
            backend: backend.clone(),
            counts: RunCounts::default(),
            metadata: RunMetadata {
                template_is_default: config.template == DEFAULT_TEMPLATE,
                mode_is_default: config.mode == ScoringMode::default(),
                premise_truncation: PremiseTruncation {
                    max_chars: config.truncation_chars,
                    policy: "cut back to last whitespace".to_string(),
                    backend_may_truncate_further: config.backend == BackendKind::Remote,
                },
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes `contents` to `dir/name` via a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
    let io = |path: &Path, source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| io(&tmp, e))?;
    std::fs::rename(&tmp, &target).map_err(|e| io(&target, e))?;
    Ok(target)
}

pub struct ClassifyOutcome {
    pub labels: LabelSet,
    pub corpus: Corpus,
    pub predictions: Vec<Prediction>,
    pub manifest: RunManifest,
}

fn open_cache(config: &RunConfig) -> Result<Option<ScoreCache>, PipelineError> {
    config
        .cache
        .as_deref()
        .map(ScoreCache::open)
        .transpose()
        .map_err(Into::into)
}

/// Classifies the configured corpus and writes `predictions.jsonl` and
/// `manifest.json`. On a backend failure the manifest is still written,
/// recording how many records completed.
pub fn classify_stage(
    config: &RunConfig,
    clock: &dyn Clock,
) -> Result<ClassifyOutcome, PipelineError> {
    config.validate()?;
    let started_at = clock.now();
    let labels = load_labels(config)?;
    let corpus = load_corpus(config)?;
    let backend = build_backend(config)?;
    let cache = open_cache(config)?;
    let mut classifier = Classifier::new(backend.as_ref(), config.classify_options())
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    if let Some(cache) = &cache {
        classifier = classifier.with_cache(cache);
    }
    let result = classifier.classify_corpus(&corpus, &labels);
    let ScoringCounters {
        cache_hits,
        backend_calls,
        scored_pairs,
    } = classifier.counters();

    let mut manifest = RunManifest::new(config, backend.descriptor(), started_at);
    manifest.counts = RunCounts {
        records: corpus.len(),
        filtered: corpus.filtered_count,
        predictions: 0,
        cache_hits,
        backend_calls,
        scored_pairs,
    };
    match result {
        Ok(predictions) => {
            manifest.counts.predictions = predictions.len();
            manifest.status = "completed".to_string();
            manifest.finished_at = clock.now();
            write_atomic(
                &config.out,
                PREDICTIONS_FILE,
                &predictions_to_jsonl(&predictions, &labels),
            )?;
            write_atomic(&config.out, MANIFEST_FILE, &manifest.to_json())?;
            Ok(ClassifyOutcome {
                labels,
                corpus,
                predictions,
                manifest,
            })
        }
        Err(failure) => {
            manifest.counts.predictions = failure.completed;
            manifest.status = "failed".to_string();
            manifest.error = Some(failure.to_string());
            manifest.finished_at = clock.now();
            write_atomic(&config.out, MANIFEST_FILE, &manifest.to_json())?;
            Err(failure.into())
        }
    }
}

pub struct EvaluationOutcome {
    pub matrix: ConfusionMatrix,
    pub report: EvaluationReport,
}

/// Joins predictions with gold sectors by record id and builds the matrix.
/// Records without a gold sector are left out.
pub fn evaluate_predictions(
    corpus: &Corpus,
    labels: &LabelSet,
    predictions: &[PredictionRecord],
) -> Result<EvaluationOutcome, PipelineError> {
    let by_id: std::collections::HashMap<&str, &str> = predictions
        .iter()
        .map(|p| (p.id.as_str(), p.predicted.as_str()))
        .collect();
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for r in &corpus.records {
        let Some(g) = &r.gold_sector else { continue };
        let p = by_id.get(r.id.as_str()).ok_or_else(|| {
            PipelineError::Predictions(format!("no prediction for record {:?}", r.id))
        })?;
        gold.push(g.as_str());
        pred.push(*p);
    }
    let matrix = confusion_matrix(&gold, &pred, labels)?;
    let report = EvaluationReport::from_confusion(&matrix)?;
    Ok(EvaluationOutcome { matrix, report })
}

/// Writes the text/CSV/JSON reports and the heatmap to `out`.
pub fn write_evaluation(out: &Path, outcome: &EvaluationOutcome) -> Result<(), PipelineError> {
    write_atomic(
        out,
        REPORT_TEXT_FILE,
        &render_report(&outcome.report, ReportFormat::Text),
    )?;
    write_atomic(
        out,
        REPORT_CSV_FILE,
        &render_report(&outcome.report, ReportFormat::Csv),
    )?;
    write_atomic(
        out,
        REPORT_JSON_FILE,
        &render_report(&outcome.report, ReportFormat::Json),
    )?;
    write_atomic(out, HEATMAP_FILE, &render_heatmap(&outcome.matrix))?;
    Ok(())
}

/// Evaluates a predictions-JSONL file against the configured corpus.
pub fn evaluate_stage(
    config: &RunConfig,
    predictions_path: &Path,
) -> Result<EvaluationOutcome, PipelineError> {
    let labels = load_labels(config)?;
    let corpus = load_corpus(config)?;
    let file = std::fs::File::open(predictions_path)
        .map_err(|e| PipelineError::Predictions(format!("{}: {e}", predictions_path.display())))?;
    let records = read_predictions(file).map_err(PipelineError::Predictions)?;
    let outcome = evaluate_predictions(&corpus, &labels, &records)?;
    write_evaluation(&config.out, &outcome)?;
    Ok(outcome)
}

pub struct RunOutcome {
    pub classified: ClassifyOutcome,
    pub evaluation: EvaluationOutcome,
}

/// Classify then evaluate, writing all six artifacts.
pub fn run_pipeline(config: &RunConfig, clock: &dyn Clock) -> Result<RunOutcome, PipelineError> {
    let classified = classify_stage(config, clock)?;
    let records: Vec<PredictionRecord> = classified
        .predictions
        .iter()
        .map(|p| PredictionRecord {
            id: p.doc_id.clone(),
            predicted: p.predicted_label(&classified.labels).gics_name.clone(),
            scores: Default::default(),
        })
        .collect();
    let evaluation = evaluate_predictions(&classified.corpus, &classified.labels, &records)?;
    write_evaluation(&config.out, &evaluation)?;
    Ok(RunOutcome {
        classified,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::default();
        assert!(c.problems().is_empty());
        let bad = RunConfig {
            batch_size: 0,
            parallelism: 0,
            truncation_chars: 10,
            template: "x".into(),
            ..RunConfig::default()
        };
        assert_eq!(bad.problems().len(), 4);
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_json() {
        let c = RunConfig::from_json(
            r#"{"corpus": "c.csv", "labels": "enriched", "mode": "multi", "batch_size": 4}"#,
        )
        .unwrap();
        assert_eq!(c.labels, LabelSource::Enriched);
        assert_eq!(c.mode, ScoringMode::Multi);
        assert_eq!(c.batch_size, 4);
        assert_eq!(c.parallelism, 1);
        let custom = RunConfig::from_json(r#"{"labels": "my/labels.json"}"#).unwrap();
        assert_eq!(custom.labels, LabelSource::Custom("my/labels.json".into()));
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let round = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn remote_needs_endpoint() {
        let c = RunConfig {
            backend: BackendKind::Remote,
            endpoint: Some("http://127.0.0.1:9".into()),
            ..RunConfig::default()
        };
        assert!(c.problems().is_empty());
        let b = build_backend(&c).unwrap();
        assert_eq!(b.descriptor().model_id, DEFAULT_REMOTE_MODEL);
    }
}
