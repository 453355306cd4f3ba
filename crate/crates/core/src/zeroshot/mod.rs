//! NLI-entailment zero-shot classification.
//!
//! Each label becomes a hypothesis sentence; the document description is the
//! premise. A backend returns (contradiction, neutral, entailment) logits
//! for every pair and the entailment logits are turned into per-label
//! scores.

mod backend;
mod cache;
mod remote;

use std::io::{BufRead, BufReader, Read};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::{CompanyRecord, Corpus};
use crate::taxonomy::{ClassLabel, LabelSet};

pub use backend::{
    mock_nli_score, BackendDescriptor, BackendError, MockBackend, NliBackend, NliLogits, NliQuery,
    MOCK_BACKEND_ID, MOCK_MODEL_ID,
};
pub use cache::{cache_key, descriptor_key, CacheError, ScoreCache};
pub use remote::{parse_nli_response, RemoteNliBackend, RetryPolicy, DEFAULT_BATCH_SIZE, NLI_PATH};

pub const DEFAULT_TEMPLATE: &str = "This example is {}.";
pub const DEFAULT_TRUNCATION_CHARS: usize = 1200;
const PLACEHOLDER: &str = "{}";

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("template {0:?} must contain exactly one {{}} placeholder")]
    BadTemplate(String),
    #[error("record {0:?} has an empty description")]
    EmptyDescription(String),
    #[error("scoring record {doc_id:?}: {source}")]
    Backend {
        doc_id: String,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    /// Softmax over the labels' entailment logits.
    #[default]
    Single,
    /// Independent entailment-vs-contradiction probability per label.
    Multi,
}

impl std::str::FromStr for ScoringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(ScoringMode::Single),
            "multi" => Ok(ScoringMode::Multi),
            other => Err(format!("unknown mode {other:?} (expected single or multi)")),
        }
    }
}

pub fn validate_template(template: &str) -> Result<(), ClassifyError> {
    if template.matches(PLACEHOLDER).count() == 1 {
        Ok(())
    } else {
        Err(ClassifyError::BadTemplate(template.to_string()))
    }
}

pub fn build_hypothesis(label: &ClassLabel, template: &str) -> Result<String, ClassifyError> {
    validate_template(template)?;
    Ok(template.replacen(PLACEHOLDER, &label.display_name, 1))
}

/// Keeps at most `max_chars` characters; a longer text is cut back to the
/// last whitespace inside the window (or hard-cut if there is none).
pub fn truncate_premise(text: &str, max_chars: usize) -> &str {
    let Some((cut, next)) = text.char_indices().nth(max_chars) else {
        return text;
    };
    let head = &text[..cut];
    if next.is_whitespace() {
        return head.trim_end();
    }
    match head.rfind(char::is_whitespace) {
        Some(i) if !head[..i].trim_end().is_empty() => head[..i].trim_end(),
        _ => head,
    }
}

/// Numerically stable softmax. The normalizer is summed in ascending order
/// so that permuting the inputs permutes the outputs bit-for-bit.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let mut sorted = exps.clone();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `exp(e) / (exp(e) + exp(c))`, computed as a logistic of `e - c`.
pub fn entailment_probability(logits: &NliLogits) -> f64 {
    1.0 / (1.0 + (logits.contradiction - logits.entailment).exp())
}

pub fn scores_from_logits(logits: &[NliLogits], mode: ScoringMode) -> Vec<f64> {
    match mode {
        ScoringMode::Single => softmax(&logits.iter().map(|l| l.entailment).collect::<Vec<_>>()),
        ScoringMode::Multi => logits.iter().map(entailment_probability).collect(),
    }
}

/// Index of the first maximal score.
pub fn first_argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub doc_id: String,
    /// One score per label, in label-set order.
    pub scores: Vec<f64>,
    pub predicted_index: usize,
}

impl Prediction {
    pub fn predicted_label<'a>(&self, labels: &'a LabelSet) -> &'a ClassLabel {
        &labels.labels()[self.predicted_index]
    }

    /// One predictions-JSONL line (without the trailing newline):
    /// `{"id", "predicted": gics_name, "scores": {display_name: score}}`.
    pub fn to_json_line(&self, labels: &LabelSet) -> String {
        serde_json::to_string(&PredictionLine {
            prediction: self,
            labels,
        })
        .expect("prediction serializes")
    }
}

struct PredictionLine<'a> {
    prediction: &'a Prediction,
    labels: &'a LabelSet,
}

struct ScoreMap<'a>(&'a [ClassLabel], &'a [f64]);

impl Serialize for ScoreMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (label, score) in self.0.iter().zip(self.1) {
            map.serialize_entry(&label.display_name, score)?;
        }
        map.end()
    }
}

impl Serialize for PredictionLine<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("id", &self.prediction.doc_id)?;
        map.serialize_entry(
            "predicted",
            &self.prediction.predicted_label(self.labels).gics_name,
        )?;
        map.serialize_entry(
            "scores",
            &ScoreMap(self.labels.labels(), &self.prediction.scores),
        )?;
        map.end()
    }
}

pub fn predictions_to_jsonl(predictions: &[Prediction], labels: &LabelSet) -> String {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&p.to_json_line(labels));
        out.push('\n');
    }
    out
}

/// Parsed predictions-JSONL record.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predicted: String,
    #[serde(default)]
    pub scores: serde_json::Map<String, serde_json::Value>,
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub mode: ScoringMode,
    pub truncation_chars: usize,
    pub parallelism: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            mode: ScoringMode::Single,
            truncation_chars: DEFAULT_TRUNCATION_CHARS,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScoringCounters {
    pub cache_hits: u64,
    pub backend_calls: u64,
    pub scored_pairs: u64,
}

/// Corpus run aborted by the first failing record.
#[derive(Debug, Error)]
#[error("classification stopped after {completed} record(s): {error}")]
pub struct RunFailure {
    pub completed: usize,
    #[source]
    pub error: ClassifyError,
}

pub struct Classifier<'a> {
    backend: &'a dyn NliBackend,
    cache: Option<&'a ScoreCache>,
    options: ClassifyOptions,
    cache_hits: AtomicU64,
    backend_calls: AtomicU64,
    scored_pairs: AtomicU64,
}

impl<'a> Classifier<'a> {
    pub fn new(
        backend: &'a dyn NliBackend,
        options: ClassifyOptions,
    ) -> Result<Self, ClassifyError> {
        validate_template(&backend.descriptor().template)?;
        Ok(Classifier {
            backend,
            cache: None,
            options,
            cache_hits: AtomicU64::new(0),
            backend_calls: AtomicU64::new(0),
            scored_pairs: AtomicU64::new(0),
        })
    }

    pub fn with_cache(mut self, cache: &'a ScoreCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn counters(&self) -> ScoringCounters {
        ScoringCounters {
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            scored_pairs: self.scored_pairs.load(Ordering::Relaxed),
        }
    }

    fn logits_for(
        &self,
        doc_id: &str,
        premise: &str,
        labels: &LabelSet,
    ) -> Result<Vec<NliLogits>, ClassifyError> {
        let descriptor = self.backend.descriptor();
        let hypotheses = labels
            .labels()
            .iter()
            .map(|l| build_hypothesis(l, &descriptor.template))
            .collect::<Result<Vec<_>, _>>()?;
        let keys: Vec<Option<String>> = hypotheses
            .iter()
            .map(|h| self.cache.map(|_| descriptor_key(descriptor, premise, h)))
            .collect();

        let mut out: Vec<Option<NliLogits>> = keys
            .iter()
            .map(|k| k.as_ref().and_then(|k| self.cache?.lookup(k)))
            .collect();
        let hits = out.iter().filter(|o| o.is_some()).count() as u64;
        self.cache_hits.fetch_add(hits, Ordering::Relaxed);

        let missing: Vec<usize> = (0..out.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let queries: Vec<NliQuery<'_>> = missing
                .iter()
                .map(|&i| NliQuery {
                    premise,
                    hypothesis: &hypotheses[i],
                    label: &labels.labels()[i].display_name,
                })
                .collect();
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            let backend_err = |source| ClassifyError::Backend {
                doc_id: doc_id.to_string(),
                source,
            };
            let scored = self.backend.score(&queries).map_err(backend_err)?;
            if scored.len() != queries.len() {
                return Err(backend_err(BackendError::Protocol(format!(
                    "expected {} results, got {}",
                    queries.len(),
                    scored.len()
                ))));
            }
            if scored.iter().any(|l| !l.is_finite()) {
                return Err(backend_err(BackendError::Protocol(
                    "backend returned a non-finite logit".into(),
                )));
            }
            self.scored_pairs
                .fetch_add(scored.len() as u64, Ordering::Relaxed);
            for (&i, logits) in missing.iter().zip(scored) {
                if let (Some(cache), Some(key)) = (self.cache, &keys[i]) {
                    cache.store(key.clone(), logits)?;
                }
                out[i] = Some(logits);
            }
        }
        Ok(out
            .into_iter()
            .map(|o| o.expect("every label scored"))
            .collect())
    }

    pub fn classify_document(
        &self,
        record: &CompanyRecord,
        labels: &LabelSet,
    ) -> Result<Prediction, ClassifyError> {
        if labels.is_empty() {
            return Err(ClassifyError::EmptyLabelSet);
        }
        let description = record.description.trim();
        if description.is_empty() {
            return Err(ClassifyError::EmptyDescription(record.id.clone()));
        }
        let premise = truncate_premise(description, self.options.truncation_chars);
        let logits = self.logits_for(&record.id, premise, labels)?;
        let scores = scores_from_logits(&logits, self.options.mode);
        Ok(Prediction {
            doc_id: record.id.clone(),
            predicted_index: first_argmax(&scores),
            scores,
        })
    }

    /// One prediction per record in corpus order. Records may be scored on
    /// several workers; the first failure stops the run.
    pub fn classify_corpus(
        &self,
        corpus: &Corpus,
        labels: &LabelSet,
    ) -> Result<Vec<Prediction>, RunFailure> {
        let workers = if self.backend.serialized() {
            1
        } else {
            self.options.parallelism.max(1)
        };
        let completed = AtomicUsize::new(0);
        let one = |r: &CompanyRecord| {
            let p = self.classify_document(r, labels)?;
            completed.fetch_add(1, Ordering::Relaxed);
            Ok(p)
        };
        let result: Result<Vec<Prediction>, ClassifyError> = if workers == 1 {
            corpus.records.iter().map(one).collect()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => pool.install(|| corpus.records.par_iter().map(one).collect()),
                Err(_) => corpus.records.iter().map(one).collect(),
            }
        };
        result.map_err(|error| RunFailure {
            completed: completed.load(Ordering::Relaxed),
            error,
        })
    }
}

/// Convenience wrapper over [`Classifier::classify_document`].
pub fn classify_document(
    record: &CompanyRecord,
    labels: &LabelSet,
    backend: &dyn NliBackend,
    mode: ScoringMode,
) -> Result<Prediction, ClassifyError> {
    let options = ClassifyOptions {
        mode,
        ..Default::default()
    };
    Classifier::new(backend, options)?.classify_document(record, labels)
}
