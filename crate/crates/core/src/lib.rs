//! Zero-shot company sector classification.
//!
//! The crate covers the whole loop: GICS label sets ([`taxonomy`]), corpus
//! ingestion and text normalisation ([`corpus`]), TF-IDF keyword rankings
//! for drafting richer label names ([`enrich`]), NLI-entailment scoring
//! with pluggable backends ([`zeroshot`]), classification reports and
//! confusion-matrix heatmaps ([`eval`]), and the run orchestration used by
//! the command-line tool ([`pipeline`], [`synthetic`]).

pub mod corpus;
pub mod enrich;
pub mod eval;
pub mod pipeline;
pub mod synthetic;
pub mod taxonomy;
pub mod zeroshot;

pub use corpus::{CompanyRecord, Corpus, CorpusFormat, FieldMap, StopwordPolicy};
pub use eval::{ClassMetrics, ConfusionMatrix, EvaluationReport};
pub use taxonomy::{ClassLabel, GicsCode, GicsLevel, LabelSet, LabelVariant};
pub use zeroshot::{NliBackend, NliLogits, Prediction, ScoringMode};
