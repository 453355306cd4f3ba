use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::tokenize;

/// Raw three-way NLI scores for one premise/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliLogits {
    pub contradiction: f64,
    pub neutral: f64,
    pub entailment: f64,
}

impl NliLogits {
    pub fn new(contradiction: f64, neutral: f64, entailment: f64) -> Self {
        NliLogits {
            contradiction,
            neutral,
            entailment,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.contradiction.is_finite() && self.neutral.is_finite() && self.entailment.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.contradiction, self.neutral, self.entailment]
    }

    pub fn from_array([c, n, e]: [f64; 3]) -> Self {
        NliLogits::new(c, n, e)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// Identity of a scoring backend. All three fields take part in cache keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub backend_id: String,
    pub model_id: String,
    pub template: String,
}

impl BackendDescriptor {
    pub fn new(
        backend_id: impl Into<String>,
        model_id: impl Into<String>,
        template: impl Into<String>,
    ) -> Result<Self, BackendError> {
        let d = BackendDescriptor {
            backend_id: backend_id.into(),
            model_id: model_id.into(),
            template: template.into(),
        };
        for (name, value) in [
            ("backend_id", &d.backend_id),
            ("model_id", &d.model_id),
            ("template", &d.template),
        ] {
            if value.trim().is_empty() {
                return Err(BackendError::Config(format!("{name} must not be empty")));
            }
        }
        Ok(d)
    }
}

/// One premise/hypothesis pair. `label` is the display name the hypothesis
/// was built from; remote backends ignore it.
#[derive(Debug, Clone, Copy)]
pub struct NliQuery<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
    pub label: &'a str,
}

pub trait NliBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Scores every query, returning results in query order.
    fn score(&self, queries: &[NliQuery<'_>]) -> Result<Vec<NliLogits>, BackendError>;

    /// Backends that cannot take concurrent calls return `true`; the
    /// classifier then runs them on a single worker.
    fn serialized(&self) -> bool {
        false
    }
}

/// Deterministic token-overlap scorer: entailment is twice the number of
/// distinct label tokens that also occur in the premise.
pub fn mock_nli_score(premise: &str, _hypothesis: &str, label_tokens: &[String]) -> NliLogits {
    let premise_tokens: HashSet<String> = tokenize(premise).into_iter().collect();
    let label_tokens: HashSet<&String> = label_tokens.iter().collect();
    let overlap = label_tokens
        .iter()
        .filter(|t| premise_tokens.contains(t.as_str()))
        .count();
    NliLogits::new(1.0, 0.0, 2.0 * overlap as f64)
}

pub const MOCK_BACKEND_ID: &str = "mock";
pub const MOCK_MODEL_ID: &str = "token-overlap-v1";

#[derive(Debug)]
pub struct MockBackend {
    descriptor: BackendDescriptor,
    calls: AtomicU64,
}

impl MockBackend {
    pub fn new(template: impl Into<String>) -> Result<Self, BackendError> {
        Ok(MockBackend {
            descriptor: BackendDescriptor::new(MOCK_BACKEND_ID, MOCK_MODEL_ID, template)?,
            calls: AtomicU64::new(0),
        })
    }

    /// Number of `score` invocations so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl NliBackend for MockBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score(&self, queries: &[NliQuery<'_>]) -> Result<Vec<NliLogits>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(queries
            .iter()
            .map(|q| mock_nli_score(q.premise, q.hypothesis, &tokenize(q.label)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mock_examples() {
        let l = mock_nli_score(
            "steel and copper mining",
            "h",
            &toks(&["mining", "minerals"]),
        );
        assert_eq!(l, NliLogits::new(1.0, 0.0, 2.0));
        let l = mock_nli_score("software", "h", &toks(&["mining"]));
        assert_eq!(l, NliLogits::new(1.0, 0.0, 0.0));
        // distinct tokens only
        let l = mock_nli_score("oil oil gas", "h", &toks(&["oil", "oil", "gas"]));
        assert_eq!(l.entailment, 4.0);
        assert_eq!(
            mock_nli_score("a b", "h", &toks(&["a"])),
            mock_nli_score("a b", "h", &toks(&["a"]))
        );
    }

    #[test]
    fn descriptor_validation() {
        assert!(BackendDescriptor::new("mock", "m", "t {}").is_ok());
        assert!(matches!(
            BackendDescriptor::new("", "m", "t"),
            Err(BackendError::Config(_))
        ));
    }

    #[test]
    fn mock_backend_counts_calls() {
        let b = MockBackend::new("This example is {}.").unwrap();
        let q = NliQuery {
            premise: "oil drilling",
            hypothesis: "This example is Oil.",
            label: "Oil",
        };
        let out = b.score(&[q, q]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].entailment, 2.0);
        assert_eq!(b.calls(), 1);
    }
}
