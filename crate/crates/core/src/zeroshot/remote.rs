//! HTTP client for an MNLI model server.
//!
//! Wire format: `POST {endpoint}/v1/nli` with
//! `{"model": str, "pairs": [{"premise": str, "hypothesis": str}, ..]}`;
//! a 200 response carries `{"logits": [[c, n, e], ..]}` aligned with the
//! request pairs.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::backend::{BackendDescriptor, BackendError, NliBackend, NliLogits, NliQuery};

pub const NLI_PATH: &str = "/v1/nli";
pub const DEFAULT_BATCH_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Wait after the first failed attempt; doubles after each further one.
    pub initial_backoff: Duration,
    pub request_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            request_timeout: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `failed + 1`, i.e. after `failed` failures.
    pub fn backoff(&self, failed: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(failed.saturating_sub(1))
    }
}

#[derive(Serialize)]
struct WirePair<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    pairs: Vec<WirePair<'a>>,
}

/// Parses a response body into logits, checking count, arity and
/// finiteness.
pub fn parse_nli_response(body: &str, expected: usize) -> Result<Vec<NliLogits>, BackendError> {
    let proto = |m: String| BackendError::Protocol(m);
    let doc: Value = serde_json::from_str(body).map_err(|e| proto(format!("invalid JSON: {e}")))?;
    let rows = doc
        .get("logits")
        .and_then(Value::as_array)
        .ok_or_else(|| proto("response has no \"logits\" array".into()))?;
    if rows.len() != expected {
        return Err(proto(format!(
            "expected {expected} logit triples, got {}",
            rows.len()
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let cells = row
                .as_array()
                .filter(|c| c.len() == 3)
                .ok_or_else(|| proto(format!("logits[{i}] is not a triple")))?;
            let mut out = [0.0; 3];
            for (slot, cell) in out.iter_mut().zip(cells) {
                *slot = match cell {
                    Value::Number(n) => n.as_f64(),
                    // some servers spell non-finite floats as strings
                    Value::String(s) => s.parse::<f64>().ok(),
                    _ => None,
                }
                .ok_or_else(|| proto(format!("logits[{i}] has a non-numeric entry")))?;
                if !slot.is_finite() {
                    return Err(proto(format!("logits[{i}] has a non-finite entry")));
                }
            }
            Ok(NliLogits::from_array(out))
        })
        .collect()
}

#[derive(Debug)]
pub struct RemoteNliBackend {
    descriptor: BackendDescriptor,
    url: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    batch_size: usize,
}

impl RemoteNliBackend {
    pub fn new(
        endpoint: &str,
        model_id: &str,
        template: &str,
        retry: RetryPolicy,
        batch_size: usize,
    ) -> Result<Self, BackendError> {
        let endpoint = endpoint.trim().trim_end_matches('/');
        if endpoint.is_empty() {
            return Err(BackendError::Config("endpoint must not be empty".into()));
        }
        if batch_size == 0 || retry.attempts == 0 {
            return Err(BackendError::Config(
                "batch size and attempts must be at least 1".into(),
            ));
        }
        let url = if endpoint.ends_with(NLI_PATH) {
            endpoint.to_string()
        } else {
            format!("{endpoint}{NLI_PATH}")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(retry.request_timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteNliBackend {
            descriptor: BackendDescriptor::new(format!("remote:{endpoint}"), model_id, template)?,
            url,
            client,
            retry,
            batch_size,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn post_batch(&self, queries: &[NliQuery<'_>]) -> Result<Vec<NliLogits>, BackendError> {
        let body = serde_json::to_string(&WireRequest {
            model: &self.descriptor.model_id,
            pairs: queries
                .iter()
                .map(|q| WirePair {
                    premise: q.premise,
                    hypothesis: q.hypothesis,
                })
                .collect(),
        })
        .expect("request serializes");

        let mut last = String::new();
        for attempt in 1..=self.retry.attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            let sent = self
                .client
                .post(&self.url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone())
                .send();
            match sent {
                Ok(resp) if resp.status().is_success() => {
                    let text = resp
                        .text()
                        .map_err(|e| BackendError::Protocol(format!("unreadable body: {e}")))?;
                    return parse_nli_response(&text, queries.len());
                }
                Ok(resp) => last = format!("HTTP {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(BackendError::Unavailable {
            attempts: self.retry.attempts,
            last,
        })
    }
}

impl NliBackend for RemoteNliBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score(&self, queries: &[NliQuery<'_>]) -> Result<Vec<NliLogits>, BackendError> {
        let mut out = Vec::with_capacity(queries.len());
        for chunk in queries.chunks(self.batch_size) {
            out.extend(self.post_batch(chunk)?);
        }
        Ok(out)
    }
}
