//! TF-IDF term statistics and per-sector keyword rankings used to draft
//! enriched label names.
//!
//! idf uses the smoothed form `ln((1 + N) / (1 + df)) + 1`, tf is the raw
//! in-document count, and a class score sums `tf * idf` over the class's
//! documents. Since idf is per term, that sum equals `idf * total count`,
//! which is how it is computed here so that equal counts give bit-equal
//! scores.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{tokenize, Corpus, StopwordPolicy};

pub const DEFAULT_TOP_K: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum EnrichError {
    #[error("cannot fit TF-IDF on an empty document list")]
    EmptyCorpus,
    #[error("no documents for class {0:?}")]
    UnknownLabel(String),
    #[error("term {0:?} is not in the fitted vocabulary")]
    UnknownTerm(String),
    #[error("k and m must be at least 1")]
    ZeroLimit,
    #[error("ranking for {0:?} is empty")]
    EmptyRanking(String),
    #[error("failed to write rankings: {0}")]
    Write(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfStats {
    doc_count: usize,
    doc_freq: BTreeMap<String, usize>,
}

impl TfidfStats {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    /// Vocabulary in ascending term order.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.doc_freq.keys().map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.doc_freq.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.doc_freq(term)
            .map(|df| smoothed_idf(self.doc_count, df))
    }
}

fn smoothed_idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit_tfidf<D: AsRef<[String]>>(docs: &[D]) -> Result<TfidfStats, EnrichError> {
    if docs.is_empty() {
        return Err(EnrichError::EmptyCorpus);
    }
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: HashSet<&String> = doc.as_ref().iter().collect();
        for term in distinct {
            *doc_freq.entry(term.clone()).or_default() += 1;
        }
    }
    Ok(TfidfStats {
        doc_count: docs.len(),
        doc_freq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRanking {
    pub gics_name: String,
    /// Descending by score, ties in ascending term order.
    pub ranked_terms: Vec<(String, f64)>,
}

/// Documents grouped by class name.
pub type DocsByClass = BTreeMap<String, Vec<Vec<String>>>;

/// Tokenizes and filters every gold-labeled record, grouping the token
/// lists by gold sector. Unlabeled records are skipped.
pub fn group_documents(corpus: &Corpus, policy: &StopwordPolicy) -> DocsByClass {
    let mut out = DocsByClass::new();
    for r in &corpus.records {
        if let Some(gold) = &r.gold_sector {
            out.entry(gold.clone())
                .or_default()
                .push(policy.apply(&tokenize(&r.description)));
        }
    }
    out
}

pub fn rank_class_terms(
    stats: &TfidfStats,
    docs_by_class: &DocsByClass,
    gics_name: &str,
    k: usize,
) -> Result<TermRanking, EnrichError> {
    if k == 0 {
        return Err(EnrichError::ZeroLimit);
    }
    let docs = docs_by_class
        .get(gics_name)
        .ok_or_else(|| EnrichError::UnknownLabel(gics_name.to_string()))?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for term in doc {
            *counts.entry(term.as_str()).or_default() += 1;
        }
    }
    let mut scored = counts
        .into_iter()
        .map(|(term, count)| {
            let idf = stats
                .idf(term)
                .ok_or_else(|| EnrichError::UnknownTerm(term.to_string()))?;
            Ok((term.to_string(), count as f64 * idf))
        })
        .collect::<Result<Vec<_>, EnrichError>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(TermRanking {
        gics_name: gics_name.to_string(),
        ranked_terms: scored,
    })
}

/// Ranks every class in `docs_by_class`, in class-name order.
pub fn rank_all_classes(
    stats: &TfidfStats,
    docs_by_class: &DocsByClass,
    k: usize,
) -> Result<Vec<TermRanking>, EnrichError> {
    docs_by_class
        .keys()
        .map(|name| rank_class_terms(stats, docs_by_class, name, k))
        .collect()
}

fn title_case(term: &str) -> String {
    let mut chars = term.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Drafts a display name per class from its top `m` terms. The output is a
/// starting point for a hand-edited custom label set.
pub fn propose_enriched_labels(
    rankings: &[TermRanking],
    m: usize,
) -> Result<Vec<(String, String)>, EnrichError> {
    if m == 0 {
        return Err(EnrichError::ZeroLimit);
    }
    rankings
        .iter()
        .map(|r| {
            if r.ranked_terms.is_empty() {
                return Err(EnrichError::EmptyRanking(r.gics_name.clone()));
            }
            let name = r
                .ranked_terms
                .iter()
                .take(m)
                .map(|(t, _)| title_case(t))
                .collect::<Vec<_>>()
                .join(", ");
            Ok((r.gics_name.clone(), name))
        })
        .collect()
}

/// CSV export with columns `gics_name,rank,term,score`; rank is 1-based.
pub fn write_rankings_csv<W: Write>(
    rankings: &[TermRanking],
    writer: W,
) -> Result<(), EnrichError> {
    let werr = |e: csv::Error| EnrichError::Write(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["gics_name", "rank", "term", "score"])
        .map_err(werr)?;
    for r in rankings {
        for (i, (term, score)) in r.ranked_terms.iter().enumerate() {
            w.write_record([
                r.gics_name.as_str(),
                &(i + 1).to_string(),
                term,
                &score.to_string(),
            ])
            .map_err(werr)?;
        }
    }
    w.flush().map_err(|e| EnrichError::Write(e.to_string()))
}
