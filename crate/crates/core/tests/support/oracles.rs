//! Brute-force reference implementations. These deliberately avoid the
//! library's own data structures.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleClass {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub classes: Vec<OracleClass>,
    pub accuracy: f64,
    pub macro_avg: [f64; 3],
    pub weighted_avg: [f64; 3],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class TP/FP/FN enumeration over labelled pairs; classes are `0..k`.
pub fn metrics_by_enumeration(gold: &[usize], pred: &[usize], k: usize) -> OracleReport {
    let n = gold.len();
    let mut classes = Vec::with_capacity(k);
    for c in 0..k {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for d in 0..n {
            match (gold[d] == c, pred[d] == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        classes.push(OracleClass {
            precision,
            recall,
            f1,
            support: tp + fn_,
        });
    }
    let correct = (0..n).filter(|&d| gold[d] == pred[d]).count() as u64;
    let mut macro_avg = [0.0; 3];
    let mut weighted_avg = [0.0; 3];
    for c in &classes {
        let vals = [c.precision, c.recall, c.f1];
        for i in 0..3 {
            macro_avg[i] += vals[i] / k as f64;
            weighted_avg[i] += vals[i] * c.support as f64 / n as f64;
        }
    }
    OracleReport {
        classes,
        accuracy: ratio(correct, n as u64),
        macro_avg,
        weighted_avg,
    }
}

/// Top-`k` terms of one class by summed raw count times smoothed idf, ties
/// broken by ascending term. `corpus` holds every document of every class.
pub fn tfidf_ranking_by_enumeration(
    corpus: &BTreeMap<String, Vec<Vec<String>>>,
    class: &str,
    k: usize,
) -> Vec<(String, f64)> {
    let all: Vec<&Vec<String>> = corpus.values().flatten().collect();
    let n = all.len() as f64;
    let class_docs = &corpus[class];
    let vocab: BTreeSet<&String> = class_docs.iter().flatten().collect();
    let mut scored: Vec<(String, f64)> = vocab
        .into_iter()
        .map(|term| {
            let df = all.iter().filter(|d| d.contains(term)).count() as f64;
            let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
            let tf: usize = class_docs
                .iter()
                .map(|d| d.iter().filter(|t| *t == term).count())
                .sum();
            (term.clone(), tf as f64 * idf)
        })
        .collect();
    // selection by repeated scan instead of a sort
    let mut out = Vec::new();
    while out.len() < k && !scored.is_empty() {
        let mut best = 0;
        for i in 1..scored.len() {
            let (t, s) = &scored[i];
            let (bt, bs) = &scored[best];
            if s > bs || (s == bs && t < bt) {
                best = i;
            }
        }
        out.push(scored.remove(best));
    }
    out
}

/// Index of the label sharing the most distinct tokens with the premise;
/// the lowest index wins ties.
pub fn max_overlap_label(premise_tokens: &[String], label_tokens: &[Vec<String>]) -> usize {
    let premise: BTreeSet<&String> = premise_tokens.iter().collect();
    let overlap = |toks: &Vec<String>| {
        toks.iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|t| premise.contains(t))
            .count()
    };
    let mut best = 0;
    for i in 1..label_tokens.len() {
        if overlap(&label_tokens[i]) > overlap(&label_tokens[best]) {
            best = i;
        }
    }
    best
}
