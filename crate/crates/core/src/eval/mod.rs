//! Confusion matrices and classification reports.
//!
//! Undefined precision or recall (zero denominator) is reported as 0.0 and
//! flagged. Macro averages run over every class of the label set, including
//! classes with zero support.

mod heatmap;
mod report;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::taxonomy::{ClassLabel, LabelSet};

pub use heatmap::render_heatmap;
pub use report::{format_display, render_report, ReportFormat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} entries but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label {0:?} is not in the label set")]
    UnknownLabel(String),
    #[error("nothing to evaluate: total support is zero")]
    EmptyEvaluation,
    #[error("expected {expected} per-class entries, got {got}")]
    ClassCountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: LabelSet,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Wraps raw counts; rows are gold classes, columns predictions.
    pub fn from_counts(labels: LabelSet, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let k = labels.len();
        if counts.len() != k {
            return Err(EvalError::ClassCountMismatch {
                expected: k,
                got: counts.len(),
            });
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(EvalError::ClassCountMismatch {
                expected: k,
                got: row.len(),
            });
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.size()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Counts `(gold, predicted)` pairs of gics names.
pub fn confusion_matrix<G, P>(
    gold: &[G],
    pred: &[P],
    labels: &LabelSet,
) -> Result<ConfusionMatrix, EvalError>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let k = labels.len();
    let index = |name: &str| {
        labels
            .index_of(name)
            .ok_or_else(|| EvalError::UnknownLabel(name.to_string()))
    };
    let mut counts = vec![vec![0u64; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        counts[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.clone(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDivision {
    PrecisionUndefined,
    RecallUndefined,
}

impl ZeroDivision {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroDivision::PrecisionUndefined => "precision_undefined",
            ZeroDivision::RecallUndefined => "recall_undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub zero_division_flags: BTreeSet<ZeroDivision>,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    let sum = precision + recall;
    if sum > 0.0 {
        2.0 * precision * recall / sum
    } else {
        0.0
    }
}

impl ClassMetrics {
    /// Metrics from already-known precision and recall, e.g. reported
    /// per-class values.
    pub fn from_precision_recall(precision: f64, recall: f64, support: u64) -> Self {
        ClassMetrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            support,
            zero_division_flags: BTreeSet::new(),
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Per-class precision, recall, F1 and support in label order.
pub fn class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.size())
        .map(|i| {
            let tp = cm.counts[i][i];
            let support = cm.row_sum(i);
            let mut flags = BTreeSet::new();
            let precision = ratio(tp, cm.col_sum(i)).unwrap_or_else(|| {
                flags.insert(ZeroDivision::PrecisionUndefined);
                0.0
            });
            let recall = ratio(tp, support).unwrap_or_else(|| {
                flags.insert(ZeroDivision::RecallUndefined);
                0.0
            });
            ClassMetrics {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
                zero_division_flags: flags,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn macro_average(per_class: &[ClassMetrics]) -> Result<Averages, EvalError> {
    if per_class.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    Ok(Averages {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    })
}

pub fn weighted_average(per_class: &[ClassMetrics]) -> Result<Averages, EvalError> {
    let total: u64 = per_class.iter().map(|m| m.support).sum();
    if total == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let total = total as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| f(m) * m.support as f64)
            .sum::<f64>()
            / total
    };
    Ok(Averages {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregates {
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: u64,
}

pub fn aggregate_metrics(
    per_class: &[ClassMetrics],
    cm: &ConfusionMatrix,
) -> Result<Aggregates, EvalError> {
    if per_class.len() != cm.size() {
        return Err(EvalError::ClassCountMismatch {
            expected: cm.size(),
            got: per_class.len(),
        });
    }
    let total_support: u64 = per_class.iter().map(|m| m.support).sum();
    if total_support == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    Ok(Aggregates {
        accuracy: cm.trace() as f64 / total_support as f64,
        macro_avg: macro_average(per_class)?,
        weighted_avg: weighted_average(per_class)?,
        total_support,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub labels: Vec<ClassLabel>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: u64,
}

impl EvaluationReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self, EvalError> {
        let per_class = class_metrics(cm);
        let agg = aggregate_metrics(&per_class, cm)?;
        Ok(EvaluationReport {
            labels: cm.labels().labels().to_vec(),
            per_class,
            accuracy: agg.accuracy,
            macro_avg: agg.macro_avg,
            weighted_avg: agg.weighted_avg,
            total_support: agg.total_support,
        })
    }

    /// Report over externally supplied per-class metrics, such as values
    /// copied from an existing report.
    pub fn from_class_metrics(
        labels: &LabelSet,
        per_class: Vec<ClassMetrics>,
        accuracy: f64,
    ) -> Result<Self, EvalError> {
        if per_class.len() != labels.len() {
            return Err(EvalError::ClassCountMismatch {
                expected: labels.len(),
                got: per_class.len(),
            });
        }
        Ok(EvaluationReport {
            labels: labels.labels().to_vec(),
            macro_avg: macro_average(&per_class)?,
            weighted_avg: weighted_average(&per_class)?,
            total_support: per_class.iter().map(|m| m.support).sum(),
            per_class,
            accuracy,
        })
    }

    pub fn metrics_for(&self, gics_name: &str) -> Option<&ClassMetrics> {
        self.labels
            .iter()
            .position(|l| l.gics_name == gics_name)
            .map(|i| &self.per_class[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::LabelVariant;

    fn ab() -> LabelSet {
        LabelSet::new(LabelVariant::Custom, [("A", "A"), ("B", "B")]).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&["A", "B", "A"], &["A", "B", "A"], &ab()).unwrap();
        assert_eq!(cm.counts(), [vec![2, 0], vec![0, 1]]);
        let cm = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &ab()).unwrap();
        assert_eq!(cm.counts(), [vec![1, 1], vec![0, 1]]);

        let abc =
            LabelSet::new(LabelVariant::Custom, [("A", "A"), ("B", "B"), ("C", "C")]).unwrap();
        let cm = confusion_matrix(&["A", "B"], &["B", "A"], &abc).unwrap();
        assert_eq!(cm.row_sum(2), 0);
        assert_eq!(cm.col_sum(2), 0);

        assert_eq!(
            confusion_matrix(&["A"], &["A", "B"], &ab()),
            Err(EvalError::LengthMismatch { gold: 1, pred: 2 })
        );
        assert_eq!(
            confusion_matrix(&["A"], &["Z"], &ab()),
            Err(EvalError::UnknownLabel("Z".into()))
        );
    }

    #[test]
    fn health_care_reference_row() {
        let m = ClassMetrics::from_precision_recall(0.80, 0.89, 4565);
        assert!((m.f1 - 0.842_603_550_295_858).abs() < 1e-12);
        assert_eq!(format_display(m.f1), "0.84");
    }

    #[test]
    fn zero_division_is_flagged() {
        let cm = confusion_matrix(&["A", "B"], &["A", "A"], &ab()).unwrap();
        let m = class_metrics(&cm);
        assert_eq!(m[1].precision, 0.0);
        assert!(m[1]
            .zero_division_flags
            .contains(&ZeroDivision::PrecisionUndefined));
        assert!(!m[1]
            .zero_division_flags
            .contains(&ZeroDivision::RecallUndefined));
        assert_eq!(m[1].f1, 0.0);
        assert!(m[0].zero_division_flags.is_empty());
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = confusion_matrix(&["A", "B", "B"], &["A", "B", "B"], &ab()).unwrap();
        for m in class_metrics(&cm) {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        let r = EvaluationReport::from_confusion(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_avg.f1, 1.0);
        assert_eq!(r.weighted_avg.f1, 1.0);
        assert_eq!(r.total_support, 3);
    }

    #[test]
    fn single_class_all_correct() {
        let one = LabelSet::new(LabelVariant::Custom, [("A", "A")]).unwrap();
        let cm = confusion_matrix(&["A", "A"], &["A", "A"], &one).unwrap();
        let agg = aggregate_metrics(&class_metrics(&cm), &cm).unwrap();
        assert_eq!(agg.accuracy, 1.0);
        assert_eq!(agg.macro_avg.f1, 1.0);
        assert_eq!(agg.weighted_avg.f1, 1.0);
    }

    #[test]
    fn empty_evaluation() {
        let cm = confusion_matrix::<&str, &str>(&[], &[], &ab()).unwrap();
        assert_eq!(
            aggregate_metrics(&class_metrics(&cm), &cm),
            Err(EvalError::EmptyEvaluation)
        );
    }

    #[test]
    fn macro_f1_from_rounded_values() {
        let f1s = [
            0.77, 0.48, 0.30, 0.84, 0.39, 0.48, 0.81, 0.75, 0.39, 0.63, 0.59,
        ];
        let per_class: Vec<_> = f1s
            .iter()
            .map(|&f| ClassMetrics {
                precision: 0.0,
                recall: 0.0,
                f1: f,
                support: 1,
                zero_division_flags: BTreeSet::new(),
            })
            .collect();
        let m = macro_average(&per_class).unwrap();
        assert!((m.f1 - 6.43 / 11.0).abs() < 1e-12);
        assert_eq!(format_display(m.f1), "0.58");
    }
}
