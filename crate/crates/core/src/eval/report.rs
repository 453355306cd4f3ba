use serde::Serialize;

use super::{Averages, ClassMetrics, EvaluationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

/// Two-decimal display value, rounding half away from zero.
pub fn format_display(x: f64) -> String {
    let hundredths = (x * 100.0).round() as i64;
    let sign = if hundredths < 0 { "-" } else { "" };
    let h = hundredths.unsigned_abs();
    format!("{sign}{}.{:02}", h / 100, h % 100)
}

fn flags_of(m: &ClassMetrics) -> Vec<&'static str> {
    let mut flags: Vec<&'static str> = m.zero_division_flags.iter().map(|f| f.as_str()).collect();
    if m.support == 0 {
        flags.push("zero_support");
    }
    flags
}

fn zero_support_classes(report: &EvaluationReport) -> usize {
    report.per_class.iter().filter(|m| m.support == 0).count()
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report),
    }
}

fn render_text(report: &EvaluationReport) -> String {
    const ROWS: [&str; 3] = ["accuracy", "macro avg", "weighted avg"];
    let width = report
        .labels
        .iter()
        .map(|l| l.display_name.chars().count())
        .chain(ROWS.iter().map(|r| r.len()))
        .max()
        .unwrap_or(0);
    let line = |name: &str, cells: [&str; 4]| {
        format!(
            "{name:>width$}  {:>9} {:>9} {:>9} {:>9}\n",
            cells[0], cells[1], cells[2], cells[3]
        )
    };
    let avg_line = |name: &str, a: &Averages| {
        line(
            name,
            [
                &format_display(a.precision),
                &format_display(a.recall),
                &format_display(a.f1),
                &report.total_support.to_string(),
            ],
        )
    };

    let mut out = line("", ["precision", "recall", "f1-score", "support"]);
    out.push('\n');
    for (label, m) in report.labels.iter().zip(&report.per_class) {
        out.push_str(&line(
            &label.display_name,
            [
                &format_display(m.precision),
                &format_display(m.recall),
                &format_display(m.f1),
                &m.support.to_string(),
            ],
        ));
    }
    out.push('\n');
    out.push_str(&line(
        ROWS[0],
        [
            "",
            "",
            &format_display(report.accuracy),
            &report.total_support.to_string(),
        ],
    ));
    out.push_str(&avg_line(ROWS[1], &report.macro_avg));
    out.push_str(&avg_line(ROWS[2], &report.weighted_avg));
    out
}

fn render_csv(report: &EvaluationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |cells: [String; 9]| w.write_record(&cells).expect("in-memory csv write");
    row([
        "label",
        "precision",
        "recall",
        "f1",
        "support",
        "precision_display",
        "recall_display",
        "f1_display",
        "flags",
    ]
    .map(String::from));
    for (label, m) in report.labels.iter().zip(&report.per_class) {
        row([
            label.display_name.clone(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.support.to_string(),
            format_display(m.precision),
            format_display(m.recall),
            format_display(m.f1),
            flags_of(m).join(";"),
        ]);
    }
    row([
        "accuracy".into(),
        String::new(),
        String::new(),
        report.accuracy.to_string(),
        report.total_support.to_string(),
        String::new(),
        String::new(),
        format_display(report.accuracy),
        String::new(),
    ]);
    let macro_flags = if zero_support_classes(report) > 0 {
        "includes_zero_support".to_string()
    } else {
        String::new()
    };
    for (name, avg, flags) in [
        ("macro avg", &report.macro_avg, macro_flags),
        ("weighted avg", &report.weighted_avg, String::new()),
    ] {
        row([
            name.into(),
            avg.precision.to_string(),
            avg.recall.to_string(),
            avg.f1.to_string(),
            report.total_support.to_string(),
            format_display(avg.precision),
            format_display(avg.recall),
            format_display(avg.f1),
            flags,
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

#[derive(Serialize)]
struct JsonClassRow<'a> {
    label: &'a str,
    gics_name: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: u64,
    precision_display: String,
    recall_display: String,
    f1_display: String,
    flags: Vec<&'static str>,
}

#[derive(Serialize)]
struct JsonAverages {
    precision: f64,
    recall: f64,
    f1: f64,
    support: u64,
    precision_display: String,
    recall_display: String,
    f1_display: String,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    classes: Vec<JsonClassRow<'a>>,
    accuracy: f64,
    accuracy_display: String,
    macro_avg: JsonAverages,
    weighted_avg: JsonAverages,
    total_support: u64,
    zero_support_classes: usize,
}

fn json_averages(a: &Averages, support: u64) -> JsonAverages {
    JsonAverages {
        precision: a.precision,
        recall: a.recall,
        f1: a.f1,
        support,
        precision_display: format_display(a.precision),
        recall_display: format_display(a.recall),
        f1_display: format_display(a.f1),
    }
}

fn render_json(report: &EvaluationReport) -> String {
    let doc = JsonReport {
        classes: report
            .labels
            .iter()
            .zip(&report.per_class)
            .map(|(l, m)| JsonClassRow {
                label: &l.display_name,
                gics_name: &l.gics_name,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                support: m.support,
                precision_display: format_display(m.precision),
                recall_display: format_display(m.recall),
                f1_display: format_display(m.f1),
                flags: flags_of(m),
            })
            .collect(),
        accuracy: report.accuracy,
        accuracy_display: format_display(report.accuracy),
        macro_avg: json_averages(&report.macro_avg, report.total_support),
        weighted_avg: json_averages(&report.weighted_avg, report.total_support),
        total_support: report.total_support,
        zero_support_classes: zero_support_classes(report),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{confusion_matrix, ClassMetrics, EvaluationReport};
    use crate::taxonomy::{LabelSet, LabelVariant};

    #[test]
    fn display_rounding() {
        assert_eq!(format_display(0.8426), "0.84");
        assert_eq!(format_display(0.125), "0.13");
        assert_eq!(format_display(1.0), "1.00");
        assert_eq!(format_display(0.0), "0.00");
        assert_eq!(format_display(0.005), "0.01");
        assert_eq!(format_display(-0.125), "-0.13");
    }

    fn health_care_report() -> EvaluationReport {
        let labels = LabelSet::new(
            LabelVariant::Custom,
            [("Health Care", "Health Care"), ("Utilities", "Utilities")],
        )
        .unwrap();
        EvaluationReport::from_class_metrics(
            &labels,
            vec![
                ClassMetrics::from_precision_recall(0.80, 0.89, 4565),
                ClassMetrics::from_precision_recall(0.47, 0.80, 740),
            ],
            0.64,
        )
        .unwrap()
    }

    #[test]
    fn text_row_layout() {
        let text = render_report(&health_care_report(), ReportFormat::Text);
        let rows: Vec<String> = text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .collect();
        assert!(rows.contains(&"Health Care 0.80 0.89 0.84 4565".to_string()));
        assert!(rows.contains(&"accuracy 0.64 5305".to_string()));
        assert_eq!(rows[0], "precision recall f1-score support");
        assert!(rows.last().unwrap().starts_with("weighted avg"));
    }

    #[test]
    fn csv_carries_raw_and_display() {
        let csv = render_report(&health_care_report(), ReportFormat::Csv);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "label,precision,recall,f1,support,precision_display,recall_display,f1_display,flags"
        );
        let hc = lines.next().unwrap();
        assert!(
            hc.starts_with("Health Care,0.8,0.89,0.8426035502958"),
            "{hc}"
        );
        assert!(hc.ends_with(",4565,0.80,0.89,0.84,"), "{hc}");
    }

    #[test]
    fn json_and_flags() {
        let labels = LabelSet::new(LabelVariant::Custom, [("A", "Alpha"), ("B", "Beta")]).unwrap();
        let cm = confusion_matrix(&["A", "A"], &["A", "B"], &labels).unwrap();
        let report = EvaluationReport::from_confusion(&cm).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&render_report(&report, ReportFormat::Json)).unwrap();
        assert_eq!(json["classes"][1]["label"], "Beta");
        assert_eq!(
            json["classes"][1]["flags"],
            serde_json::json!(["recall_undefined", "zero_support"])
        );
        assert_eq!(json["zero_support_classes"], 1);
        assert_eq!(json["accuracy"], 0.5);
        let csv = render_report(&report, ReportFormat::Csv);
        assert!(csv.contains("macro avg,") && csv.contains("includes_zero_support"));
    }
}
