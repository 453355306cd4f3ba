//! Company-description corpora: CSV/JSONL ingestion, tokenization, the
//! stopword policy and per-sector distribution summaries.

mod text;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::LabelSet;

pub use text::{apply_stopword_policy, load_lexicon, parse_lexicon, tokenize, StopwordPolicy};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("row {row}: missing or empty required field {field:?}")]
    MalformedRecord { row: usize, field: String },
    #[error("input has no column {0:?}")]
    MissingColumn(String),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {0:?} has a gold sector that is not in the label set")]
    UnknownLabel(String),
    #[error("{source_name}:{line}: lexicon entry {entry:?} must be lowercase without whitespace")]
    InvalidLexiconEntry {
        source_name: String,
        line: usize,
        entry: String,
    },
    #[error("failed to write corpus: {0}")]
    Write(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!(
                "unknown corpus format {other:?} (expected csv or jsonl)"
            )),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Csv => "csv",
            CorpusFormat::Jsonl => "jsonl",
        })
    }
}

/// Column (CSV) or key (JSONL) names for each record field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMap {
    pub id: String,
    pub name: String,
    pub description: String,
    pub gold: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            id: "id".into(),
            name: "name".into(),
            description: "description".into(),
            gold: "gics_sector".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub id: String,
    pub name: String,
    pub description: String,
    pub gold_sector: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<CompanyRecord>,
    pub source: String,
    /// Records dropped because they had no gold sector.
    pub filtered_count: usize,
}

impl Corpus {
    /// Builds a corpus from in-memory records, enforcing id uniqueness and
    /// non-empty descriptions.
    pub fn from_records(
        source: impl Into<String>,
        records: Vec<CompanyRecord>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.id.trim().is_empty() {
                return Err(CorpusError::MalformedRecord {
                    row: i + 1,
                    field: "id".into(),
                });
            }
            if r.description.trim().is_empty() {
                return Err(CorpusError::MalformedRecord {
                    row: i + 1,
                    field: "description".into(),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus {
            records,
            source: source.into(),
            filtered_count: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

struct RawRow {
    row: usize,
    id: Option<String>,
    name: Option<String>,
    description: Option<String>,
    gold: Option<String>,
}

fn non_empty(v: Option<String>) -> Option<String> {
    v.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn assemble(rows: Vec<RawRow>, source: String, require_gold: bool) -> Result<Corpus, CorpusError> {
    let mut records = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    let mut filtered_count = 0;
    for raw in rows {
        let id = non_empty(raw.id).ok_or_else(|| CorpusError::MalformedRecord {
            row: raw.row,
            field: "id".into(),
        })?;
        let description =
            non_empty(raw.description).ok_or_else(|| CorpusError::MalformedRecord {
                row: raw.row,
                field: "description".into(),
            })?;
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        let gold_sector = non_empty(raw.gold);
        if require_gold && gold_sector.is_none() {
            filtered_count += 1;
            continue;
        }
        records.push(CompanyRecord {
            id,
            name: raw.name.map(|s| s.trim().to_string()).unwrap_or_default(),
            description,
            gold_sector,
        });
    }
    Ok(Corpus {
        records,
        source,
        filtered_count,
    })
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn read_csv_rows<R: Read>(
    reader: R,
    fields: &FieldMap,
    require_gold: bool,
) -> Result<Vec<RawRow>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let id_col = column(&headers, &fields.id)
        .ok_or_else(|| CorpusError::MissingColumn(fields.id.clone()))?;
    let desc_col = column(&headers, &fields.description)
        .ok_or_else(|| CorpusError::MissingColumn(fields.description.clone()))?;
    let name_col = column(&headers, &fields.name);
    let gold_col = column(&headers, &fields.gold);
    if require_gold && gold_col.is_none() {
        return Err(CorpusError::MissingColumn(fields.gold.clone()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::to_string);
        rows.push(RawRow {
            row,
            id: get(Some(id_col)),
            name: get(name_col),
            description: get(Some(desc_col)),
            gold: get(gold_col),
        });
    }
    Ok(rows)
}

fn json_text(v: Option<&serde_json::Value>) -> Option<String> {
    match v? {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn read_jsonl_rows<R: Read>(reader: R, fields: &FieldMap) -> Result<Vec<RawRow>, CorpusError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            row,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                row,
                message: e.to_string(),
            })?;
        rows.push(RawRow {
            row,
            id: json_text(obj.get(&fields.id)),
            name: json_text(obj.get(&fields.name)),
            description: json_text(obj.get(&fields.description)),
            gold: json_text(obj.get(&fields.gold)),
        });
    }
    Ok(rows)
}

/// Reads a corpus from any reader. `source` is recorded as provenance.
pub fn read_corpus<R: Read>(
    reader: R,
    source: impl Into<String>,
    format: CorpusFormat,
    fields: &FieldMap,
    require_gold: bool,
) -> Result<Corpus, CorpusError> {
    let rows = match format {
        CorpusFormat::Csv => read_csv_rows(reader, fields, require_gold)?,
        CorpusFormat::Jsonl => read_jsonl_rows(reader, fields)?,
    };
    assemble(rows, source.into(), require_gold)
}

/// Loads a corpus file. With `require_gold`, records without a gold sector
/// are dropped and counted in `filtered_count`.
pub fn ingest_corpus(
    path: &Path,
    format: CorpusFormat,
    fields: &FieldMap,
    require_gold: bool,
) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(
        file,
        path.display().to_string(),
        format,
        fields,
        require_gold,
    )
}

/// Writes records in the given format using `fields` for column/key names.
pub fn write_corpus<W: Write>(
    corpus: &Corpus,
    writer: W,
    format: CorpusFormat,
    fields: &FieldMap,
) -> Result<(), CorpusError> {
    let werr = |e: &dyn fmt::Display| CorpusError::Write(e.to_string());
    match format {
        CorpusFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record([&fields.id, &fields.name, &fields.description, &fields.gold])
                .map_err(|e| werr(&e))?;
            for r in &corpus.records {
                w.write_record([
                    r.id.as_str(),
                    r.name.as_str(),
                    r.description.as_str(),
                    r.gold_sector.as_deref().unwrap_or(""),
                ])
                .map_err(|e| werr(&e))?;
            }
            w.flush().map_err(|e| werr(&e))?;
        }
        CorpusFormat::Jsonl => {
            let mut w = std::io::BufWriter::new(writer);
            for r in &corpus.records {
                let mut obj = serde_json::Map::new();
                obj.insert(fields.id.clone(), r.id.clone().into());
                obj.insert(fields.name.clone(), r.name.clone().into());
                obj.insert(fields.description.clone(), r.description.clone().into());
                obj.insert(
                    fields.gold.clone(),
                    r.gold_sector
                        .clone()
                        .map_or(serde_json::Value::Null, Into::into),
                );
                serde_json::to_writer(&mut w, &obj).map_err(|e| werr(&e))?;
                w.write_all(b"\n").map_err(|e| werr(&e))?;
            }
            w.flush().map_err(|e| werr(&e))?;
        }
    }
    Ok(())
}

/// Per-sector record counts in label-set order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

impl CorpusSummary {
    /// Two-column text table: sector name and number of companies.
    pub fn render(&self) -> String {
        let header = ("GICS sector", "Number of companies");
        let width = self
            .counts
            .iter()
            .map(|(n, _)| n.chars().count())
            .chain([header.0.len(), "Total".len()])
            .max()
            .unwrap_or(0);
        let mut out = format!("{:<width$}  {}\n", header.0, header.1);
        for (name, count) in &self.counts {
            out.push_str(&format!("{name:<width$}  {count}\n"));
        }
        out.push_str(&format!("{:<width$}  {}\n", "Total", self.total));
        out
    }
}

pub fn corpus_summary(corpus: &Corpus, labels: &LabelSet) -> Result<CorpusSummary, CorpusError> {
    let mut counts = vec![0usize; labels.len()];
    for r in &corpus.records {
        if let Some(gold) = &r.gold_sector {
            let i = labels
                .index_of(gold)
                .ok_or_else(|| CorpusError::UnknownLabel(r.id.clone()))?;
            counts[i] += 1;
        }
    }
    let total = counts.iter().sum();
    Ok(CorpusSummary {
        counts: labels
            .labels()
            .iter()
            .zip(counts)
            .map(|(l, c)| (l.gics_name.clone(), c))
            .collect(),
        total,
    })
}
