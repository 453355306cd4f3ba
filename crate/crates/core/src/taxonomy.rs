//! GICS codes and candidate label sets.
//!
//! Only the eleven sectors are enumerated by name. Deeper levels of the
//! hierarchy are handled as codes.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("empty GICS code")]
    EmptyCode,
    #[error("GICS code {0:?} has length {1}; expected 2, 4, 6 or 8 digits")]
    InvalidCodeLength(String, usize),
    #[error("GICS code {0:?} contains non-digit character {1:?}")]
    InvalidCodeCharacter(String, char),
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("label {0} has an empty name")]
    EmptyName(usize),
    #[error("duplicate gics_name {0:?} in label set")]
    DuplicateGicsName(String),
    #[error("duplicate display_name {0:?} in label set")]
    DuplicateDisplayName(String),
    #[error("failed to read label set {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed label set file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GicsLevel {
    Sector,
    IndustryGroup,
    Industry,
    SubIndustry,
}

impl GicsLevel {
    pub const ALL: [GicsLevel; 4] = [
        GicsLevel::Sector,
        GicsLevel::IndustryGroup,
        GicsLevel::Industry,
        GicsLevel::SubIndustry,
    ];

    /// Number of leading code digits that identify this level.
    pub fn digits(self) -> usize {
        match self {
            GicsLevel::Sector => 2,
            GicsLevel::IndustryGroup => 4,
            GicsLevel::Industry => 6,
            GicsLevel::SubIndustry => 8,
        }
    }

    fn from_len(len: usize) -> Option<Self> {
        GicsLevel::ALL.into_iter().find(|l| l.digits() == len)
    }
}

/// A validated GICS code of 2, 4, 6 or 8 decimal digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GicsCode {
    digits: String,
    level: GicsLevel,
}

impl GicsCode {
    pub fn digits(&self) -> &str {
        &self.digits
    }

    pub fn level(&self) -> GicsLevel {
        self.level
    }

    /// The ancestor of this code at `level`, or `None` when `level` is
    /// finer than the code itself.
    pub fn ancestor(&self, level: GicsLevel) -> Option<GicsCode> {
        (level <= self.level).then(|| GicsCode {
            digits: self.digits[..level.digits()].to_string(),
            level,
        })
    }

    /// Ancestors from sector down to the code itself.
    pub fn lineage(&self) -> Vec<GicsCode> {
        GicsLevel::ALL
            .into_iter()
            .filter_map(|l| self.ancestor(l))
            .collect()
    }
}

impl fmt::Display for GicsCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits)
    }
}

impl FromStr for GicsCode {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_gics_code(s)
    }
}

pub fn parse_gics_code(text: &str) -> Result<GicsCode, TaxonomyError> {
    let digits = text.trim();
    if digits.is_empty() {
        return Err(TaxonomyError::EmptyCode);
    }
    if let Some(c) = digits.chars().find(|c| !c.is_ascii_digit()) {
        return Err(TaxonomyError::InvalidCodeCharacter(digits.to_string(), c));
    }
    let level = GicsLevel::from_len(digits.len())
        .ok_or_else(|| TaxonomyError::InvalidCodeLength(digits.to_string(), digits.len()))?;
    Ok(GicsCode {
        digits: digits.to_string(),
        level,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub gics_name: String,
    pub display_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelVariant {
    Original,
    Enriched,
    Custom,
}

/// Ordered candidate labels fed to the classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    variant: LabelVariant,
    labels: Vec<ClassLabel>,
}

/// Sector names paired with their keyword-enriched replacements, in the
/// canonical row order.
const SECTORS: [(&str, &str); 11] = [
    ("Energy", "Oil, Natural Gas, Consumable Fuels and Petroleum"),
    (
        "Materials",
        "Raw Materials, Mining, Minerals and Metals (Gold, Silver and Copper)",
    ),
    ("Industrials", "Industrials and Transportation"),
    (
        "Consumer Discretionary",
        "Non-Essential Goods, Retail and E-Commerce",
    ),
    ("Consumer Staples", "Food, Beverages and Household Products"),
    ("Health Care", "Health Care"),
    ("Financials", "Banking and Lending"),
    ("Information Technology", "Software, Technology and Systems"),
    (
        "Communication Services",
        "Communications, Telecommunications, Networking, Media and Entertainment",
    ),
    (
        "Utilities",
        "Utilities, Energy Distribution and Renewable Energy",
    ),
    ("Real Estate", "Real Estate Properties"),
];

/// Record shape of the label-set JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEntry {
    pub gics_name: String,
    pub display_name: String,
}

impl LabelSet {
    /// Builds a label set from `(gics_name, display_name)` pairs, checking
    /// that names are non-empty and pairwise distinct.
    pub fn new<I, G, D>(variant: LabelVariant, pairs: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = (G, D)>,
        G: Into<String>,
        D: Into<String>,
    {
        let labels: Vec<ClassLabel> = pairs
            .into_iter()
            .enumerate()
            .map(|(index, (g, d))| ClassLabel {
                index,
                gics_name: g.into(),
                display_name: d.into(),
            })
            .collect();
        if labels.is_empty() {
            return Err(TaxonomyError::EmptyLabelSet);
        }
        let mut gics = HashSet::new();
        let mut display = HashSet::new();
        for label in &labels {
            if label.gics_name.trim().is_empty() || label.display_name.trim().is_empty() {
                return Err(TaxonomyError::EmptyName(label.index));
            }
            if !gics.insert(label.gics_name.as_str()) {
                return Err(TaxonomyError::DuplicateGicsName(label.gics_name.clone()));
            }
            if !display.insert(label.display_name.as_str()) {
                return Err(TaxonomyError::DuplicateDisplayName(
                    label.display_name.clone(),
                ));
            }
        }
        Ok(LabelSet { variant, labels })
    }

    pub fn variant(&self) -> LabelVariant {
        self.variant
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ClassLabel> {
        self.labels.get(index)
    }

    pub fn index_of(&self, gics_name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.gics_name == gics_name)
    }

    pub fn by_gics_name(&self, gics_name: &str) -> Option<&ClassLabel> {
        self.index_of(gics_name).map(|i| &self.labels[i])
    }

    /// Parses the JSON label-set format: an array of
    /// `{"gics_name": .., "display_name": ..}` objects in label order.
    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let entries: Vec<LabelEntry> =
            serde_json::from_str(text).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        LabelSet::new(
            LabelVariant::Custom,
            entries.into_iter().map(|e| (e.gics_name, e.display_name)),
        )
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaxonomyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<LabelEntry> = self
            .labels
            .iter()
            .map(|l| LabelEntry {
                gics_name: l.gics_name.clone(),
                display_name: l.display_name.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("label entries serialize")
    }
}

/// One of the two built-in sector label sets. `Custom` is treated as
/// `Original` since custom sets come from files.
pub fn builtin_label_set(variant: LabelVariant) -> LabelSet {
    let pairs = SECTORS.iter().map(|&(gics, enriched)| match variant {
        LabelVariant::Enriched => (gics, enriched),
        _ => (gics, gics),
    });
    let variant = match variant {
        LabelVariant::Enriched => LabelVariant::Enriched,
        _ => LabelVariant::Original,
    };
    LabelSet::new(variant, pairs).expect("built-in sector names are valid")
}
