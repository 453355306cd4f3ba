use std::collections::HashSet;
use std::path::Path;

use super::CorpusError;

/// Lowercases `text` and splits it into maximal runs of alphabetic
/// characters. Digits, punctuation and symbols act as separators.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token sets removed before term ranking: base stopwords, verbs, country
/// names and company-form abbreviations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordPolicy {
    pub base_stopwords: HashSet<String>,
    pub verb_lexicon: HashSet<String>,
    pub country_names: HashSet<String>,
    pub abbreviations: HashSet<String>,
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const DEFAULT_VERBS: &str = include_str!("../../data/verbs_en.txt");
const DEFAULT_COUNTRIES: &str = include_str!("../../data/countries.txt");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

impl StopwordPolicy {
    /// The lexicons bundled under `data/`.
    pub fn bundled() -> Self {
        let parse = |name: &str, text: &str| {
            parse_lexicon(name, text).expect("bundled lexicons are well formed")
        };
        StopwordPolicy {
            base_stopwords: parse("stopwords_en.txt", DEFAULT_STOPWORDS),
            verb_lexicon: parse("verbs_en.txt", DEFAULT_VERBS),
            country_names: parse("countries.txt", DEFAULT_COUNTRIES),
            abbreviations: parse("abbreviations.txt", DEFAULT_ABBREVIATIONS),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.base_stopwords.contains(token)
            || self.verb_lexicon.contains(token)
            || self.country_names.contains(token)
            || self.abbreviations.contains(token)
    }

    /// Drops every token found in any of the four sets, keeping the order
    /// of the survivors.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .filter(|t| !self.contains(t))
            .cloned()
            .collect()
    }
}

pub fn apply_stopword_policy(tokens: &[String], policy: &StopwordPolicy) -> Vec<String> {
    policy.apply(tokens)
}

/// Parses a lexicon: one lowercase token per line, `#` comment lines and
/// blank lines ignored.
pub fn parse_lexicon(source: &str, text: &str) -> Result<HashSet<String>, CorpusError> {
    let mut out = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        if entry.chars().any(char::is_whitespace) || entry.to_lowercase() != entry {
            return Err(CorpusError::InvalidLexiconEntry {
                source_name: source.to_string(),
                line: i + 1,
                entry: entry.to_string(),
            });
        }
        out.insert(entry.to_string());
    }
    Ok(out)
}

pub fn load_lexicon(path: &Path) -> Result<HashSet<String>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lexicon(&path.display().to_string(), &text)
}
