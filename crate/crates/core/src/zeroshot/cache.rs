//! Score cache keyed by SHA-256 over the backend identity and the pair.
//!
//! On disk the cache is JSONL, one `{"key": .., "logits": [c, n, e]}`
//! record per line. The whole file is loaded on open and new entries are
//! appended one line per write.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::backend::{BackendDescriptor, NliLogits};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path} line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

/// Hex SHA-256 over the five fields, each prefixed with its byte length as
/// a little-endian u64.
pub fn cache_key(
    backend_id: &str,
    model_id: &str,
    template: &str,
    premise: &str,
    hypothesis: &str,
) -> String {
    let mut h = Sha256::new();
    for field in [backend_id, model_id, template, premise, hypothesis] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn descriptor_key(d: &BackendDescriptor, premise: &str, hypothesis: &str) -> String {
    cache_key(&d.backend_id, &d.model_id, &d.template, premise, hypothesis)
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    logits: [f64; 3],
}

#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<String, NliLogits>>,
    file: Option<(PathBuf, Mutex<File>)>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a cache file and loads every entry.
    /// Later lines win over earlier ones with the same key.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let io = |source| CacheError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheLine =
                    serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                entries.insert(rec.key, NliLogits::from_array(rec.logits));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        Ok(ScoreCache {
            entries: RwLock::new(entries),
            file: Some((path.to_path_buf(), Mutex::new(file))),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.read().is_empty()
    }

    pub fn lookup(&self, key: &str) -> Option<NliLogits> {
        self.entries.read().get(key).copied()
    }

    pub fn store(&self, key: String, logits: NliLogits) -> Result<(), CacheError> {
        if let Some((path, file)) = &self.file {
            let mut line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                logits: logits.to_array(),
            })
            .expect("cache line serializes");
            line.push('\n');
            // single write on an append-mode handle
            file.lock()
                .write_all(line.as_bytes())
                .map_err(|source| CacheError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
        }
        self.entries.write().insert(key, logits);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_is_length_prefixed() {
        let a = cache_key("mock", "m", "t", "ab", "c");
        let b = cache_key("mock", "m", "t", "a", "bc");
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
        assert_eq!(a, cache_key("mock", "m", "t", "ab", "c"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let logits = NliLogits::new(0.1, -2.5e-7, 1.0 / 3.0);
        {
            let cache = ScoreCache::open(&path).unwrap();
            assert!(cache.is_empty());
            cache.store("k1".into(), logits).unwrap();
            assert_eq!(cache.lookup("k1"), Some(logits));
        }
        let cache = ScoreCache::open(&path).unwrap();
        assert_eq!(cache.lookup("k1"), Some(logits));
        assert_eq!(cache.len(), 1);

        std::fs::write(&path, "{\"key\":\"x\"}\n").unwrap();
        assert!(matches!(
            ScoreCache::open(&path),
            Err(CacheError::Corrupt { line: 1, .. })
        ));
    }
}
