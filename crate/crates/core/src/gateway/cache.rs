//! Content-addressed on-disk response cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

/// Hex sha256 over the length-prefixed fields that determine a response.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub digest: String,
}

impl CacheKey {
    pub fn new(
        backend_id: &str,
        model_id: &str,
        template_id: &str,
        prompt: &str,
        temperature: f64,
        max_tokens: u32,
    ) -> Self {
        let mut h = Sha256::new();
        for field in [backend_id, model_id, template_id, prompt] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field.as_bytes());
        }
        h.update(temperature.to_bits().to_le_bytes());
        h.update(max_tokens.to_le_bytes());
        Self {
            digest: hex::encode(h.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CacheEntry {
    Chat { text: String },
    Embedding { values: Vec<f64> },
}

#[derive(Debug)]
pub struct DiskCache {
    root: PathBuf,
    counter: AtomicU64,
}

impl DiskCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| GatewayError::Cache(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root,
            counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.digest[..2]).join(format!("{}.json", key.digest))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(e) => Some(e),
            Err(e) => {
                tracing::warn!(digest = %key.digest, error = %e, "ignoring corrupt cache entry");
                None
            }
        }
    }

    /// Writes to a unique temp file in the target directory, then renames,
    /// so concurrent writers never expose a partial record.
    pub fn put(&self, key: &CacheKey, entry: &CacheEntry) -> Result<(), GatewayError> {
        let path = self.path_for(key);
        let dir = path.parent().expect("cache path has a parent");
        let io = |e: std::io::Error| GatewayError::Cache(format!("{}: {e}", path.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let tmp = dir.join(format!(
            ".{}.{}.{}.tmp",
            key.digest,
            std::process::id(),
            self.counter.fetch_add(1, Ordering::Relaxed)
        ));
        let body = serde_json::to_vec(entry).map_err(|e| GatewayError::Cache(e.to_string()))?;
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&body).map_err(io)?;
        f.sync_all().map_err(io)?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_field_changes_the_digest() {
        let base = CacheKey::new("b", "m", "t", "p", 0.0, 10);
        let variants = [
            CacheKey::new("b2", "m", "t", "p", 0.0, 10),
            CacheKey::new("b", "m2", "t", "p", 0.0, 10),
            CacheKey::new("b", "m", "t2", "p", 0.0, 10),
            CacheKey::new("b", "m", "t", "p2", 0.0, 10),
            CacheKey::new("b", "m", "t", "p", 0.5, 10),
            CacheKey::new("b", "m", "t", "p", 0.0, 11),
        ];
        for v in variants {
            assert_ne!(v, base);
        }
        assert_eq!(base, CacheKey::new("b", "m", "t", "p", 0.0, 10));
        // field boundaries are unambiguous
        assert_ne!(CacheKey::new("ab", "c", "t", "p", 0.0, 1), CacheKey::new("a", "bc", "t", "p", 0.0, 1));
    }

    #[test]
    fn round_trip_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::new("b", "m", "t", "p", 0.0, 10);
        let entry = CacheEntry::Embedding {
            values: vec![0.1, 1.0 / 3.0, -2.5e-17],
        };
        DiskCache::open(dir.path()).unwrap().put(&key, &entry).unwrap();
        let reopened = DiskCache::open(dir.path()).unwrap();
        assert_eq!(reopened.get(&key), Some(entry));
    }
}
