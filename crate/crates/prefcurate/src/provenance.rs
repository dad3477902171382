//! Provenance stamps for emitted artifacts.
//!
//! Every report file (CSV, manifest, SVG) starts with a header identifying
//! the configuration hash, corpus hash, seed and tool version that produced
//! it, so re-runs are attributable and byte-comparable.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub corpus_hash: String,
    pub seed: u64,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, corpus_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.into(),
            corpus_hash: corpus_hash.into(),
            seed,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    /// `# key=value` comment lines for the top of a CSV file.
    pub fn csv_comments(&self) -> String {
        format!(
            "# config_hash={}\n# corpus_hash={}\n# seed={}\n# tool_version={}\n",
            self.config_hash, self.corpus_hash, self.seed, self.tool_version
        )
    }

    /// An XML comment for embedding in SVG output.
    pub fn svg_comment(&self) -> String {
        format!(
            "<!-- config_hash={} corpus_hash={} seed={} tool_version={} -->",
            self.config_hash, self.corpus_hash, self.seed, self.tool_version
        )
    }
}

/// Hex SHA-256 of a byte slice.
pub fn hash_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize())
}

/// Hex SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hash_bytes(&bytes))
}

/// Hash of a serializable config, stable across runs.
pub fn hash_config<T: Serialize>(config: &T) -> Result<String> {
    Ok(hash_bytes(serde_json::to_string(config)?.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_is_stable() {
        assert_eq!(
            hash_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(hash_bytes(b""), hash_bytes(b""));
    }

    #[test]
    fn comments_round_trip_fields() {
        let p = Provenance::new("cfg", "corp", 7);
        let c = p.csv_comments();
        assert!(c.contains("config_hash=cfg"));
        assert!(c.contains("seed=7"));
        assert!(c.lines().all(|l| l.starts_with('#')));
    }
}
