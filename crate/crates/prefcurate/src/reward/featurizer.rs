//! Hashed n-gram featurization of (context, summary) pairs.
//!
//! Summaries are lowercased, split on non-alphanumeric runs and hashed as
//! n-gram counts into a power-of-two feature space. With context
//! conditioning enabled, every distinct context unigram is additionally
//! crossed with every summary token occurrence, which lets a linear model
//! learn "the summary reuses the post's vocabulary" without a lexicon.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text;

pub const MIN_DIMENSION: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    /// Which n-gram orders to hash; any subset of {1, 2}.
    pub ngram_orders: Vec<usize>,
    /// Feature-space size; a power of two, at least 2^10.
    pub dimension: usize,
    pub hash_seed: u64,
    /// Cross distinct context unigrams with summary unigrams.
    pub context_conditioning: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            ngram_orders: vec![1, 2],
            dimension: 1 << 18,
            hash_seed: 0x5eed,
            context_conditioning: true,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dimension.is_power_of_two() || self.dimension < MIN_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "dimension {} must be a power of two >= {MIN_DIMENSION}",
                self.dimension
            )));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.iter().any(|&o| o == 0 || o > 2) {
            return Err(Error::InvalidConfig(format!(
                "ngram orders {:?} must be a non-empty subset of {{1, 2}}",
                self.ngram_orders
            )));
        }
        Ok(())
    }
}

/// Sparse feature counts, sorted by index with no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec(Vec<(u32, f64)>);

impl SparseVec {
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.0.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }

    /// Total feature mass (sum of counts).
    pub fn mass(&self) -> f64 {
        self.0.iter().map(|&(_, v)| v).sum()
    }

    fn from_counts(counts: HashMap<u32, f64>) -> Self {
        let mut entries: Vec<(u32, f64)> = counts.into_iter().collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        SparseVec(entries)
    }
}

/// Seeded FNV-1a over a salted byte stream.
fn feature_hash(seed: u64, salt: u64, gram: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x9e3779b97f4a7c15);
    for &b in salt.to_le_bytes().iter() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    for &b in gram.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Featurize a (context, summary) pair into sparse counts.
pub fn featurize(config: &FeaturizerConfig, context: &str, summary: &str) -> SparseVec {
    let mask = (config.dimension - 1) as u64;
    let tokens = text::tokenize(summary);
    let mut counts: HashMap<u32, f64> = HashMap::new();

    for &order in &config.ngram_orders {
        for gram in text::ngrams(&tokens, order) {
            let idx = feature_hash(config.hash_seed, order as u64, &gram) & mask;
            *counts.entry(idx as u32).or_insert(0.0) += 1.0;
        }
    }

    if config.context_conditioning && !context.is_empty() {
        let ctx_tokens: std::collections::BTreeSet<String> =
            text::tokenize(context).into_iter().collect();
        for ctx in &ctx_tokens {
            for tok in &tokens {
                let idx =
                    feature_hash(config.hash_seed, 0xc105, &format!("{ctx}\u{1f}{tok}")) & mask;
                *counts.entry(idx as u32).or_insert(0.0) += 1.0;
            }
        }
    }

    SparseVec::from_counts(counts)
}
