//! Agreement-stratified training curations and the held-out test split.
//!
//! Four strategies build training datasets from a pool of comparisons:
//!
//! - `max`: highest agreement, then most repetitions
//! - `min`: lowest agreement, then most repetitions
//! - `dist`: uniform coverage of agreement bins over `[0.5, 1.0]`
//! - `rand`: uniform without replacement
//!
//! All strategies are deterministic for a fixed `(pool, n, seed)`; the sort
//! keys end in the comparison id so no hidden randomness is needed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agreement::{agreement_bin, comparison_agreement};
use crate::corpus::Comparison;
use crate::error::{Error, Result};
use crate::provenance::TOOL_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Max,
    Min,
    Dist,
    Rand,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Max, Strategy::Min, Strategy::Dist, Strategy::Rand];
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Strategy::Max),
            "min" => Ok(Strategy::Min),
            "dist" => Ok(Strategy::Dist),
            "rand" => Ok(Strategy::Rand),
            other => Err(Error::InvalidConfig(format!(
                "unknown strategy {other:?} (expected max|min|dist|rand)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Max => "max",
            Strategy::Min => "min",
            Strategy::Dist => "dist",
            Strategy::Rand => "rand",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub strategy: Strategy,
    pub n: usize,
    /// Agreement bins for the `dist` strategy.
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub seed: u64,
}

fn default_bins() -> usize {
    10
}

impl SamplingSpec {
    pub fn new(strategy: Strategy, n: usize, seed: u64) -> Self {
        SamplingSpec {
            strategy,
            n,
            bins: default_bins(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample size must be positive".into()));
        }
        if self.strategy == Strategy::Dist && self.bins < 2 {
            return Err(Error::InvalidConfig(
                "dist sampling needs at least 2 bins".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Uniformly sample `test_n` comparisons (without replacement) as a held-out
/// test split; the rest form the training pool.
///
/// Ids are canonicalized by sorting before the draw, so the split depends
/// only on the id set and the seed, not on corpus file order.
pub fn holdout_split(comparisons: &[Comparison], test_n: usize, seed: u64) -> Result<DatasetSplit> {
    if test_n >= comparisons.len() {
        return Err(Error::SplitTooLarge {
            test_n,
            corpus: comparisons.len(),
        });
    }
    let mut ids: Vec<&str> = comparisons.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    let picked = draw_without_replacement(ids.len(), test_n, seed);
    let mut in_test = vec![false; ids.len()];
    for &i in &picked {
        in_test[i] = true;
    }
    Ok(DatasetSplit {
        train_ids: ids
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_test[*i])
            .map(|(_, id)| id.to_string())
            .collect(),
        test_ids: picked.iter().map(|&i| ids[i].to_string()).collect(),
    })
}

/// Partial Fisher-Yates: `amount` distinct indices from `0..len` in draw
/// order. Hand-rolled so the sequence is pinned by this crate, not by the
/// RNG library's sampling internals.
fn draw_without_replacement(len: usize, amount: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..len).collect();
    for i in 0..amount {
        let j = rng.random_range(i..len);
        indices.swap(i, j);
    }
    indices.truncate(amount);
    indices
}

/// `(id, agreement, repetitions)` view of a pool.
fn keyed(pool: &[Comparison]) -> Result<Vec<(&str, f64, u32)>> {
    pool.iter()
        .map(|c| Ok((c.id.as_str(), comparison_agreement(c.votes_a, c.votes_b)?, c.repetitions())))
        .collect()
}

fn check_pool(pool_len: usize, n: usize) -> Result<()> {
    if n > pool_len {
        return Err(Error::InsufficientPool { n, pool: pool_len });
    }
    Ok(())
}

/// Dispatch a [`SamplingSpec`] against a pool.
pub fn sample(spec: &SamplingSpec, pool: &[Comparison]) -> Result<Vec<String>> {
    spec.validate()?;
    match spec.strategy {
        Strategy::Max => sample_max(pool, spec.n),
        Strategy::Min => sample_min(pool, spec.n),
        Strategy::Dist => sample_dist(pool, spec.n, spec.bins, spec.seed),
        Strategy::Rand => sample_rand(pool, spec.n, spec.seed),
    }
}

/// Top `n` by `(agreement desc, repetitions desc, id asc)`.
pub fn sample_max(pool: &[Comparison], n: usize) -> Result<Vec<String>> {
    check_pool(pool.len(), n)?;
    let mut items = keyed(pool)?;
    items.sort_unstable_by(|a, b| {
        b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(b.0))
    });
    Ok(items.into_iter().take(n).map(|(id, _, _)| id.to_string()).collect())
}

/// Top `n` by `(agreement asc, repetitions desc, id asc)`.
pub fn sample_min(pool: &[Comparison], n: usize) -> Result<Vec<String>> {
    check_pool(pool.len(), n)?;
    let mut items = keyed(pool)?;
    items.sort_unstable_by(|a, b| {
        a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(b.0))
    });
    Ok(items.into_iter().take(n).map(|(id, _, _)| id.to_string()).collect())
}

/// Uniform coverage of agreement bins.
///
/// `[0.5, 1.0]` is split into `bins` equal-width right-closed bins; each bin
/// is sorted by `(repetitions desc, id asc)`. Every bin starts with a
/// `floor(n/bins)` quota (capped by its size); the shortfall is then handed
/// out one slot per round, fullest remaining bin first, until exactly `n`
/// items are allocated. The seed is accepted for interface symmetry but the
/// composite sort keys make random tie-breaking unnecessary.
pub fn sample_dist(pool: &[Comparison], n: usize, bins: usize, _seed: u64) -> Result<Vec<String>> {
    check_pool(pool.len(), n)?;
    if bins < 2 {
        return Err(Error::InvalidConfig("dist sampling needs at least 2 bins".into()));
    }

    let mut binned: Vec<Vec<(&str, f64, u32)>> = vec![Vec::new(); bins];
    for item in keyed(pool)? {
        binned[agreement_bin(item.1, bins)].push(item);
    }
    for b in &mut binned {
        b.sort_unstable_by(|a, c| c.2.cmp(&a.2).then(a.0.cmp(c.0)));
    }

    let mut alloc: Vec<usize> = binned.iter().map(|b| b.len().min(n / bins)).collect();
    let mut leftover = n - alloc.iter().sum::<usize>();
    while leftover > 0 {
        let mut open: Vec<(usize, usize)> = binned
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                let remaining = b.len() - alloc[i];
                (remaining > 0).then_some((remaining, i))
            })
            .collect();
        if open.is_empty() {
            return Err(Error::InsufficientPool { n, pool: pool.len() });
        }
        open.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, i) in open {
            if leftover == 0 {
                break;
            }
            alloc[i] += 1;
            leftover -= 1;
        }
    }

    let mut out = Vec::with_capacity(n);
    for (i, b) in binned.iter().enumerate() {
        out.extend(b.iter().take(alloc[i]).map(|(id, _, _)| id.to_string()));
    }
    Ok(out)
}

/// Uniform sample without replacement, in draw order.
pub fn sample_rand(pool: &[Comparison], n: usize, seed: u64) -> Result<Vec<String>> {
    check_pool(pool.len(), n)?;
    let mut ids: Vec<&str> = pool.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    Ok(draw_without_replacement(ids.len(), n, seed)
        .into_iter()
        .map(|i| ids[i].to_string())
        .collect())
}

/// First line of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub strategy: String,
    pub seed: u64,
    pub n: usize,
    pub corpus_hash: String,
    pub tool_version: String,
}

impl ManifestHeader {
    pub fn new(strategy: impl Into<String>, seed: u64, n: usize, corpus_hash: impl Into<String>) -> Self {
        ManifestHeader {
            strategy: strategy.into(),
            seed,
            n,
            corpus_hash: corpus_hash.into(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct IdRecord {
    id: String,
}

/// Write a dataset manifest: a provenance header line followed by one id per
/// line.
pub fn write_manifest(path: &Path, header: &ManifestHeader, ids: &[String]) -> Result<()> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    for id in ids {
        out.push_str(&serde_json::to_string(&IdRecord { id: id.clone() })?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a dataset manifest written by [`write_manifest`].
pub fn read_manifest(path: &Path) -> Result<(ManifestHeader, Vec<String>)> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header: ManifestHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| Error::Msg(format!("{}: empty manifest", path.display())))?,
    )?;
    let ids = lines
        .map(|l| serde_json::from_str::<IdRecord>(l).map(|r| r.id))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, ids))
}
