//! Synthetic preference corpora with a known quality oracle.
//!
//! Each post gets a handful of candidate summaries built by perturbing
//! extractive keyword selections (dropping keywords, padding length,
//! repeating filler), so candidate quality varies smoothly and the latent
//! quality differential of every comparison is known exactly. Annotators are
//! simulated as independent Bradley-Terry voters over that differential,
//! which makes agreement a noisy monotone function of |q_a - q_b| by
//! construction.
//!
//! Per-post RNG streams are derived from `(seed, post index)`, so generation
//! order (or parallelism) cannot change the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::corpus::{Comparison, Post, QualityAnnotatedSummary, ReferencePair};
use crate::error::{Error, Result};
use crate::text;

/// Deterministic scalar quality score for a (post, summary) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityOracle {
    pub keyword_weight: f64,
    pub length_weight: f64,
    pub repetition_weight: f64,
    /// Preferred summary length in tokens.
    pub target_length: usize,
}

impl Default for QualityOracle {
    fn default() -> Self {
        QualityOracle {
            keyword_weight: 2.0,
            length_weight: 1.0,
            repetition_weight: 1.0,
            target_length: 24,
        }
    }
}

impl QualityOracle {
    /// `q = kw_w * coverage + len_w * exp(-|len - target| / target)
    ///      - rep_w * repeated_bigram_fraction`
    pub fn score(&self, post: &Post, summary: &str) -> f64 {
        let post_kw = text::keywords(&format!("{} {}", post.title, post.body));
        let tokens = text::tokenize(summary);
        let covered = post_kw.iter().filter(|k| tokens.contains(k)).count();
        let coverage = if post_kw.is_empty() {
            0.0
        } else {
            covered as f64 / post_kw.len() as f64
        };
        let len_term = (-((tokens.len() as f64 - self.target_length as f64).abs()
            / self.target_length as f64))
            .exp();
        self.keyword_weight * coverage + self.length_weight * len_term
            - self.repetition_weight * text::repeated_bigram_fraction(&tokens)
    }
}

/// Free-function form of [`QualityOracle::score`].
pub fn oracle_score(oracle: &QualityOracle, post: &Post, summary: &str) -> f64 {
    oracle.score(post, summary)
}

/// Independent Bradley-Terry voters over a quality differential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorModel {
    /// Discrimination: 0 is pure noise, large values saturate to unanimity.
    pub beta: f64,
    pub annotators_per_comparison: u32,
}

impl Default for AnnotatorModel {
    fn default() -> Self {
        AnnotatorModel {
            beta: 2.0,
            annotators_per_comparison: 22,
        }
    }
}

impl AnnotatorModel {
    /// `P(vote for a) = logistic(beta * (q_a - q_b))`.
    pub fn vote_probability(&self, quality_diff: f64) -> f64 {
        logistic(self.beta * quality_diff)
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Ground-truth sidecar record; kept out of the canonical corpus files so the
/// training pipeline cannot consume it by accident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSidecar {
    pub comparison_id: String,
    pub q_a: f64,
    pub q_b: f64,
}

impl OracleSidecar {
    pub fn quality_diff_abs(&self) -> f64 {
        (self.q_a - self.q_b).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_posts: usize,
    pub candidates_per_post: usize,
    pub oracle: QualityOracle,
    pub annotator: AnnotatorModel,
    /// How many posts contribute synthetic expert quality records.
    pub quality_posts: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_posts: 200,
            candidates_per_post: 2,
            oracle: QualityOracle::default(),
            annotator: AnnotatorModel::default(),
            quality_posts: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<Post>,
    pub comparisons: Vec<Comparison>,
    pub references: Vec<ReferencePair>,
    pub quality: Vec<QualityAnnotatedSummary>,
    pub sidecar: Vec<OracleSidecar>,
}

const CONTENT_WORDS: &[&str] = &[
    "engine", "harbor", "signal", "garden", "bridge", "planet", "window", "butter", "castle",
    "furnace", "lantern", "meadow", "needle", "orchard", "pillar", "quarry", "ribbon", "saddle",
    "timber", "valley", "walnut", "anchor", "basket", "candle", "dagger", "ember", "falcon",
    "goblet", "hammer", "island", "jacket", "kettle", "ladder", "marble", "nectar", "oyster",
    "parrot", "quiver", "rocket", "shovel", "tunnel", "ultras", "velvet", "wagon", "yonder",
    "zephyr", "almond", "bucket", "cellar", "donkey", "eagles", "fabric", "glacier", "hollow",
    "ingot", "jungle", "kernel", "lagoon", "mantle", "nugget", "outlet", "pebble", "quartz",
    "raven", "spruce", "tablet", "urchin", "violet", "willow", "copper", "barrel", "canyon",
    "desert", "ferret", "grotto", "hazard", "iceberg", "jigsaw", "knight", "lumber", "magnet",
    "napkin", "oracle", "packet", "quilt", "ridge", "sonar", "turnip", "uphill", "vessel",
    "whistle", "yeoman", "zenith", "branch", "crater", "dynamo", "estate", "forest", "gravel",
    "horizon", "insect", "jubilee", "keystone", "lattice", "monsoon", "narrows", "obelisk",
    "paddock", "quagmire", "rampart", "satchel", "terrace", "umbrella", "vineyard", "warden",
];

const FILLER_WORDS: &[&str] = &[
    "the", "a", "an", "of", "to", "in", "on", "and", "or", "is", "was", "it", "at", "by", "we",
    "so",
];

/// Deterministic per-post RNG stream derived from `(seed, stream tag, index)`.
fn stream_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 48) ^ index);
    rng
}

fn make_post(rng: &mut ChaCha8Rng, index: usize) -> Post {
    let n_sentences = rng.random_range(5..=8);
    let mut body = String::new();
    for _ in 0..n_sentences {
        let n_tokens = rng.random_range(7..=11);
        let mut sent = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            if rng.random_range(0.0..1.0) < 0.65 {
                sent.push(CONTENT_WORDS[rng.random_range(0..CONTENT_WORDS.len())]);
            } else {
                sent.push(FILLER_WORDS[rng.random_range(0..FILLER_WORDS.len())]);
            }
        }
        body.push_str(&sent.join(" "));
        body.push_str(". ");
    }
    let title: Vec<&str> = (0..rng.random_range(3..=5))
        .map(|_| CONTENT_WORDS[rng.random_range(0..CONTENT_WORDS.len())])
        .collect();
    Post {
        id: format!("p{index:05}"),
        title: title.join(" "),
        body: body.trim().to_string(),
        source_tag: "synthetic".to_string(),
    }
}

/// A candidate summary at degradation level `d` in [0, 1]: smaller `d` keeps
/// more keywords, stays nearer the target length and repeats less.
fn make_candidate(
    rng: &mut ChaCha8Rng,
    keywords: &BTreeSet<String>,
    target_length: usize,
    d: f64,
) -> String {
    let keep_p = (0.97 - 0.92 * d).clamp(0.0, 1.0);
    let mut tokens: Vec<String> = keywords
        .iter()
        .filter(|_| rng.random_range(0.0..1.0) < keep_p)
        .cloned()
        .collect();

    let stretch = rng.random_range(-0.5..1.6);
    let desired = ((target_length as f64) * (1.0 + d * stretch)).round().max(2.0) as usize;
    if tokens.len() > desired {
        tokens.truncate(desired);
    } else {
        // pad with a filler cycle; high degradation shortens the cycle,
        // which drives up the repeated-bigram fraction
        let cycle = ((FILLER_WORDS.len() as f64) * (1.0 - 0.85 * d)).round().max(2.0) as usize;
        let start = rng.random_range(0..FILLER_WORDS.len());
        let mut t = 0;
        while tokens.len() < desired {
            tokens.push(FILLER_WORDS[(start + t) % cycle].to_string());
            t += 1;
        }
    }
    if tokens.is_empty() {
        tokens.push(FILLER_WORDS[0].to_string());
    }
    tokens.join(" ")
}

/// Extractive reference: the two sentences covering the most distinct
/// keywords, in rank order.
fn make_reference(post: &Post) -> String {
    let kw = text::keywords(&format!("{} {}", post.title, post.body));
    let sents = text::sentences(&post.body);
    let mut ranked: Vec<(usize, usize)> = sents
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let toks: BTreeSet<String> = text::tokenize(s).into_iter().collect();
            (kw.iter().filter(|k| toks.contains(*k)).count(), i)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let take = ranked.len().min(2);
    let mut picked: Vec<usize> = ranked[..take].iter().map(|&(_, i)| i).collect();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| sents[i].clone())
        .collect::<Vec<_>>()
        .join(". ")
}

fn clamp_rating(x: f64) -> f64 {
    1.0 + 4.0 * x.clamp(0.0, 1.0)
}

/// Synthetic expert ratings derived from the oracle's component scores plus
/// a little seeded noise.
fn make_quality_record(
    rng: &mut ChaCha8Rng,
    oracle: &QualityOracle,
    post: &Post,
    id: String,
    summary: &str,
) -> QualityAnnotatedSummary {
    let kw = text::keywords(&format!("{} {}", post.title, post.body));
    let tokens = text::tokenize(summary);
    let coverage = if kw.is_empty() {
        0.0
    } else {
        kw.iter().filter(|k| tokens.contains(k)).count() as f64 / kw.len() as f64
    };
    let len_term = (-((tokens.len() as f64 - oracle.target_length as f64).abs()
        / oracle.target_length as f64))
        .exp();
    let fluff = 1.0 - text::repeated_bigram_fraction(&tokens);
    let mut noise = || rng.random_range(-0.07..0.07);
    QualityAnnotatedSummary {
        id,
        source_text: post.body.clone(),
        summary: summary.to_string(),
        coherence: clamp_rating(0.5 * fluff + 0.5 * len_term + noise()),
        consistency: clamp_rating(0.8 * coverage + 0.2 * fluff + noise()),
        fluency: clamp_rating(fluff + noise()),
        relevance: clamp_rating(coverage + noise()),
        system: String::new(),
    }
}

/// Generate a full synthetic corpus: posts, tallied comparisons over all
/// candidate pairs, extractive references, synthetic expert quality records
/// and the ground-truth oracle sidecar.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    if config.candidates_per_post < 2 {
        return Err(Error::InvalidConfig(
            "candidates_per_post must be at least 2".into(),
        ));
    }
    if config.n_posts == 0 {
        return Err(Error::InvalidConfig("n_posts must be positive".into()));
    }

    let m = config.annotator.annotators_per_comparison;
    if m == 0 {
        return Err(Error::InvalidConfig(
            "annotators_per_comparison must be positive".into(),
        ));
    }

    let mut corpus = SynthCorpus {
        posts: Vec::with_capacity(config.n_posts),
        comparisons: Vec::new(),
        references: Vec::with_capacity(config.n_posts),
        quality: Vec::new(),
        sidecar: Vec::new(),
    };

    for post_idx in 0..config.n_posts {
        let mut rng = stream_rng(config.seed, 1, post_idx as u64);
        let post = make_post(&mut rng, post_idx);
        let kw = text::keywords(&format!("{} {}", post.title, post.body));

        let mut candidates: Vec<String> = Vec::with_capacity(config.candidates_per_post);
        for _ in 0..config.candidates_per_post {
            let d = rng.random_range(0.0..1.0);
            let mut cand = make_candidate(&mut rng, &kw, config.oracle.target_length, d);
            // candidate texts under one post must stay pairwise distinct
            let mut bump = 0;
            while candidates.iter().any(|c| c.trim() == cand.trim()) {
                cand.push(' ');
                cand.push_str(CONTENT_WORDS[bump % CONTENT_WORDS.len()]);
                bump += 1;
            }
            candidates.push(cand);
        }
        let scores: Vec<f64> = candidates.iter().map(|c| config.oracle.score(&post, c)).collect();

        for i in 0..candidates.len() {
            for j in (i + 1)..candidates.len() {
                let p_i = config.annotator.vote_probability(scores[i] - scores[j]);
                let mut votes_i = 0u32;
                for _ in 0..m {
                    votes_i += u32::from(rng.random_range(0.0..1.0) < p_i);
                }
                let id = format!("{}-c{i}v{j}", post.id);
                let cmp = Comparison::normalized(
                    id.clone(),
                    &post.id,
                    &candidates[i],
                    &candidates[j],
                    votes_i,
                    m - votes_i,
                    "synth",
                    "synth",
                )
                .expect("candidates are distinct and m >= 1");
                let (q_a, q_b) = if cmp.summary_a == candidates[i].trim() {
                    (scores[i], scores[j])
                } else {
                    (scores[j], scores[i])
                };
                corpus.sidecar.push(OracleSidecar {
                    comparison_id: cmp.id.clone(),
                    q_a,
                    q_b,
                });
                corpus.comparisons.push(cmp);
            }
        }

        corpus.references.push(ReferencePair {
            post_id: post.id.clone(),
            reference_summary: make_reference(&post),
        });

        if post_idx < config.quality_posts {
            let mut qrng = stream_rng(config.seed, 2, post_idx as u64);
            for (j, cand) in candidates.iter().enumerate() {
                corpus.quality.push(make_quality_record(
                    &mut qrng,
                    &config.oracle,
                    &post,
                    format!("{}-cand{j}", post.id),
                    cand,
                ));
            }
        }

        corpus.posts.push(post);
    }

    Ok(corpus)
}

/// File names used by [`write_corpus`].
pub const POSTS_FILE: &str = "posts.jsonl";
pub const COMPARISONS_FILE: &str = "comparisons.jsonl";
pub const REFERENCES_FILE: &str = "references.jsonl";
pub const QUALITY_FILE: &str = "quality.jsonl";
pub const SIDECAR_FILE: &str = "oracle_sidecar.jsonl";

/// Write the corpus in the canonical JSONL formats plus the sidecar.
pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::corpus::write_jsonl(&dir.join(POSTS_FILE), &corpus.posts)?;
    crate::corpus::write_jsonl(&dir.join(COMPARISONS_FILE), &corpus.comparisons)?;
    crate::corpus::write_jsonl(&dir.join(REFERENCES_FILE), &corpus.references)?;
    crate::corpus::write_jsonl(&dir.join(QUALITY_FILE), &corpus.quality)?;
    crate::corpus::write_jsonl(&dir.join(SIDECAR_FILE), &corpus.sidecar)?;
    Ok(())
}

/// Load a sidecar file.
pub fn load_sidecar(path: &Path) -> Result<Vec<OracleSidecar>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
