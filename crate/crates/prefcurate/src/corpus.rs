//! Data model and ingestion for comparisons, posts, references and
//! quality-annotated summaries.
//!
//! A comparison is keyed by the unordered pair of summary texts under a post;
//! presentation order is normalized lexicographically at ingestion so the
//! same pair seen in either order merges into one vote tally.
//!
//! File formats (all JSONL, UTF-8):
//! - comparisons: `{"id","post_id","summary_a","summary_b","votes_a","votes_b","policy_a","policy_b"}`
//! - posts: `{"id","title","body","source_tag"}`
//! - quality annotations: `{"id","source_text","summary","coherence","consistency","fluency","relevance"}`
//!   (an optional `"system"` tag is accepted for system-level aggregation)
//! - references: `{"post_id","reference_summary"}`

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::provenance::hash_bytes;

/// Fraction of malformed lines above which ingestion aborts.
pub const MALFORMED_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub title: String,
    pub body: String,
    pub source_tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub id: String,
    pub post_id: String,
    pub summary_a: String,
    pub summary_b: String,
    pub votes_a: u32,
    pub votes_b: u32,
    pub policy_a: String,
    pub policy_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferencePair {
    pub post_id: String,
    pub reference_summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAnnotatedSummary {
    pub id: String,
    pub source_text: String,
    pub summary: String,
    pub coherence: f64,
    pub consistency: f64,
    pub fluency: f64,
    pub relevance: f64,
    /// Optional system tag used only by system-level aggregation.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub system: String,
}

impl Comparison {
    /// Build a normalized comparison: texts trimmed, summaries ordered
    /// lexicographically (votes and policy tags swapped along).
    ///
    /// Returns `None` when the pair is degenerate (equal summaries after
    /// trimming) or carries no votes.
    pub fn normalized(
        id: impl Into<String>,
        post_id: impl Into<String>,
        summary_a: &str,
        summary_b: &str,
        votes_a: u32,
        votes_b: u32,
        policy_a: &str,
        policy_b: &str,
    ) -> Option<Comparison> {
        let (a, b) = (summary_a.trim(), summary_b.trim());
        if a == b || votes_a + votes_b == 0 {
            return None;
        }
        let mut cmp = Comparison {
            id: id.into(),
            post_id: post_id.into(),
            summary_a: a.to_string(),
            summary_b: b.to_string(),
            votes_a,
            votes_b,
            policy_a: policy_a.to_string(),
            policy_b: policy_b.to_string(),
        };
        if cmp.summary_b < cmp.summary_a {
            std::mem::swap(&mut cmp.summary_a, &mut cmp.summary_b);
            std::mem::swap(&mut cmp.votes_a, &mut cmp.votes_b);
            std::mem::swap(&mut cmp.policy_a, &mut cmp.policy_b);
        }
        Some(cmp)
    }

    /// Total annotator judgements on this comparison.
    pub fn repetitions(&self) -> u32 {
        self.votes_a + self.votes_b
    }
}

/// Supported comparison file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per already-tallied comparison.
    Canonical,
    /// Per-judgement records in the public TL;DR comparison layout.
    TldrOpenai,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(CorpusFormat::Canonical),
            "tldr-openai" => Ok(CorpusFormat::TldrOpenai),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Canonical => "canonical",
            CorpusFormat::TldrOpenai => "tldr-openai",
        })
    }
}

/// Line-level ingestion accounting. Malformed lines are counted and carried
/// as diagnostics instead of being silently dropped.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// Non-blank lines seen.
    pub total_lines: usize,
    /// Lines that produced or merged into a comparison.
    pub valid_lines: usize,
    pub malformed_lines: usize,
    /// Judgements or duplicate records folded into an existing tally.
    pub merged: usize,
    /// First few malformed-line diagnostics, `(line_number, message)`.
    pub diagnostics: Vec<(usize, String)>,
}

impl IngestReport {
    const MAX_DIAGNOSTICS: usize = 8;

    fn reject(&mut self, line_no: usize, msg: impl Into<String>) {
        self.malformed_lines += 1;
        if self.diagnostics.len() < Self::MAX_DIAGNOSTICS {
            self.diagnostics.push((line_no, msg.into()));
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub comparisons: Vec<Comparison>,
    /// Posts embedded in the input (TL;DR format only; empty for canonical).
    pub posts: Vec<Post>,
    pub report: IngestReport,
}

/// The public TL;DR comparison layout: one judgement per line, with the post
/// embedded under `info` and the chosen summary index under `choice`.
#[derive(Debug, Deserialize)]
struct TldrJudgement {
    info: TldrInfo,
    summaries: Vec<TldrSummary>,
    choice: u32,
}

#[derive(Debug, Deserialize)]
struct TldrInfo {
    #[serde(default)]
    id: String,
    post: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    subreddit: String,
}

#[derive(Debug, Deserialize)]
struct TldrSummary {
    text: String,
    #[serde(default)]
    policy: String,
}

/// Load a comparison corpus, merging per-judgement (or duplicated) records
/// for the same `(post, summary pair)` into vote tallies.
///
/// Aborts with [`Error::MalformedExcess`] when more than
/// [`MALFORMED_TOLERANCE`] of the lines fail to parse, and with
/// [`Error::EmptyCorpus`] when nothing valid remains.
pub fn load_comparisons(path: &Path, format: CorpusFormat) -> Result<IngestOutcome> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut report = IngestReport::default();
    let mut merger = ComparisonMerger::default();
    let mut posts: Vec<Post> = Vec::new();
    let mut seen_posts: HashMap<String, usize> = HashMap::new();

    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        let outcome = match format {
            CorpusFormat::Canonical => ingest_canonical_line(line, &mut merger),
            CorpusFormat::TldrOpenai => {
                ingest_tldr_line(line, &mut merger, &mut posts, &mut seen_posts)
            }
        };
        match outcome {
            Ok(merged) => {
                report.valid_lines += 1;
                if merged {
                    report.merged += 1;
                }
            }
            Err(msg) => report.reject(line_no, msg),
        }
    }

    if report.valid_lines == 0 {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    if report.malformed_lines as f64 > MALFORMED_TOLERANCE * report.total_lines as f64 {
        let first = report
            .diagnostics
            .first()
            .map(|(n, m)| format!("line {n}: {m}"))
            .unwrap_or_default();
        return Err(Error::MalformedExcess {
            path: path.into(),
            malformed: report.malformed_lines,
            total: report.total_lines,
            limit: MALFORMED_TOLERANCE * 100.0,
            first,
        });
    }

    Ok(IngestOutcome {
        comparisons: merger.into_comparisons(),
        posts,
        report,
    })
}

/// Accumulates comparisons keyed by `(post_id, summary_a, summary_b)` in
/// first-seen order.
#[derive(Default)]
struct ComparisonMerger {
    order: Vec<Comparison>,
    by_key: HashMap<(String, String, String), usize>,
    used_ids: HashMap<String, (String, String, String)>,
}

impl ComparisonMerger {
    /// Returns `Ok(true)` when the record merged into an existing tally.
    fn insert(&mut self, cmp: Comparison) -> std::result::Result<bool, String> {
        let key = (
            cmp.post_id.clone(),
            cmp.summary_a.clone(),
            cmp.summary_b.clone(),
        );
        if let Some(&i) = self.by_key.get(&key) {
            self.order[i].votes_a += cmp.votes_a;
            self.order[i].votes_b += cmp.votes_b;
            return Ok(true);
        }
        if let Some(other) = self.used_ids.get(&cmp.id) {
            if *other != key {
                return Err(format!("duplicate comparison id {:?}", cmp.id));
            }
        }
        self.used_ids.insert(cmp.id.clone(), key.clone());
        self.by_key.insert(key, self.order.len());
        self.order.push(cmp);
        Ok(false)
    }

    fn into_comparisons(self) -> Vec<Comparison> {
        self.order
    }
}

fn ingest_canonical_line(
    line: &str,
    merger: &mut ComparisonMerger,
) -> std::result::Result<bool, String> {
    let raw: Comparison = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.id.trim().is_empty() {
        return Err("empty comparison id".into());
    }
    if raw.post_id.trim().is_empty() {
        return Err("empty post_id".into());
    }
    let cmp = Comparison::normalized(
        raw.id,
        raw.post_id,
        &raw.summary_a,
        &raw.summary_b,
        raw.votes_a,
        raw.votes_b,
        &raw.policy_a,
        &raw.policy_b,
    )
    .ok_or("degenerate comparison (equal summaries or zero votes)")?;
    merger.insert(cmp)
}

fn ingest_tldr_line(
    line: &str,
    merger: &mut ComparisonMerger,
    posts: &mut Vec<Post>,
    seen_posts: &mut HashMap<String, usize>,
) -> std::result::Result<bool, String> {
    let j: TldrJudgement = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if j.summaries.len() != 2 {
        return Err(format!("expected 2 summaries, got {}", j.summaries.len()));
    }
    if j.choice > 1 {
        return Err(format!("choice {} out of range", j.choice));
    }
    let body = j.info.post.trim();
    if body.is_empty() {
        return Err("empty post body".into());
    }
    let post_id = if j.info.id.trim().is_empty() {
        format!("p{}", &hash_bytes(body.as_bytes())[..12])
    } else {
        j.info.id.trim().to_string()
    };
    if !seen_posts.contains_key(&post_id) {
        seen_posts.insert(post_id.clone(), posts.len());
        posts.push(Post {
            id: post_id.clone(),
            title: j.info.title.trim().to_string(),
            body: body.to_string(),
            source_tag: j.info.subreddit.trim().to_string(),
        });
    }

    let (s0, s1) = (&j.summaries[0], &j.summaries[1]);
    let (votes_0, votes_1) = if j.choice == 0 { (1, 0) } else { (0, 1) };
    let cmp = Comparison::normalized(
        pair_comparison_id(&post_id, s0.text.trim(), s1.text.trim()),
        &post_id,
        &s0.text,
        &s1.text,
        votes_0,
        votes_1,
        &s0.policy,
        &s1.policy,
    )
    .ok_or("judgement with identical summaries")?;
    merger.insert(cmp)
}

/// Deterministic id for a (post, summary pair) comparison assembled from
/// per-judgement records.
fn pair_comparison_id(post_id: &str, text_a: &str, text_b: &str) -> String {
    let (lo, hi) = if text_a <= text_b {
        (text_a, text_b)
    } else {
        (text_b, text_a)
    };
    let digest = hash_bytes(format!("{lo}\u{1f}{hi}").as_bytes());
    format!("{post_id}-{}", &digest[..12])
}

/// Keep exactly the comparisons judged by more than one annotator,
/// preserving input order.
pub fn filter_multi_annotated(comparisons: &[Comparison]) -> Vec<Comparison> {
    comparisons
        .iter()
        .filter(|c| c.repetitions() >= 2)
        .cloned()
        .collect()
}

#[derive(Debug, Clone)]
pub struct QualityOutcome {
    pub summaries: Vec<QualityAnnotatedSummary>,
    /// Rejected records, `(line_number, message)`.
    pub rejected: Vec<(usize, String)>,
}

/// Load quality-annotated summaries, averaging repeated expert records for
/// the same summary id. Records with any rating outside `[1, 5]` are
/// rejected with a diagnostic.
pub fn load_quality_annotations(path: &Path) -> Result<QualityOutcome> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut acc: HashMap<String, (QualityAnnotatedSummary, usize)> = HashMap::new();
    let mut rejected = Vec::new();

    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: QualityAnnotatedSummary = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                rejected.push((line_no, e.to_string()));
                continue;
            }
        };
        let ratings = [rec.coherence, rec.consistency, rec.fluency, rec.relevance];
        if let Some(bad) = ratings.iter().find(|r| !(1.0..=5.0).contains(*r)) {
            rejected.push((line_no, format!("rating {bad} outside [1, 5]")));
            continue;
        }
        match acc.get_mut(&rec.id) {
            None => {
                order.push(rec.id.clone());
                acc.insert(rec.id.clone(), (rec, 1));
            }
            Some((agg, n)) => {
                if agg.summary != rec.summary || agg.source_text != rec.source_text {
                    rejected.push((line_no, format!("id {:?} reused for different text", rec.id)));
                    continue;
                }
                agg.coherence += rec.coherence;
                agg.consistency += rec.consistency;
                agg.fluency += rec.fluency;
                agg.relevance += rec.relevance;
                *n += 1;
            }
        }
    }

    let summaries: Vec<QualityAnnotatedSummary> = order
        .into_iter()
        .map(|id| {
            let (mut s, n) = acc.remove(&id).expect("id recorded in order");
            let n = n as f64;
            s.coherence /= n;
            s.consistency /= n;
            s.fluency /= n;
            s.relevance /= n;
            s
        })
        .collect();

    if summaries.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok(QualityOutcome { summaries, rejected })
}

/// Load posts, enforcing unique ids and non-empty bodies.
pub fn load_posts(path: &Path) -> Result<Vec<Post>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let post: Post = serde_json::from_str(line)
            .map_err(|e| Error::Msg(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        if post.body.trim().is_empty() {
            return Err(Error::Msg(format!(
                "{}:{}: post {:?} has an empty body",
                path.display(),
                idx + 1,
                post.id
            )));
        }
        if seen.insert(post.id.clone(), ()).is_some() {
            return Err(Error::Msg(format!(
                "{}:{}: duplicate post id {:?}",
                path.display(),
                idx + 1,
                post.id
            )));
        }
        posts.push(post);
    }
    if posts.is_empty() {
        return Err(Error::EmptyCorpus { path: path.into() });
    }
    Ok(posts)
}

/// Load reference summaries.
pub fn load_references(path: &Path) -> Result<Vec<ReferencePair>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut refs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ReferencePair = serde_json::from_str(line)
            .map_err(|e| Error::Msg(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        if r.reference_summary.trim().is_empty() {
            return Err(Error::Msg(format!(
                "{}:{}: empty reference for post {:?}",
                path.display(),
                idx + 1,
                r.post_id
            )));
        }
        refs.push(r);
    }
    Ok(refs)
}

/// Write any serializable records as JSONL.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Post lookup by id.
#[derive(Debug, Clone, Default)]
pub struct PostIndex {
    by_id: HashMap<String, Post>,
}

impl PostIndex {
    pub fn new(posts: impl IntoIterator<Item = Post>) -> Self {
        PostIndex {
            by_id: posts.into_iter().map(|p| (p.id.clone(), p)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Post> {
        self.by_id.get(id)
    }

    pub fn body(&self, id: &str) -> Option<&str> {
        self.by_id.get(id).map(|p| p.body.as_str())
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp(lines: &[&str]) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn tldr_line(post: &str, a: &str, b: &str, choice: u32) -> String {
        serde_json::json!({
            "info": {"id": post, "post": format!("body of {post}"), "title": "t", "subreddit": "r"},
            "summaries": [{"text": a, "policy": "sup"}, {"text": b, "policy": "ref"}],
            "choice": choice,
            "worker": "w1"
        })
        .to_string()
    }

    fn canonical_line(id: &str, post: &str, a: &str, b: &str, va: u32, vb: u32) -> String {
        serde_json::to_string(
            &Comparison::normalized(id, post, a, b, va, vb, "", "").expect("valid"),
        )
        .unwrap()
    }

    #[test]
    fn two_judgements_merge_into_one_tally() {
        let f = write_temp(&[
            &tldr_line("p1", "sum one", "sum two", 0),
            &tldr_line("p1", "sum one", "sum two", 1),
        ]);
        let out = load_comparisons(f.path(), CorpusFormat::TldrOpenai).unwrap();
        assert_eq!(out.comparisons.len(), 1);
        let c = &out.comparisons[0];
        assert_eq!((c.votes_a, c.votes_b), (1, 1));
        assert_eq!(out.posts.len(), 1);
        assert_eq!(out.report.merged, 1);
    }

    #[test]
    fn zero_valid_lines_is_empty_corpus() {
        let f = write_temp(&["not json", "{\"also\": \"wrong\"}"]);
        let err = load_comparisons(f.path(), CorpusFormat::TldrOpenai).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus { .. }), "{err}");
    }

    #[test]
    fn canonical_fixture_preserves_ids() {
        let lines: Vec<String> = (0..5)
            .map(|i| {
                canonical_line(
                    &format!("c{i}"),
                    &format!("p{i}"),
                    &format!("alpha {i}"),
                    &format!("beta {i}"),
                    i + 1,
                    2,
                )
            })
            .collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_temp(&refs);
        let out = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(out.comparisons.len(), 5);
        let ids: Vec<&str> = out.comparisons.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["c0", "c1", "c2", "c3", "c4"]);
        assert!(out.posts.is_empty());
    }

    #[test]
    fn presentation_order_is_normalized_and_merged() {
        let f = write_temp(&[
            &canonical_line("x1", "p", "bbb", "aaa", 1, 2),
            &canonical_line("x2", "p", "aaa", "bbb", 2, 1),
        ]);
        let out = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(out.comparisons.len(), 1);
        let c = &out.comparisons[0];
        assert_eq!(c.summary_a, "aaa");
        // (bbb,aaa,1,2) normalizes to (aaa,bbb,2,1); merged with (aaa,bbb,2,1)
        assert_eq!((c.votes_a, c.votes_b), (4, 2));
        assert_eq!(c.id, "x1");
    }

    #[test]
    fn malformed_excess_aborts() {
        let good = canonical_line("c1", "p1", "one", "two", 1, 0);
        let f = write_temp(&[&good, "junk", "more junk"]);
        let err = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap_err();
        assert!(matches!(err, Error::MalformedExcess { .. }), "{err}");
    }

    #[test]
    fn malformed_within_tolerance_is_reported() {
        let mut lines: Vec<String> = (0..20)
            .map(|i| canonical_line(&format!("c{i}"), "p", &format!("a{i}"), &format!("b{i}"), 1, 0))
            .collect();
        lines.push("junk".to_string());
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_temp(&refs);
        let out = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(out.comparisons.len(), 20);
        assert_eq!(out.report.malformed_lines, 1);
        assert_eq!(out.report.diagnostics.len(), 1);
    }

    #[test]
    fn unknown_format_tag() {
        assert!(matches!(
            "protobuf".parse::<CorpusFormat>(),
            Err(Error::UnknownFormat(_))
        ));
        assert_eq!(
            "canonical".parse::<CorpusFormat>().unwrap(),
            CorpusFormat::Canonical
        );
    }

    #[test]
    fn duplicate_id_different_pair_is_malformed() {
        let mut lines = vec![
            canonical_line("dup", "p", "one", "two", 1, 0),
            canonical_line("dup", "p", "three", "four", 1, 0),
        ];
        for i in 0..10 {
            lines.push(canonical_line(&format!("c{i}"), "p", &format!("x{i}"), &format!("y{i}"), 1, 0));
        }
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_temp(&refs);
        let out = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap();
        assert_eq!(out.comparisons.len(), 11);
        assert_eq!(out.report.malformed_lines, 1);
        assert!(out.report.diagnostics[0].1.contains("duplicate"));
    }

    #[test]
    fn filter_multi_annotated_keeps_repeats_in_order() {
        let mk = |id: &str, va, vb| {
            Comparison::normalized(id, "p", &format!("a {id}"), &format!("b {id}"), va, vb, "", "")
                .unwrap()
        };
        let corpus = vec![mk("c1", 1, 0), mk("c2", 1, 1), mk("c3", 0, 3)];
        let kept = filter_multi_annotated(&corpus);
        assert_eq!(
            kept.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
            vec!["c2", "c3"]
        );
        assert!(filter_multi_annotated(&[]).is_empty());
    }

    #[test]
    fn filter_multi_annotated_fixture_count() {
        // 10 comparisons, 4 singletons -> 6 survivors
        let corpus: Vec<Comparison> = (0..10)
            .map(|i| {
                let votes = if i % 5 < 2 { (1, 0) } else { (2, i as u32) };
                Comparison::normalized(
                    &format!("c{i}"),
                    "p",
                    &format!("a{i}"),
                    &format!("b{i}"),
                    votes.0,
                    votes.1,
                    "",
                    "",
                )
                .unwrap()
            })
            .collect();
        assert_eq!(filter_multi_annotated(&corpus).len(), 6);
    }

    fn quality_line(id: &str, co: f64, cn: f64, fl: f64, re: f64) -> String {
        serde_json::json!({
            "id": id, "source_text": format!("src {id}"), "summary": format!("sum {id}"),
            "coherence": co, "consistency": cn, "fluency": fl, "relevance": re
        })
        .to_string()
    }

    #[test]
    fn quality_accepts_in_range_and_rejects_out_of_range() {
        let f = write_temp(&[
            &quality_line("q1", 5.0, 5.0, 5.0, 5.0),
            &quality_line("q2", 3.0, 3.0, 6.0, 3.0),
        ]);
        let out = load_quality_annotations(f.path()).unwrap();
        assert_eq!(out.summaries.len(), 1);
        assert_eq!(out.summaries[0].id, "q1");
        assert_eq!(out.rejected.len(), 1);
        assert!(out.rejected[0].1.contains("outside"));
    }

    #[test]
    fn quality_averages_expert_records_per_summary() {
        // 16 summaries, 3 expert records each; expert ratings 2, 3, 4 -> mean 3
        let mut lines = Vec::new();
        for i in 0..16 {
            for r in [2.0, 3.0, 4.0] {
                lines.push(quality_line(&format!("s{i}"), r, r, r, 5.0));
            }
        }
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_temp(&refs);
        let out = load_quality_annotations(f.path()).unwrap();
        assert_eq!(out.summaries.len(), 16);
        for s in &out.summaries {
            assert!((s.coherence - 3.0).abs() < 1e-12);
            assert!((s.fluency - 3.0).abs() < 1e-12);
            assert!((s.relevance - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posts_round_trip_and_validate() {
        let posts = vec![
            Post {
                id: "p1".into(),
                title: "T".into(),
                body: "Body text.".into(),
                source_tag: "r/test".into(),
            },
            Post {
                id: "p2".into(),
                title: String::new(),
                body: "More.".into(),
                source_tag: String::new(),
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(f.path(), &posts).unwrap();
        assert_eq!(load_posts(f.path()).unwrap(), posts);
    }

    proptest! {
        /// Canonical write -> load is the identity on normalized corpora.
        #[test]
        fn canonical_round_trip(seed_texts in proptest::collection::vec("[a-z]{1,8}", 2..20)) {
            let mut corpus = Vec::new();
            for (i, t) in seed_texts.iter().enumerate() {
                let a = format!("{t} left {i}");
                let b = format!("{t} right {i}");
                if let Some(c) = Comparison::normalized(
                    format!("c{i}"), format!("p{}", i % 3), &a, &b,
                    (i % 7) as u32, ((i + 1) % 5) as u32, "polA", "polB",
                ) {
                    corpus.push(c);
                }
            }
            prop_assume!(!corpus.is_empty());
            let f = tempfile::NamedTempFile::new().unwrap();
            write_jsonl(f.path(), &corpus).unwrap();
            let loaded = load_comparisons(f.path(), CorpusFormat::Canonical).unwrap();
            prop_assert_eq!(loaded.comparisons, corpus);
        }

        /// Duplicating every judgement k times scales tallies by exactly k.
        #[test]
        fn merge_idempotence(k in 1usize..5, n in 1usize..8) {
            let base: Vec<String> = (0..n)
                .map(|i| tldr_line(&format!("p{}", i % 3), &format!("one {i}"), &format!("two {i}"), (i % 2) as u32))
                .collect();
            let single: Vec<&str> = base.iter().map(String::as_str).collect();
            let f1 = write_temp(&single);
            let once = load_comparisons(f1.path(), CorpusFormat::TldrOpenai).unwrap();

            let mut dup = Vec::new();
            for l in &base {
                for _ in 0..k {
                    dup.push(l.as_str());
                }
            }
            let f2 = write_temp(&dup);
            let many = load_comparisons(f2.path(), CorpusFormat::TldrOpenai).unwrap();

            prop_assert_eq!(once.comparisons.len(), many.comparisons.len());
            for (a, b) in once.comparisons.iter().zip(&many.comparisons) {
                prop_assert_eq!(&a.id, &b.id);
                prop_assert_eq!(b.votes_a, a.votes_a * k as u32);
                prop_assert_eq!(b.votes_b, a.votes_b * k as u32);
            }
        }

        /// Vote tallies are invariant under permutation of judgement lines.
        #[test]
        fn order_independence(perm_seed in 0u64..1000, n in 2usize..10) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let base: Vec<String> = (0..n)
                .map(|i| tldr_line(&format!("p{}", i % 2), &format!("s{}", i % 4), &format!("t{}", i % 4), (i % 2) as u32))
                .collect();
            let ordered: Vec<&str> = base.iter().map(String::as_str).collect();
            let f1 = write_temp(&ordered);
            let first = load_comparisons(f1.path(), CorpusFormat::TldrOpenai).unwrap();

            let mut shuffled = base.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let refs: Vec<&str> = shuffled.iter().map(String::as_str).collect();
            let f2 = write_temp(&refs);
            let second = load_comparisons(f2.path(), CorpusFormat::TldrOpenai).unwrap();

            let key = |c: &Comparison| (c.id.clone(), c.votes_a, c.votes_b);
            let mut lhs: Vec<_> = first.comparisons.iter().map(key).collect();
            let mut rhs: Vec<_> = second.comparisons.iter().map(key).collect();
            lhs.sort();
            rhs.sort();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
