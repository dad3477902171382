//! Shared text primitives: tokenization, n-grams, sentence splitting.
//!
//! Every component that looks at text (featurizer, quality oracle, ROUGE)
//! goes through [`tokenize`] so scores stay comparable across modules.

use std::collections::BTreeSet;

/// Minimum character length for a token to count as a keyword.
pub const KEYWORD_MIN_LEN: usize = 4;

/// Lowercase and split on runs of non-alphanumeric characters.
pub fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Contiguous n-grams of `tokens`, each joined with a single space.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// Distinct tokens of at least [`KEYWORD_MIN_LEN`] characters.
///
/// Falls back to all distinct tokens when nothing is long enough, so that a
/// keyword set is never empty for non-empty text.
pub fn keywords(s: &str) -> BTreeSet<String> {
    let tokens = tokenize(s);
    let long: BTreeSet<String> = tokens
        .iter()
        .filter(|t| t.chars().count() >= KEYWORD_MIN_LEN)
        .cloned()
        .collect();
    if long.is_empty() {
        tokens.into_iter().collect()
    } else {
        long
    }
}

/// Fraction of bigram occurrences that repeat an earlier bigram.
///
/// 0.0 when all bigrams are distinct (or there are none), approaching 1.0 for
/// highly repetitive text.
pub fn repeated_bigram_fraction(tokens: &[String]) -> f64 {
    let grams = ngrams(tokens, 2);
    if grams.is_empty() {
        return 0.0;
    }
    let distinct: BTreeSet<&String> = grams.iter().collect();
    (grams.len() - distinct.len()) as f64 / grams.len() as f64
}

/// Split text into sentences on `.`, `!` and `?` runs.
///
/// Keeps sentence order, trims whitespace and drops empty fragments. Text
/// without any terminator is a single sentence.
pub fn sentences(s: &str) -> Vec<String> {
    s.split(|c: char| matches!(c, '.' | '!' | '?'))
        .map(str::trim)
        .filter(|frag| !frag.is_empty())
        .map(str::to_string)
        .collect()
}
