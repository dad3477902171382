//! Per-comparison and corpus-level agreement statistics.
//!
//! Two per-comparison statistics are exposed: the modal fraction
//! ([`comparison_agreement`]), which drives sampling, and the probability
//! that two distinct annotators agree ([`pairwise_agreement`]), which mirrors
//! corpus-level agreement-rate reporting.

use serde::{Deserialize, Serialize};

use crate::corpus::Comparison;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRecord {
    pub comparison_id: String,
    /// Modal fraction `max(votes) / total`, in `[0.5, 1.0]`.
    pub agreement: f64,
    /// Total judgements on the comparison.
    pub repetitions: u32,
    /// Defined only when `repetitions >= 2`.
    pub pairwise_agreement: Option<f64>,
}

impl AgreementRecord {
    pub fn from_comparison(c: &Comparison) -> Result<AgreementRecord> {
        Ok(AgreementRecord {
            comparison_id: c.id.clone(),
            agreement: comparison_agreement(c.votes_a, c.votes_b)?,
            repetitions: c.repetitions(),
            pairwise_agreement: if c.repetitions() >= 2 {
                Some(pairwise_agreement(c.votes_a, c.votes_b)?)
            } else {
                None
            },
        })
    }
}

/// Agreement records for a whole corpus, in corpus order.
pub fn records(comparisons: &[Comparison]) -> Result<Vec<AgreementRecord>> {
    comparisons.iter().map(AgreementRecord::from_comparison).collect()
}

/// Modal fraction `max(votes_a, votes_b) / (votes_a + votes_b)`.
///
/// 0.5 is a perfect split, 1.0 unanimity. Symmetric in its arguments.
pub fn comparison_agreement(votes_a: u32, votes_b: u32) -> Result<f64> {
    let total = votes_a + votes_b;
    if total == 0 {
        return Err(Error::ZeroVotes);
    }
    Ok(f64::from(votes_a.max(votes_b)) / f64::from(total))
}

/// Probability that two distinct annotators of this comparison, drawn
/// without replacement, chose the same side:
/// `[C(a,2) + C(b,2)] / C(a+b, 2)`.
pub fn pairwise_agreement(votes_a: u32, votes_b: u32) -> Result<f64> {
    let total = votes_a + votes_b;
    if total < 2 {
        return Err(Error::TooFewVotes(total));
    }
    let pairs = |n: u32| f64::from(n) * f64::from(n.saturating_sub(1)) / 2.0;
    Ok((pairs(votes_a) + pairs(votes_b)) / pairs(total))
}

/// Outcome of aggregating k independent annotations by majority vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModalOutcome {
    A,
    B,
    /// Exact tie in the vote fractions; no mode exists.
    Tie,
}

/// Majority outcome of re-annotating with `k` annotators (odd), each voting
/// independently according to the empirical vote fraction.
///
/// Returns the mode of the majority distribution together with its
/// probability `P(majority == mode) = sum_{j > k/2} C(k,j) p^j (1-p)^(k-j)`
/// where `p` is the mode side's vote fraction; 0.5 for a tie.
pub fn modal_aggregate(votes_a: u32, votes_b: u32, k: u32) -> Result<(ModalOutcome, f64)> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::EvenModalCount(k));
    }
    let total = votes_a + votes_b;
    if total == 0 {
        return Err(Error::ZeroVotes);
    }
    if votes_a == votes_b {
        return Ok((ModalOutcome::Tie, 0.5));
    }
    let (outcome, winner_votes) = if votes_a > votes_b {
        (ModalOutcome::A, votes_a)
    } else {
        (ModalOutcome::B, votes_b)
    };
    let p = f64::from(winner_votes) / f64::from(total);
    Ok((outcome, majority_probability(p, k)))
}

/// `P(Binomial(k, p) > k/2)` via the pmf recurrence.
fn majority_probability(p: f64, k: u32) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let mut pmf = q.powi(k as i32);
    let mut tail = 0.0;
    for j in 0..=k {
        if j > k / 2 {
            tail += pmf;
        }
        if j < k {
            pmf *= (f64::from(k - j) / f64::from(j + 1)) * (p / q);
        }
    }
    tail.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStatistics {
    pub n: usize,
    pub mean_agreement: f64,
    /// Mean over comparisons with at least two judgements; `None` when the
    /// corpus has no such comparison.
    pub mean_pairwise_agreement: Option<f64>,
    /// Right-closed equal-width bins covering `[0.5, 1.0]`.
    pub agreement_histogram: Vec<HistogramBin>,
    /// `(repetitions, count)` sorted by repetitions.
    pub repetition_histogram: Vec<(u32, usize)>,
}

/// Corpus-level summary of agreement records.
pub fn corpus_statistics(records: &[AgreementRecord], bins: usize) -> Result<CorpusStatistics> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }

    let mean_agreement = records.iter().map(|r| r.agreement).sum::<f64>() / records.len() as f64;
    let pairwise: Vec<f64> = records.iter().filter_map(|r| r.pairwise_agreement).collect();
    let mean_pairwise_agreement = if pairwise.is_empty() {
        None
    } else {
        Some(pairwise.iter().sum::<f64>() / pairwise.len() as f64)
    };

    let width = 0.5 / bins as f64;
    let mut agreement_histogram: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: 0.5 + i as f64 * width,
            hi: 0.5 + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for r in records {
        agreement_histogram[agreement_bin(r.agreement, bins)].count += 1;
    }

    let mut reps = std::collections::BTreeMap::new();
    for r in records {
        *reps.entry(r.repetitions).or_insert(0usize) += 1;
    }

    Ok(CorpusStatistics {
        n: records.len(),
        mean_agreement,
        mean_pairwise_agreement,
        agreement_histogram,
        repetition_histogram: reps.into_iter().collect(),
    })
}

/// Bin index for an agreement value under right-closed equal-width binning
/// of `[0.5, 1.0]`; the first bin also includes its left edge.
pub fn agreement_bin(agreement: f64, bins: usize) -> usize {
    let width = 0.5 / bins as f64;
    for i in 0..bins {
        let hi = 0.5 + (i + 1) as f64 * width;
        if agreement <= hi + 1e-12 {
            return i;
        }
    }
    bins - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    /// Enumerates every unordered annotator pair and counts agreements.
    fn pairwise_by_enumeration(votes_a: u32, votes_b: u32) -> f64 {
        let labels: Vec<bool> = (0..votes_a)
            .map(|_| true)
            .chain((0..votes_b).map(|_| false))
            .collect();
        let mut agree = 0u64;
        let mut total = 0u64;
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                total += 1;
                agree += u64::from(labels[i] == labels[j]);
            }
        }
        agree as f64 / total as f64
    }

    /// Sums P(sequence) over all 2^k annotation sequences with an `a` majority.
    fn majority_by_enumeration(p: f64, k: u32) -> f64 {
        let mut prob = 0.0;
        for mask in 0u32..(1 << k) {
            let a_votes = mask.count_ones();
            if a_votes > k / 2 {
                prob += p.powi(a_votes as i32) * (1.0 - p).powi((k - a_votes) as i32);
            }
        }
        prob
    }

    #[test]
    fn modal_fraction_reference_values() {
        assert_eq!(comparison_agreement(11, 11).unwrap(), 0.5);
        assert_eq!(comparison_agreement(0, 22).unwrap(), 1.0);
        assert_eq!(comparison_agreement(3, 1).unwrap(), 0.75);
        assert!(matches!(comparison_agreement(0, 0), Err(Error::ZeroVotes)));
    }

    #[test]
    fn pairwise_reference_values() {
        assert_eq!(pairwise_agreement(2, 0).unwrap(), 1.0);
        assert_eq!(pairwise_agreement(1, 1).unwrap(), 0.0);
        // (3,1): 6 annotator pairs, 3 agreeing
        assert_eq!(pairwise_agreement(3, 1).unwrap(), 0.5);
        assert_eq!(pairwise_by_enumeration(3, 1), 0.5);
        assert!(matches!(pairwise_agreement(1, 0), Err(Error::TooFewVotes(1))));
    }

    #[test]
    fn pairwise_matches_enumeration_up_to_30() {
        for total in 2u32..=30 {
            for a in 0..=total {
                let b = total - a;
                let formula = pairwise_agreement(a, b).unwrap();
                let enumerated = pairwise_by_enumeration(a, b);
                assert!(
                    (formula - enumerated).abs() < 1e-12,
                    "({a},{b}): {formula} vs {enumerated}"
                );
            }
        }
    }

    #[test]
    fn modal_aggregate_reference_values() {
        assert_eq!(modal_aggregate(0, 22, 3).unwrap().0, ModalOutcome::B);
        assert_eq!(modal_aggregate(0, 22, 3).unwrap().1, 1.0);
        assert_eq!(modal_aggregate(11, 11, 3).unwrap(), (ModalOutcome::Tie, 0.5));
        assert!(matches!(modal_aggregate(1, 2, 4), Err(Error::EvenModalCount(4))));

        // (15,7) at k=3: mode a with probability 3 p^2 (1-p) + p^3, p = 15/22
        let (outcome, prob) = modal_aggregate(15, 7, 3).unwrap();
        assert_eq!(outcome, ModalOutcome::A);
        let expected = 8100.0 / 10648.0; // exact binomial evaluation
        assert!((prob - expected).abs() < 1e-12, "{prob} vs {expected}");
        assert!((prob - majority_by_enumeration(15.0 / 22.0, 3)).abs() < 1e-12);
    }

    #[test]
    fn modal_probability_matches_enumeration() {
        for &(a, b) in &[(15u32, 7u32), (3, 2), (20, 1), (7, 6)] {
            for &k in &[1u32, 3, 5, 7, 11] {
                let (_, prob) = modal_aggregate(a, b, k).unwrap();
                let p = f64::from(a.max(b)) / f64::from(a + b);
                let expected = majority_by_enumeration(p, k);
                assert!(
                    (prob - expected).abs() < 1e-10,
                    "({a},{b}) k={k}: {prob} vs {expected}"
                );
            }
        }
    }

    fn record(id: &str, votes_a: u32, votes_b: u32) -> AgreementRecord {
        AgreementRecord {
            comparison_id: id.into(),
            agreement: comparison_agreement(votes_a, votes_b).unwrap(),
            repetitions: votes_a + votes_b,
            pairwise_agreement: if votes_a + votes_b >= 2 {
                Some(pairwise_agreement(votes_a, votes_b).unwrap())
            } else {
                None
            },
        }
    }

    #[test]
    fn statistics_reference_values() {
        let stats = corpus_statistics(&[record("c", 4, 0)], 10).unwrap();
        assert_eq!(stats.mean_agreement, 1.0);
        assert_eq!(stats.agreement_histogram.last().unwrap().count, 1);
        assert_eq!(stats.agreement_histogram.iter().map(|b| b.count).sum::<usize>(), 1);

        let stats = corpus_statistics(&[record("c1", 1, 1), record("c2", 0, 2)], 10).unwrap();
        assert_eq!(stats.mean_agreement, 0.75);
        assert_eq!(stats.repetition_histogram, vec![(2, 2)]);

        assert!(matches!(corpus_statistics(&[], 10), Err(Error::EmptyRecords)));
    }

    #[test]
    fn mean_pairwise_matches_monte_carlo_reannotation() {
        // Synthetic corpus with a spread of tallies; the oracle re-draws two
        // distinct annotators 1e5 times from uniformly chosen comparisons.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(604);
        let corpus: Vec<(u32, u32)> = (0..400)
            .map(|_| {
                let total = rng.random_range(2u32..=22);
                let a = rng.random_range(0..=total);
                (a, total - a)
            })
            .collect();
        let records: Vec<AgreementRecord> = corpus
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| record(&format!("c{i}"), a, b))
            .collect();
        let stats = corpus_statistics(&records, 10).unwrap();
        let analytic = stats.mean_pairwise_agreement.unwrap();

        let mut agree = 0u64;
        const TRIALS: u64 = 100_000;
        for _ in 0..TRIALS {
            let (a, b) = corpus[rng.random_range(0..corpus.len())];
            let total = a + b;
            let first = rng.random_range(0..total) < a;
            let (ra, rt) = if first { (a - 1, total - 1) } else { (a, total - 1) };
            let second = rng.random_range(0..rt) < ra;
            agree += u64::from(first == second);
        }
        let monte_carlo = agree as f64 / TRIALS as f64;
        assert!(
            (analytic - monte_carlo).abs() <= 0.02,
            "analytic {analytic} vs monte carlo {monte_carlo}"
        );
    }

    proptest! {
        #[test]
        fn agreement_is_symmetric(a in 0u32..200, b in 0u32..200) {
            prop_assume!(a + b >= 1);
            prop_assert_eq!(
                comparison_agreement(a, b).unwrap(),
                comparison_agreement(b, a).unwrap()
            );
        }

        /// At fixed total, agreement is non-decreasing in |a - b|.
        #[test]
        fn agreement_monotone_in_margin(total in 1u32..60, a1 in 0u32..60, a2 in 0u32..60) {
            let a1 = a1 % (total + 1);
            let a2 = a2 % (total + 1);
            let margin = |a: u32| (2 * a).abs_diff(total);
            prop_assume!(margin(a1) <= margin(a2));
            prop_assert!(
                comparison_agreement(a1, total - a1).unwrap()
                    <= comparison_agreement(a2, total - a2).unwrap() + 1e-12
            );
        }

        /// Pairwise agreement never exceeds the modal fraction; they are
        /// equal exactly at unanimity.
        #[test]
        fn pairwise_bounded_by_modal(total in 2u32..=30, a in 0u32..=30) {
            let a = a % (total + 1);
            let b = total - a;
            let pw = pairwise_agreement(a, b).unwrap();
            let modal = comparison_agreement(a, b).unwrap();
            if a == 0 || b == 0 {
                prop_assert!((pw - modal).abs() < 1e-12);
            } else {
                prop_assert!(pw <= modal + 1e-12);
            }
        }

        #[test]
        fn histogram_counts_sum_to_n(tallies in proptest::collection::vec((0u32..22, 0u32..22), 1..100), bins in 1usize..20) {
            let records: Vec<AgreementRecord> = tallies
                .iter()
                .enumerate()
                .filter(|(_, (a, b))| a + b >= 1)
                .map(|(i, &(a, b))| record(&format!("c{i}"), a, b))
                .collect();
            prop_assume!(!records.is_empty());
            let stats = corpus_statistics(&records, bins).unwrap();
            prop_assert_eq!(
                stats.agreement_histogram.iter().map(|b| b.count).sum::<usize>(),
                records.len()
            );
            prop_assert_eq!(
                stats.repetition_histogram.iter().map(|(_, c)| c).sum::<usize>(),
                records.len()
            );
        }
    }
}
