//! Wilcoxon signed-rank test, Cliff's delta and the Bonferroni correction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{Measure, MetricReport};
use crate::math;

/// Two-sided significance level used throughout.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
/// |Cliff's delta| at or above this counts as a meaningful effect.
pub const LARGE_EFFECT_THRESHOLD: f64 = 0.33;

/// Exact sign-pattern enumeration is used up to this many non-zero
/// differences (4096 patterns); beyond it, the normal approximation with tie
/// correction takes over.
pub const WILCOXON_EXACT_LIMIT: usize = 12;

/// Result of one Wilcoxon signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOutcome {
    pub p_value: f64,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Sample size after dropping zero differences.
    pub n_used: usize,
    /// All differences were zero; `p_value` is 1 by convention.
    pub degenerate: bool,
}

/// Average ranks of `|values|`, 1-based, ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; all-zero input returns p = 1 with the degeneracy flag. Exact
/// by sign-pattern enumeration for n <= 12, normal approximation (variance
/// from the realized ranks, which absorbs ties) otherwise.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::Evaluation(format!(
            "paired samples of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(WilcoxonOutcome {
            p_value: 1.0,
            w_plus: 0.0,
            n_used: 0,
            degenerate: true,
        });
    }
    let n = diffs.len();
    if n < 5 {
        return Err(Error::Evaluation(format!(
            "only {n} non-zero differences; at least 5 required"
        )));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| math::abs(*d)).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    let p_value = if n <= WILCOXON_EXACT_LIMIT {
        // Rank sums are multiples of 0.5 and stay well below 2^53, so the
        // comparisons below are exact.
        let patterns = 1u32 << n;
        let mut at_most = 0u64;
        let mut at_least = 0u64;
        for pattern in 0..patterns {
            let mut w = 0.0;
            for (bit, rank) in ranks.iter().enumerate() {
                if pattern >> bit & 1 == 1 {
                    w += rank;
                }
            }
            if w <= w_plus {
                at_most += 1;
            }
            if w >= w_plus {
                at_least += 1;
            }
        }
        let tail = at_most.min(at_least) as f64 / patterns as f64;
        math::fmin(1.0, 2.0 * tail)
    } else {
        let mean: f64 = ranks.iter().sum::<f64>() / 2.0;
        let variance: f64 = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
        let z = (w_plus - mean) / math::sqrt(variance);
        math::fmin(1.0, 2.0 * (1.0 - math::normal_cdf(math::abs(z))))
    };

    Ok(WilcoxonOutcome {
        p_value,
        w_plus,
        n_used: n,
        degenerate: false,
    })
}

/// `(#{a_i > b_j} - #{a_i < b_j}) / (|a| * |b|)`.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Evaluation(
            "Cliff's delta needs two non-empty samples".into(),
        ));
    }
    let mut wins = 0i64;
    let mut losses = 0i64;
    for &x in a {
        for &y in b {
            if x > y {
                wins += 1;
            } else if x < y {
                losses += 1;
            }
        }
    }
    Ok((wins - losses) as f64 / (a.len() * b.len()) as f64)
}

/// Scale each p-value by the number of comparisons `m` and cap at 1.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() {
        return Err(Error::Validation(format!(
            "Bonferroni m = {m} smaller than {} p-values",
            p_values.len()
        )));
    }
    Ok(p_values
        .iter()
        .map(|p| math::fmin(1.0, p * m as f64))
        .collect())
}

/// Outcome of comparing one measure between two campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub p_value: f64,
    pub p_value_bonferroni: f64,
    pub cliffs_delta: f64,
    /// Bonferroni-adjusted p below [`SIGNIFICANCE_LEVEL`].
    pub significant: bool,
    /// |delta| at or above [`LARGE_EFFECT_THRESHOLD`].
    pub large_effect: bool,
    pub degenerate: bool,
}

/// Wilcoxon + Bonferroni (over `m` comparisons) + Cliff's delta for one pair
/// of per-repetition measure series.
pub fn compare_measurements(a: &[f64], b: &[f64], m: usize) -> Result<StatTestResult> {
    let wilcoxon = wilcoxon_signed_rank(a, b)?;
    let adjusted = bonferroni(&[wilcoxon.p_value], m)?[0];
    let delta = cliffs_delta(a, b)?;
    Ok(StatTestResult {
        p_value: wilcoxon.p_value,
        p_value_bonferroni: adjusted,
        cliffs_delta: delta,
        significant: adjusted < SIGNIFICANCE_LEVEL,
        large_effect: math::abs(delta) >= LARGE_EFFECT_THRESHOLD,
        degenerate: wilcoxon.degenerate,
    })
}

/// Compare two repetition-aligned campaigns on all five measures, Bonferroni
/// over the five tests.
pub fn compare_reports(
    a: &[MetricReport],
    b: &[MetricReport],
) -> Result<BTreeMap<Measure, StatTestResult>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Evaluation(format!(
            "campaigns with {} and {} repetitions cannot be paired",
            a.len(),
            b.len()
        )));
    }
    let m = Measure::ALL.len();
    let mut out = BTreeMap::new();
    for measure in Measure::ALL {
        let series_a: Vec<f64> = a.iter().map(|r| measure.of(r)).collect();
        let series_b: Vec<f64> = b.iter().map(|r| measure.of(r)).collect();
        out.insert(measure, compare_measurements(&series_a, &series_b, m)?);
    }
    Ok(out)
}

impl Measure {
    fn key(self) -> u8 {
        match self {
            Measure::Auc => 0,
            Measure::Recall => 1,
            Measure::Brier => 2,
            Measure::Pf => 3,
            Measure::F1 => 4,
        }
    }
}

impl Ord for Measure {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Measure {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_samples_are_degenerate() {
        let a = vec![0.6, 0.7, 0.8, 0.9, 1.0, 0.5];
        let out = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert!(out.degenerate);
    }

    #[test]
    fn six_positive_differences_give_exact_p() {
        // all diffs positive, no ties: W+ = 21, two-sided p = 2/64
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
        let out = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(out.p_value, 2.0 / 64.0);
        assert_eq!(out.w_plus, 21.0);
    }

    #[test]
    fn too_few_nonzero_differences_is_error() {
        let a = vec![1.0, 1.0, 1.0, 2.0, 3.0, 4.0];
        let b = vec![1.0, 1.0, 1.0, 2.5, 3.5, 4.0];
        assert!(matches!(
            wilcoxon_signed_rank(&a, &b),
            Err(Error::Evaluation(_))
        ));
    }

    #[test]
    fn large_sample_uses_normal_approximation() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + if i % 3 == 0 { 0.5 } else { -0.2 }).collect();
        let out = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(out.n_used == 30);
        assert!((0.0..=1.0).contains(&out.p_value));
    }

    #[test]
    fn cliffs_delta_hand_values() {
        assert_eq!(cliffs_delta(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // (2 wins - 2 losses) / 4 = 0
        assert_eq!(cliffs_delta(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn cliffs_delta_is_antisymmetric() {
        let a = vec![0.1, 0.5, 0.9, 0.7];
        let b = vec![0.2, 0.4, 0.6];
        let ab = cliffs_delta(&a, &b).unwrap();
        let ba = cliffs_delta(&b, &a).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn bonferroni_scales_and_caps() {
        assert_eq!(bonferroni(&[0.01], 5).unwrap(), vec![0.05]);
        assert_eq!(bonferroni(&[0.5], 5).unwrap(), vec![1.0]);
        assert_eq!(bonferroni(&[0.001, 0.02], 2).unwrap(), vec![0.002, 0.04]);
    }

    #[test]
    fn bonferroni_requires_enough_comparisons() {
        assert!(matches!(
            bonferroni(&[0.1, 0.2], 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn compare_measurements_flags() {
        let a = vec![0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97];
        let b = vec![0.5, 0.51, 0.52, 0.53, 0.54, 0.55, 0.56, 0.57];
        let result = compare_measurements(&a, &b, 5).unwrap();
        assert!(result.significant);
        assert!(result.large_effect);
        assert_eq!(result.cliffs_delta, 1.0);
        assert_eq!(result.p_value_bonferroni, math::fmin(1.0, result.p_value * 5.0));
    }
}
