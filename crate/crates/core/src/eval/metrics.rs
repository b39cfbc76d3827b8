//! AUC, Brier score and threshold-based confusion measures.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification threshold on the defective-class probability.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Probability that a random positive outscores a random negative, ties
/// counting one half (rank formulation, equal to the trapezoidal area under
/// the ROC curve).
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Evaluation(
            "AUC needs both classes present".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Evaluation("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average ranks over tied scores, 1-based.
    let mut rank_of = alloc::vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            rank_of[k] = rank;
        }
        i = j + 1;
    }
    let positive_rank_sum: f64 = labels
        .iter()
        .zip(&rank_of)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let n_pos = positives as f64;
    let n_neg = negatives as f64;
    Ok((positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Mean squared difference between predicted probability and binary outcome.
pub fn brier(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::Evaluation("Brier score of an empty sample".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Evaluation(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Evaluation(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let outcome = l as f64;
            (p - outcome) * (p - outcome)
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// Confusion counts at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }
}

/// Threshold measures with their confusion counts. `degenerate` marks a
/// report where some denominator was empty and the convention value 0 was
/// used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub confusion: Confusion,
    pub recall: f64,
    pub precision: f64,
    pub pf: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// Predict defective iff `prob >= threshold`, then fill the confusion counts
/// and the measures derived from them. A zero precision or recall yields
/// F1 = 0 by convention.
pub fn confusion_and_threshold_metrics(
    probs: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ThresholdReport> {
    if probs.is_empty() || probs.len() != labels.len() {
        return Err(Error::Evaluation(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut c = Confusion {
        true_positive: 0,
        false_positive: 0,
        true_negative: 0,
        false_negative: 0,
    };
    for (&p, &l) in probs.iter().zip(labels) {
        let predicted = p >= threshold;
        match (predicted, l == 1) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    let actual_pos = c.true_positive + c.false_negative;
    let actual_neg = c.true_negative + c.false_positive;
    let predicted_pos = c.true_positive + c.false_positive;
    let degenerate = actual_pos == 0 || actual_neg == 0 || predicted_pos == 0;
    let recall = if actual_pos > 0 {
        c.true_positive as f64 / actual_pos as f64
    } else {
        0.0
    };
    let precision = if predicted_pos > 0 {
        c.true_positive as f64 / predicted_pos as f64
    } else {
        0.0
    };
    let pf = if actual_neg > 0 {
        c.false_positive as f64 / actual_neg as f64
    } else {
        0.0
    };
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ThresholdReport {
        confusion: c,
        recall,
        precision,
        pf,
        f1,
        degenerate,
    })
}

/// All five measures for one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc: f64,
    pub recall: f64,
    pub brier: f64,
    pub pf: f64,
    pub f1: f64,
    pub precision: f64,
    pub confusion: Confusion,
    pub degenerate: bool,
}

/// Evaluate defective-class probabilities against labels. Needs both classes
/// present (for AUC).
pub fn metric_report(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricReport> {
    let auc_value = auc(probs, labels)?;
    let brier_value = brier(probs, labels)?;
    let t = confusion_and_threshold_metrics(probs, labels, threshold)?;
    Ok(MetricReport {
        auc: auc_value,
        recall: t.recall,
        brier: brier_value,
        pf: t.pf,
        f1: t.f1,
        precision: t.precision,
        confusion: t.confusion,
        degenerate: t.degenerate,
    })
}

/// One of the five reported measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Auc,
    Recall,
    Brier,
    Pf,
    F1,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Auc,
        Measure::Recall,
        Measure::Brier,
        Measure::Pf,
        Measure::F1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Auc => "auc",
            Self::Recall => "recall",
            Self::Brier => "brier",
            Self::Pf => "pf",
            Self::F1 => "f1",
        }
    }

    pub fn of(self, report: &MetricReport) -> f64 {
        match self {
            Self::Auc => report.auc,
            Self::Recall => report.recall,
            Self::Brier => report.brier,
            Self::Pf => report.pf,
            Self::F1 => report.f1,
        }
    }

    /// Whether larger values are better for this measure.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Self::Brier | Self::Pf)
    }
}

impl core::fmt::Display for Measure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Median of a sample; the mean of the two middle order statistics for even
/// lengths.
pub fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn auc_perfect_ranking_is_one() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        assert_eq!(auc(&[0.4, 0.4, 0.4], &[1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auc_mixed_pairs() {
        // positives {0.8, 0.3}, negative {0.5}: one win, one loss -> 0.5
        assert_eq!(auc(&[0.8, 0.5, 0.3], &[1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_error() {
        assert!(matches!(
            auc(&[0.2, 0.4], &[1, 1]),
            Err(Error::Evaluation(_))
        ));
    }

    #[test]
    fn brier_hand_values() {
        assert_eq!(brier(&[1.0, 0.0], &[1, 0]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5, 0.5, 0.5], &[1, 0, 1]).unwrap(), 0.25);
        // (0.04 + 0.09) / 2 = 0.065
        let b = brier(&[0.8, 0.3], &[1, 0]).unwrap();
        assert!((b - 0.065).abs() < 1e-15);
    }

    #[test]
    fn brier_empty_is_error() {
        assert!(matches!(brier(&[], &[]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn threshold_metrics_hand_case() {
        // TP=8, FN=2, FP=1, TN=9: recall 0.8, pf 0.1, precision 8/9,
        // f1 = 2 * (8/9) * 0.8 / (8/9 + 0.8) ~ 0.8421
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..8 {
            probs.push(0.9);
            labels.push(1);
        }
        for _ in 0..2 {
            probs.push(0.1);
            labels.push(1);
        }
        probs.push(0.9);
        labels.push(0);
        for _ in 0..9 {
            probs.push(0.1);
            labels.push(0);
        }
        let t = confusion_and_threshold_metrics(&probs, &labels, 0.5).unwrap();
        assert_eq!(t.confusion.true_positive, 8);
        assert_eq!(t.confusion.false_negative, 2);
        assert_eq!(t.confusion.false_positive, 1);
        assert_eq!(t.confusion.true_negative, 9);
        assert!((t.recall - 0.8).abs() < 1e-15);
        assert!((t.pf - 0.1).abs() < 1e-15);
        assert!((t.f1 - 0.842_105_263_157_894_7).abs() < 1e-12);
        assert!(!t.degenerate);
    }

    #[test]
    fn all_correct_predictions() {
        let t = confusion_and_threshold_metrics(&[0.9, 0.2, 0.8, 0.1], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(t.recall, 1.0);
        assert_eq!(t.pf, 0.0);
        assert_eq!(t.f1, 1.0);
    }

    #[test]
    fn no_predicted_positives_sets_degeneracy_flag() {
        let t = confusion_and_threshold_metrics(&[0.1, 0.2], &[1, 0], 0.5).unwrap();
        assert_eq!(t.f1, 0.0);
        assert!(t.degenerate);
    }

    #[test]
    fn threshold_is_inclusive() {
        let t = confusion_and_threshold_metrics(&[0.5], &[1], 0.5).unwrap();
        assert_eq!(t.confusion.true_positive, 1);
    }

    #[test]
    fn confusion_counts_cover_sample() {
        let t = confusion_and_threshold_metrics(&[0.9, 0.4, 0.6, 0.2, 0.7], &[1, 1, 0, 0, 1], 0.5)
            .unwrap();
        assert_eq!(t.confusion.total(), 5);
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn measure_extracts_fields() {
        let report = metric_report(&[0.9, 0.1, 0.8, 0.3], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(Measure::Auc.of(&report), report.auc);
        assert_eq!(Measure::F1.of(&report), report.f1);
        assert_eq!(report.auc, 1.0);
    }
}
