//! Classification and regression evaluation: accuracy, ROC/AUC, and the
//! MAE / MAPE / RMSE / MSE error measures.
//!
//! AUC uses trapezoidal integration over the threshold-swept ROC curve with
//! tied scores contributing diagonal segments, which makes it equal to the
//! Mann–Whitney pairwise statistic with ties counted one half.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("confusion counts are all zero; accuracy undefined")]
    EmptyConfusion,
    #[error("scores ({scores}) and labels ({labels}) differ in length")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("inputs are empty")]
    EmptyInput,
    #[error("labels contain a single class; AUC undefined")]
    SingleClass,
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("target value at index {index} is zero; MAPE undefined (use MapePolicy::ExcludeZeroTargets to drop such terms)")]
    ZeroTarget { index: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, true_neg: u64, false_pos: u64, false_neg: u64) -> Self {
        Self {
            true_pos,
            true_neg,
            false_pos,
            false_neg,
        }
    }

    /// Counts from scores and labels under a strict threshold rule:
    /// predicted positive iff `score > threshold`.
    pub fn from_scores(
        scores: &[f64],
        labels: &[u8],
        threshold: f64,
    ) -> Result<Self, MetricsError> {
        check_paired(scores, labels)?;
        let mut c = ConfusionCounts::new(0, 0, 0, 0);
        for (&s, &y) in scores.iter().zip(labels) {
            let predicted_pos = s > threshold;
            match (y, predicted_pos) {
                (1, true) => c.true_pos += 1,
                (1, false) => c.false_neg += 1,
                (0, true) => c.false_pos += 1,
                (0, false) => c.true_neg += 1,
                (other, _) => return Err(MetricsError::InvalidLabel(other)),
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

/// Fraction of correct predictions, `(TP + TN) / (TP + TN + FP + FN)`.
pub fn accuracy(c: &ConfusionCounts) -> Result<f64, MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::EmptyConfusion);
    }
    Ok((c.true_pos + c.true_neg) as f64 / total as f64)
}

/// ROC curve from a descending threshold sweep.
///
/// Points start at (0,0), end at (1,1), and are non-decreasing in both
/// coordinates; tied scores collapse into one point, so the segment they
/// induce is diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` per distinct threshold.
    pub points: Vec<(f64, f64)>,
}

/// Builds the ROC curve and its trapezoidal area.
///
/// Both classes must be present. The area is accumulated over integer
/// confusion counts and divided once at the end, so it is exact enough that
/// `auc(scores) + auc(inverted scores) == 1.0` holds bit-for-bit.
pub fn roc_and_auc(scores: &[f64], labels: &[u8]) -> Result<(RocCurve, f64), MetricsError> {
    check_paired(scores, labels)?;
    for &s in scores {
        if !s.is_finite() {
            return Err(MetricsError::NonFiniteScore(s));
        }
    }
    let pos_total: u64 = labels
        .iter()
        .map(|&y| match y {
            1 => Ok(1u64),
            0 => Ok(0u64),
            other => Err(MetricsError::InvalidLabel(other)),
        })
        .sum::<Result<u64, _>>()?;
    let neg_total = labels.len() as u64 - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    // Cumulative counts per distinct score, highest threshold first.
    let mut tp: u64 = 0;
    let mut fp: u64 = 0;
    let mut counts = vec![(0u64, 0u64)];
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        counts.push((fp, tp));
    }

    // Trapezoid area in units of (2 * P * N), kept integral until one
    // final division.
    let mut num: u64 = 0;
    for w in counts.windows(2) {
        let (fp0, tp0) = w[0];
        let (fp1, tp1) = w[1];
        num += (fp1 - fp0) * (tp0 + tp1);
    }
    let den = 2 * pos_total * neg_total;
    // Mirror the division around one half so complementing the scores
    // complements the area exactly.
    let auc = if 2 * num <= den {
        num as f64 / den as f64
    } else {
        1.0 - (den - num) as f64 / den as f64
    };

    let points = counts
        .iter()
        .map(|&(f, t)| (f as f64 / neg_total as f64, t as f64 / pos_total as f64))
        .collect();
    Ok((RocCurve { points }, auc))
}

/// How `regression_errors` treats exactly-zero targets, whose MAPE term
/// would divide by zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapePolicy {
    /// Fail on the first zero target.
    ErrorOnZero,
    /// Drop zero-target terms from MAPE (only) and record how many were
    /// dropped. MAE/MSE/RMSE still cover every sample.
    ExcludeZeroTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionErrors {
    pub mae: f64,
    /// Mean absolute percentage error, in percent. `None` only under
    /// [`MapePolicy::ExcludeZeroTargets`] when every target was dropped.
    pub mape_percent: Option<f64>,
    pub rmse: f64,
    pub mse: f64,
    /// Zero-target terms dropped from MAPE.
    pub mape_excluded: usize,
}

/// MAE / MAPE / RMSE / MSE of predictions against targets; errors on zero
/// targets per [`MapePolicy::ErrorOnZero`].
pub fn regression_errors(targets: &[f64], predictions: &[f64]) -> Result<RegressionErrors, MetricsError> {
    regression_errors_with(targets, predictions, MapePolicy::ErrorOnZero)
}

pub fn regression_errors_with(
    targets: &[f64],
    predictions: &[f64],
    policy: MapePolicy,
) -> Result<RegressionErrors, MetricsError> {
    if targets.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            scores: predictions.len(),
            labels: targets.len(),
        });
    }
    if targets.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = targets.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut pct_terms = 0usize;
    for (index, (&y, &yhat)) in targets.iter().zip(predictions).enumerate() {
        let err = y - yhat;
        abs_sum += err.abs();
        sq_sum += err * err;
        if y == 0.0 {
            match policy {
                MapePolicy::ErrorOnZero => return Err(MetricsError::ZeroTarget { index }),
                MapePolicy::ExcludeZeroTargets => continue,
            }
        }
        pct_sum += err.abs() / y.abs();
        pct_terms += 1;
    }
    let mape_excluded = targets.len() - pct_terms;
    // pct_terms == 0 is only reachable under exclusion: ErrorOnZero bails at
    // the first zero target.
    let mape_percent = (pct_terms > 0).then(|| 100.0 * pct_sum / pct_terms as f64);
    let mse = sq_sum / n;
    Ok(RegressionErrors {
        mae: abs_sum / n,
        mape_percent,
        rmse: mse.sqrt(),
        mse,
        mape_excluded,
    })
}

/// Everything one evaluation produces: confusion counts at the fixed
/// threshold, ROC/AUC when both classes are present, and regression errors
/// of the scores against the labels and (when available) against a
/// continuous target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionCounts,
    pub accuracy: f64,
    /// Set when the split contained a single class, in which case `roc` and
    /// `auc` are omitted rather than fabricated.
    pub single_class: bool,
    pub roc: Option<RocCurve>,
    pub auc: Option<f64>,
    pub errors_vs_labels: RegressionErrors,
    pub errors_vs_magnitude: Option<RegressionErrors>,
}

fn check_paired(scores: &[f64], labels: &[u8]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Prng, RandomSource};
    use proptest::prelude::*;

    #[test]
    fn accuracy_hand_example() {
        let c = ConfusionCounts::new(90, 85, 10, 15);
        assert_eq!(accuracy(&c).unwrap(), 0.875);
    }

    #[test]
    fn accuracy_extremes() {
        assert_eq!(accuracy(&ConfusionCounts::new(3, 2, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&ConfusionCounts::new(0, 0, 4, 1)).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&ConfusionCounts::new(0, 0, 0, 0)),
            Err(MetricsError::EmptyConfusion)
        ));
    }

    #[test]
    fn auc_perfect_separation() {
        let (roc, auc) = roc_and_auc(&[0.9, 0.1], &[1, 0]).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn auc_all_ties_is_half() {
        let (roc, auc) = roc_and_auc(&[0.3, 0.3, 0.3, 0.3], &[1, 0, 1, 0]).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn auc_pairwise_example() {
        // 3 of the 4 (positive, negative) pairs rank correctly.
        let (_, auc) = roc_and_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert!(matches!(
            roc_and_auc(&[0.2, 0.4], &[1, 1]),
            Err(MetricsError::SingleClass)
        ));
    }

    #[test]
    fn roc_is_monotone() {
        let mut rng = Prng::new(11);
        let scores: Vec<f64> = (0..64).map(|_| rng.next_uniform()).collect();
        let labels: Vec<u8> = (0..64).map(|_| (rng.next_uniform() < 0.4) as u8).collect();
        let (roc, _) = roc_and_auc(&scores, &labels).unwrap();
        for w in roc.points.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn regression_hand_example() {
        let e = regression_errors(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert_eq!(e.mae, 1.5);
        assert_eq!(e.mse, 2.5);
        assert!((e.rmse - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.mape_percent, Some(100.0));
        assert_eq!(e.mape_excluded, 0);
    }

    #[test]
    fn regression_zero_error_case() {
        let e = regression_errors(&[1.0, -2.0, 3.0], &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(e.mae, 0.0);
        assert_eq!(e.mse, 0.0);
        assert_eq!(e.rmse, 0.0);
        assert_eq!(e.mape_percent, Some(0.0));
    }

    #[test]
    fn regression_zero_target_policy() {
        let err = regression_errors(&[0.0, 1.0], &[0.5, 1.0]).unwrap_err();
        assert!(matches!(err, MetricsError::ZeroTarget { index: 0 }));

        let e = regression_errors_with(&[0.0, 1.0], &[0.5, 2.0], MapePolicy::ExcludeZeroTargets)
            .unwrap();
        assert_eq!(e.mape_excluded, 1);
        assert_eq!(e.mape_percent, Some(100.0));
        // MAE/MSE still include the excluded sample.
        assert_eq!(e.mae, 0.75);

        let all = regression_errors_with(&[0.0, 0.0], &[0.1, 0.2], MapePolicy::ExcludeZeroTargets)
            .unwrap();
        assert_eq!(all.mape_percent, None);
        assert_eq!(all.mape_excluded, 2);
    }

    proptest! {
        #[test]
        fn auc_complement_is_exactly_one(seed in 0u64..500) {
            let mut rng = Prng::new(seed);
            let n = 2 + (rng.next_u64() % 120) as usize;
            let scores: Vec<f64> = (0..n).map(|_| (rng.next_u64() % 17) as f64 / 16.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| (rng.next_uniform() < 0.5) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;
            let (_, auc) = roc_and_auc(&scores, &labels).unwrap();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let (_, auc_neg) = roc_and_auc(&neg, &labels).unwrap();
            prop_assert_eq!(auc + auc_neg, 1.0);
        }

        #[test]
        fn accuracy_swap_invariance(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fneg in 0u64..500) {
            prop_assume!(tp + tn + fp + fneg > 0);
            let a = accuracy(&ConfusionCounts::new(tp, tn, fp, fneg)).unwrap();
            let b = accuracy(&ConfusionCounts::new(tn, tp, fneg, fp)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn rmse_dominates_mae(seed in 0u64..1000) {
            let mut rng = Prng::new(seed);
            let n = 1 + (rng.next_u64() % 64) as usize;
            let y: Vec<f64> = (0..n).map(|_| rng.next_uniform_in(0.5, 10.0)).collect();
            let yhat: Vec<f64> = (0..n).map(|_| rng.next_uniform_in(-10.0, 10.0)).collect();
            let e = regression_errors(&y, &yhat).unwrap();
            prop_assert!(e.rmse >= e.mae);
            prop_assert!((e.rmse * e.rmse - e.mse).abs() <= 1e-9 * e.mse.max(1e-300));
        }

        #[test]
        fn metrics_are_permutation_invariant(seed in 0u64..300) {
            let mut rng = Prng::new(seed);
            let n = 4 + (rng.next_u64() % 60) as usize;
            let scores: Vec<f64> = (0..n).map(|_| rng.next_uniform()).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| (rng.next_uniform() < 0.5) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;

            // Deterministic shuffle of the paired samples.
            let mut idx: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                idx.swap(i, j);
            }
            let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let l2: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();

            let (_, auc) = roc_and_auc(&scores, &labels).unwrap();
            let (_, auc2) = roc_and_auc(&s2, &l2).unwrap();
            prop_assert_eq!(auc, auc2);

            let c1 = ConfusionCounts::from_scores(&scores, &labels, 0.5).unwrap();
            let c2 = ConfusionCounts::from_scores(&s2, &l2, 0.5).unwrap();
            prop_assert_eq!(accuracy(&c1).unwrap(), accuracy(&c2).unwrap());

            let targets: Vec<f64> = labels.iter().map(|&l| l as f64 + 1.0).collect();
            let t2: Vec<f64> = l2.iter().map(|&l| l as f64 + 1.0).collect();
            let e1 = regression_errors(&targets, &scores).unwrap();
            let e2 = regression_errors(&t2, &s2).unwrap();
            prop_assert!((e1.mae - e2.mae).abs() <= 1e-12 * e1.mae.max(1.0));
            prop_assert!((e1.mse - e2.mse).abs() <= 1e-12 * e1.mse.max(1.0));
        }
    }
}
