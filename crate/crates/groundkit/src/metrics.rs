//! Metric aggregation: mIoU and recall at fixed IoU thresholds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::{ensure_positive, iou, TimeSpan};

/// The reported recall thresholds.
pub const IOU_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.7];

/// How failed (unparseable / errored) predictions enter the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MetricsMode {
    /// Failures score IoU 0 and stay in the denominator (default).
    #[default]
    Strict,
    /// Failures are excluded from mIoU/recall; only well-formatted
    /// predictions are scored. `n_failed` still reports how many were left out.
    FormattedOnly,
}

/// Whether `R@IoU>t` counts examples with IoU strictly above `t` (the
/// notation read literally, default) or at-or-above it (some benchmark
/// scripts' convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RecallRule {
    #[default]
    Strict,
    Inclusive,
}

/// Aggregate quality of a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub miou: f64,
    /// Keyed by threshold ("0.3", "0.5", "0.7").
    pub recall_at: BTreeMap<String, f64>,
    pub n_examples: usize,
    pub n_failed: usize,
}

/// Scores `(prediction, ground truth)` pairs; `None` marks a failed prediction.
///
/// Recall uses the strict-`>` rule; see [`aggregate_metrics_with`] to choose.
pub fn aggregate_metrics(
    outcomes: &[(Option<TimeSpan>, TimeSpan)],
    mode: MetricsMode,
) -> Result<MetricsReport> {
    aggregate_metrics_with(outcomes, mode, RecallRule::Strict)
}

/// [`aggregate_metrics`] with an explicit recall boundary rule.
pub fn aggregate_metrics_with(
    outcomes: &[(Option<TimeSpan>, TimeSpan)],
    mode: MetricsMode,
    rule: RecallRule,
) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("metrics input"));
    }
    let n_examples = outcomes.len();
    let mut n_failed = 0usize;
    let mut ious = Vec::with_capacity(n_examples);
    for (pred, gt) in outcomes {
        ensure_positive(gt, "gt span")?;
        match pred {
            None => {
                n_failed += 1;
                if mode == MetricsMode::Strict {
                    ious.push(0.0);
                }
            }
            // A parsed-but-degenerate prediction (zero length) overlaps nothing.
            Some(p) if p.is_empty() => ious.push(0.0),
            Some(p) => ious.push(iou(p, gt)?),
        }
    }
    if ious.is_empty() {
        return Err(Error::EmptyInput("formatted predictions"));
    }
    let scored = ious.len() as f64;
    let miou = ious.iter().sum::<f64>() / scored;
    let mut recall_at = BTreeMap::new();
    for tau in IOU_THRESHOLDS {
        let hits = ious
            .iter()
            .filter(|v| match rule {
                RecallRule::Strict => **v > tau,
                RecallRule::Inclusive => **v >= tau,
            })
            .count();
        recall_at.insert(threshold_key(tau), hits as f64 / scored);
    }
    Ok(MetricsReport {
        miou,
        recall_at,
        n_examples,
        n_failed,
    })
}

/// Map key for a recall threshold: "0.3", "0.5", "0.7".
pub fn threshold_key(tau: f64) -> String {
    format!("{tau}")
}

impl MetricsReport {
    /// Recall at a threshold, if reported.
    pub fn recall(&self, tau: f64) -> Option<f64> {
        self.recall_at.get(&threshold_key(tau)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::TimeSpan;

    fn gt() -> TimeSpan {
        TimeSpan::new(0.0, 10.0).unwrap()
    }

    /// A prediction whose IoU against `gt()` is exactly `v`.
    fn pred_with_iou(v: f64) -> Option<TimeSpan> {
        // [0, x] vs [0, 10]: IoU = x/10 for x <= 10.
        Some(TimeSpan::new(0.0, 10.0 * v).unwrap())
    }

    #[test]
    fn arithmetic_example() {
        let outcomes: Vec<_> = [0.6, 0.4, 0.8]
            .iter()
            .map(|v| (pred_with_iou(*v), gt()))
            .collect();
        let m = aggregate_metrics(&outcomes, MetricsMode::Strict).unwrap();
        assert!((m.miou - 0.6).abs() < 1e-12);
        assert_eq!(m.recall(0.3).unwrap(), 1.0);
        assert!((m.recall(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall(0.7).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.n_examples, 3);
        assert_eq!(m.n_failed, 0);
    }

    #[test]
    fn recall_boundary_is_strict_by_default() {
        let outcomes = vec![(pred_with_iou(0.5), gt())];
        let m = aggregate_metrics(&outcomes, MetricsMode::Strict).unwrap();
        assert_eq!(m.recall(0.5).unwrap(), 0.0);
        let inclusive =
            aggregate_metrics_with(&outcomes, MetricsMode::Strict, RecallRule::Inclusive).unwrap();
        assert_eq!(inclusive.recall(0.5).unwrap(), 1.0);
    }

    #[test]
    fn failures_score_zero_in_strict_mode() {
        let outcomes = vec![(None, gt()), (pred_with_iou(1.0), gt())];
        let m = aggregate_metrics(&outcomes, MetricsMode::Strict).unwrap();
        assert!((m.miou - 0.5).abs() < 1e-12);
        assert_eq!(m.n_failed, 1);
        assert_eq!(m.n_examples, 2);
    }

    #[test]
    fn formatted_only_excludes_failures() {
        let outcomes = vec![(None, gt()), (pred_with_iou(1.0), gt())];
        let m = aggregate_metrics(&outcomes, MetricsMode::FormattedOnly).unwrap();
        assert_eq!(m.miou, 1.0);
        assert_eq!(m.n_failed, 1);
        assert_eq!(m.n_examples, 2);
        let all_failed = vec![(None, gt())];
        assert!(aggregate_metrics(&all_failed, MetricsMode::FormattedOnly).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            aggregate_metrics(&[], MetricsMode::Strict),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn recall_curve_antitone_and_miou_recomputable() {
        let vals = [0.05, 0.31, 0.31, 0.5, 0.55, 0.71, 0.9, 1.0];
        let outcomes: Vec<_> = vals.iter().map(|v| (pred_with_iou(*v), gt())).collect();
        let m = aggregate_metrics(&outcomes, MetricsMode::Strict).unwrap();
        let r: Vec<f64> = IOU_THRESHOLDS.iter().map(|t| m.recall(*t).unwrap()).collect();
        assert!(r[0] >= r[1] && r[1] >= r[2]);
        let recomputed: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((m.miou - recomputed).abs() < 1e-9);
    }
}
