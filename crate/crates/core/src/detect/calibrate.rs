//! Empirical threshold calibration and permutation-test p-values.

use serde::{Deserialize, Serialize};

use super::DetectError;

pub const MIN_NULL_SCORES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    HigherIsWatermarked,
    LowerIsWatermarked,
}

/// Threshold whose empirical false-positive rate on `null_scores` is at
/// most `target_fpr`: at most `floor(target_fpr * n)` nulls are flagged.
///
/// For [`Polarity::HigherIsWatermarked`] a text is flagged when
/// `score >= threshold`; for the mirrored polarity when `score <= threshold`.
/// The threshold sits halfway between the last allowed null and the first
/// excluded one.
pub fn calibrate_threshold(null_scores: &[f64], target_fpr: f64, polarity: Polarity) -> Result<f64, DetectError> {
    calibrate_with_minimum(null_scores, target_fpr, polarity, MIN_NULL_SCORES)
}

pub(crate) fn calibrate_with_minimum(
    null_scores: &[f64],
    target_fpr: f64,
    polarity: Polarity,
    min_nulls: usize,
) -> Result<f64, DetectError> {
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(DetectError::InvalidParameter(format!("target FPR must be in (0,1), got {target_fpr}")));
    }
    if null_scores.len() < min_nulls.max(1) {
        return Err(DetectError::InsufficientNulls { have: null_scores.len(), need: min_nulls });
    }
    if null_scores.iter().any(|s| s.is_nan()) {
        return Err(DetectError::InvalidParameter("null scores contain NaN".into()));
    }
    // work in "higher is watermarked" orientation
    let sign = match polarity {
        Polarity::HigherIsWatermarked => 1.0,
        Polarity::LowerIsWatermarked => -1.0,
    };
    let mut sorted: Vec<f64> = null_scores.iter().map(|s| s * sign).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let allowed = (target_fpr * sorted.len() as f64 + 1e-9).floor() as usize;
    let first_excluded = sorted[allowed.min(sorted.len() - 1)];
    let threshold = if allowed >= sorted.len() {
        f64::NEG_INFINITY
    } else if allowed == 0 {
        first_excluded.next_up()
    } else {
        let last_allowed = sorted[allowed - 1];
        if last_allowed > first_excluded {
            let mid = first_excluded + (last_allowed - first_excluded) / 2.0;
            if mid > first_excluded {
                mid
            } else {
                first_excluded.next_up()
            }
        } else {
            first_excluded.next_up()
        }
    };
    Ok(threshold * sign)
}

/// Rank p-value of `observed` against scores recomputed under reference
/// keys: `(1 + #{references at least as extreme}) / (1 + n)`.
pub fn permutation_test_pvalue(observed: f64, references: &[f64], polarity: Polarity) -> f64 {
    let extreme = references
        .iter()
        .filter(|&&r| match polarity {
            Polarity::HigherIsWatermarked => r >= observed,
            Polarity::LowerIsWatermarked => r <= observed,
        })
        .count();
    (1 + extreme) as f64 / (1 + references.len()) as f64
}

pub fn is_flagged(score: f64, threshold: f64, polarity: Polarity) -> bool {
    match polarity {
        Polarity::HigherIsWatermarked => score >= threshold,
        Polarity::LowerIsWatermarked => score <= threshold,
    }
}
