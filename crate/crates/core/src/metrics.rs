//! Effectiveness and fidelity metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::calibrate::{calibrate_with_minimum, Polarity};
use crate::detect::DetectError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("score list `{0}` is empty")]
    EmptySide(&'static str),
    #[error("target FPR {target_fpr} needs at least {need} negatives, have {have}")]
    InsufficientNegatives { target_fpr: f64, have: usize, need: usize },
    #[error("reference is empty")]
    EmptyReference,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Scores of watermarked (`positives`) and unwatermarked (`negatives`) texts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl ScorePair {
    pub fn new(positives: Vec<f64>, negatives: Vec<f64>) -> Self {
        Self { positives, negatives }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve over every distinct threshold, AUC by the trapezoid rule.
pub fn roc_auc(p: &ScorePair) -> Result<RocCurve, MetricError> {
    if p.positives.is_empty() {
        return Err(MetricError::EmptySide("positives"));
    }
    if p.negatives.is_empty() {
        return Err(MetricError::EmptySide("negatives"));
    }
    if p.positives.iter().chain(&p.negatives).any(|s| s.is_nan()) {
        return Err(MetricError::InvalidParameter("scores contain NaN".into()));
    }
    // (score, is_positive), descending by score
    let mut all: Vec<(f64, bool)> =
        p.positives.iter().map(|&s| (s, true)).chain(p.negatives.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (np, nn) = (p.positives.len() as f64, p.negatives.len() as f64);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = vec![(0.0, 0.0)];
    let mut auc = 0.0;
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(RocCurve { points, auc: auc / (np * nn) })
}

/// Fraction of positives flagged at the threshold calibrated on the
/// negatives for `target_fpr`.
pub fn tpr_at_fpr(p: &ScorePair, target_fpr: f64) -> Result<f64, MetricError> {
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(MetricError::InvalidParameter(format!("target FPR must be in (0,1), got {target_fpr}")));
    }
    if p.positives.is_empty() {
        return Err(MetricError::EmptySide("positives"));
    }
    let need = (1.0 / target_fpr - 1e-9).ceil() as usize;
    let threshold = calibrate_with_minimum(&p.negatives, target_fpr, Polarity::HigherIsWatermarked, need).map_err(|e| match e {
        DetectError::InsufficientNulls { have, need } => MetricError::InsufficientNegatives { target_fpr, have, need },
        other => MetricError::InvalidParameter(other.to_string()),
    })?;
    Ok(p.positives.iter().filter(|&&s| s >= threshold).count() as f64 / p.positives.len() as f64)
}

/// Unit-cost edit distance between two sequences.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Word error rate: edit distance over the reference length.
pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Sentence BLEU with clipped n-gram precisions for orders `1..=max_n` and
/// brevity penalty `exp(1 - |ref|/|hyp|)` for short hypotheses.
pub fn bleu<T: Eq + std::hash::Hash>(reference: &[T], hypothesis: &[T], max_n: usize) -> Result<f64, MetricError> {
    use std::collections::HashMap;
    if max_n == 0 {
        return Err(MetricError::InvalidParameter("max_n must be at least 1".into()));
    }
    if reference.is_empty() || hypothesis.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if hypothesis.len() < n {
            return Ok(0.0);
        }
        let mut ref_counts: HashMap<&[T], usize> = HashMap::new();
        for g in reference.windows(n) {
            *ref_counts.entry(g).or_default() += 1;
        }
        let mut hyp_counts: HashMap<&[T], usize> = HashMap::new();
        for g in hypothesis.windows(n) {
            *hyp_counts.entry(g).or_default() += 1;
        }
        let matched: usize = hyp_counts.iter().map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0))).sum();
        if matched == 0 {
            return Ok(0.0);
        }
        log_sum += (matched as f64 / (hypothesis.len() - n + 1) as f64).ln();
    }
    let bp = if hypothesis.len() < reference.len() {
        (1.0 - reference.len() as f64 / hypothesis.len() as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / max_n as f64).exp())
}
