//! Watermark detection.
//!
//! Every [`Detector`] produces a score oriented so that larger values mean
//! stronger watermark evidence. Thresholds come from
//! [`calibrate_threshold`] over scores of unwatermarked texts.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::NextTokenModel;
use crate::scheme::Watermarker;
use crate::text::TokenId;

pub mod calibrate;
pub mod detectors;
pub mod edit;
pub mod stats;

pub use calibrate::{calibrate_threshold, is_flagged, permutation_test_pvalue, Polarity};
pub use detectors::{entropy_weighted_score, llr_score, EditScoreDetector, EntropyWeightedGreen, LlrDetector, SumDetector, WeightedScore};
pub use edit::edit_score;
pub use stats::{stat_exp, stat_green, sum_score, z_green, KeyedScheme, TokenStatistic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("text has no tokens")]
    EmptyText,
    #[error("detector `{0}` needs the language model")]
    ModelRequired(&'static str),
    #[error("every position has zero entropy")]
    ZeroEntropyText,
    #[error("need at least {need} null scores, have {have}")]
    InsufficientNulls { have: usize, need: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// Detection score; larger means more watermarked.
    pub value: f64,
    /// The underlying statistic in its natural polarity (for example the
    /// edit score, where lower is more watermarked).
    pub raw: f64,
    pub p_value: Option<f64>,
    pub n_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub score: f64,
    pub threshold: f64,
    pub is_watermarked: bool,
    pub p_value: Option<f64>,
}

pub trait Detector: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn requires_model(&self) -> bool {
        false
    }

    /// The statistic under one keyed view, larger meaning more watermarked.
    /// Reference keys of a permutation test are evaluated through this.
    fn statistic(
        &self,
        wm: &Watermarker,
        keyed: &KeyedScheme,
        tokens: &[TokenId],
        model: Option<&dyn NextTokenModel>,
    ) -> Result<f64, DetectError>;

    fn score(&self, wm: &Watermarker, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<Score, DetectError> {
        if tokens.is_empty() {
            return Err(DetectError::EmptyText);
        }
        let value = self.statistic(wm, wm.keyed(), tokens, model)?;
        Ok(Score { value, raw: value, p_value: None, n_tokens: tokens.len() })
    }
}

/// Scores `tokens` and applies a calibrated threshold.
pub fn detect(
    tokens: &[TokenId],
    wm: &Watermarker,
    threshold: f64,
    model: Option<&dyn NextTokenModel>,
) -> Result<DetectionResult, DetectError> {
    let score = wm.score(tokens, model)?;
    Ok(DetectionResult {
        score: score.value,
        threshold,
        is_watermarked: score.value >= threshold,
        p_value: score.p_value,
    })
}
