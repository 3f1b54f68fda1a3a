use crate::lm::{entropy, NextTokenModel};
use crate::randomness::Seed;
use crate::scheme::Watermarker;
use crate::text::TokenId;

use super::calibrate::{permutation_test_pvalue, Polarity};
use super::edit::edit_score;
use super::stats::{KeyedScheme, TokenStatistic};
use super::{DetectError, Detector, Score};

/// Log-ratio contribution of a token the perturbed distribution rules out.
pub const LLR_FLOOR: f64 = -30.0;

fn statistic_kind(s: TokenStatistic) -> &'static str {
    match s {
        TokenStatistic::Green { .. } => "green",
        TokenStatistic::Exp => "exp",
        TokenStatistic::Its => "its",
    }
}

/// Sum of per-token statistics, standardized by their null moments.
#[derive(Debug, Clone)]
pub struct SumDetector {
    name: &'static str,
    expects: &'static str,
}

impl SumDetector {
    pub fn green() -> Self {
        Self { name: "sum-green", expects: "green" }
    }

    pub fn exp() -> Self {
        Self { name: "sum-exp", expects: "exp" }
    }

    pub fn its() -> Self {
        Self { name: "sum-its", expects: "its" }
    }
}

impl Detector for SumDetector {
    fn name(&self) -> &'static str {
        self.name
    }

    fn statistic(&self, _: &Watermarker, keyed: &KeyedScheme, tokens: &[TokenId], _: Option<&dyn NextTokenModel>) -> Result<f64, DetectError> {
        match keyed.statistic() {
            Some(s) if statistic_kind(s) == self.expects => Ok(keyed.sum_z(tokens)?.0),
            other => Err(DetectError::Unsupported(format!(
                "{} needs a {} statistic, scheme provides {:?}",
                self.name, self.expects, other
            ))),
        }
    }
}

/// Alignment score with a permutation test over reference keys. The score
/// reported is the observed statistic standardized by the reference scores.
#[derive(Debug, Clone)]
pub struct EditScoreDetector {
    pub psi: f64,
}

impl Detector for EditScoreDetector {
    fn name(&self) -> &'static str {
        "edit-score"
    }

    fn statistic(&self, _: &Watermarker, keyed: &KeyedScheme, tokens: &[TokenId], _: Option<&dyn NextTokenModel>) -> Result<f64, DetectError> {
        let seeds = keyed.seeds(tokens);
        Ok(-edit_score(tokens, &seeds, keyed, self.psi)?)
    }

    fn score(&self, wm: &Watermarker, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<Score, DetectError> {
        if tokens.is_empty() {
            return Err(DetectError::EmptyText);
        }
        let observed = self.statistic(wm, wm.keyed(), tokens, model)?;
        let refs = wm
            .references()
            .iter()
            .map(|k| self.statistic(wm, k, tokens, model))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Score {
            value: standardize(observed, &refs),
            raw: -observed,
            p_value: Some(permutation_test_pvalue(observed, &refs, Polarity::HigherIsWatermarked)),
            n_tokens: tokens.len(),
        })
    }
}

/// `(observed - mean) / sd` of the reference scores.
pub fn standardize(observed: f64, refs: &[f64]) -> f64 {
    let n = refs.len() as f64;
    let mean = refs.iter().sum::<f64>() / n;
    let var = if refs.len() > 1 { refs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (observed - mean) / var.sqrt().max(1e-9)
}

/// `sum_i log(p~(x_i) / p(x_i))` with the model context taken from the text
/// itself (bos-padded).
pub fn llr_score(
    tokens: &[TokenId],
    model: &dyn NextTokenModel,
    wm: &Watermarker,
    keyed: &KeyedScheme,
) -> Result<f64, DetectError> {
    if tokens.is_empty() {
        return Err(DetectError::EmptyText);
    }
    let tau = wm.config().tau;
    let seeds = keyed.seeds(tokens);
    let mut total = 0.0;
    for (t, (&x, &seed)) in tokens.iter().zip(&seeds).enumerate() {
        let p = model.next_dist(&tokens[..t], tau);
        let step = wm.step_context(keyed, seed, t, Seed(0));
        let q = wm
            .strategy()
            .perturbed(&p, &step)
            .ok_or_else(|| DetectError::Unsupported(format!("strategy {} has no explicit perturbed distribution", wm.strategy().name())))?;
        let (px, qx) = (p.prob(x), q.prob(x));
        total += if qx > 0.0 && px > 0.0 { (qx / px).ln() } else { LLR_FLOOR };
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct LlrDetector;

impl Detector for LlrDetector {
    fn name(&self) -> &'static str {
        "llr"
    }

    fn requires_model(&self) -> bool {
        true
    }

    fn statistic(&self, wm: &Watermarker, keyed: &KeyedScheme, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<f64, DetectError> {
        let model = model.ok_or(DetectError::ModelRequired("llr"))?;
        llr_score(tokens, model, wm, keyed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedScore {
    /// `sum H_i s_i / sum H_i`
    pub score: f64,
    pub z: f64,
    pub effective_n: f64,
}

/// Entropy-weighted green fraction and its z against the null mean
/// `gamma`, with effective sample size `(sum H)^2 / sum H^2`.
pub fn entropy_weighted_score(
    tokens: &[TokenId],
    seeds: &[Seed],
    entropies: &[f64],
    keyed: &KeyedScheme,
) -> Result<WeightedScore, DetectError> {
    if tokens.is_empty() {
        return Err(DetectError::EmptyText);
    }
    if tokens.len() != seeds.len() || tokens.len() != entropies.len() {
        return Err(DetectError::InvalidParameter("tokens, seeds and entropies differ in length".into()));
    }
    let stats = keyed.position_stats(tokens, seeds)?;
    let h_sum: f64 = entropies.iter().sum();
    if h_sum <= 0.0 {
        return Err(DetectError::ZeroEntropyText);
    }
    let h_sq: f64 = entropies.iter().map(|h| h * h).sum();
    let score = entropies.iter().zip(&stats).map(|(h, s)| h * s).sum::<f64>() / h_sum;
    let (mean, var) = keyed.null_moments(tokens[0])?;
    let effective_n = h_sum * h_sum / h_sq;
    let z = (score - mean) / (var / effective_n).sqrt();
    Ok(WeightedScore { score, z, effective_n })
}

/// Per-position entropies of the model's next-token distributions over the
/// text, with the text as context.
pub fn text_entropies(tokens: &[TokenId], model: &dyn NextTokenModel, wm: &Watermarker) -> Vec<f64> {
    let tau = wm.config().tau;
    (0..tokens.len()).map(|t| entropy(&model.next_dist(&tokens[..t], tau))).collect()
}

#[derive(Debug, Clone)]
pub struct EntropyWeightedGreen;

impl Detector for EntropyWeightedGreen {
    fn name(&self) -> &'static str {
        "entropy-weighted-green"
    }

    fn requires_model(&self) -> bool {
        true
    }

    fn statistic(&self, wm: &Watermarker, keyed: &KeyedScheme, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<f64, DetectError> {
        let model = model.ok_or(DetectError::ModelRequired("entropy-weighted-green"))?;
        if !matches!(keyed.statistic(), Some(TokenStatistic::Green { .. })) {
            return Err(DetectError::Unsupported("entropy weighting needs a green-list statistic".into()));
        }
        if tokens.is_empty() {
            return Err(DetectError::EmptyText);
        }
        let seeds = keyed.seeds(tokens);
        let entropies = text_entropies(tokens, model, wm);
        Ok(entropy_weighted_score(tokens, &seeds, &entropies, keyed)?.z)
    }
}
