//! Distribution shift: add `delta` to the logits of a seeded green list.

use crate::detect::stats::TokenStatistic;
use crate::lm::Distribution;
use crate::randomness::{permutation, rand_unit, Seed};
use crate::text::TokenId;

use super::{GenerateError, GenerationStrategy, StepContext};

/// Logit floor standing in for `ln 0`.
const LOG_ZERO: f64 = -1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    pub fn from_distribution(p: &Distribution) -> Self {
        Self(p.probs().iter().map(|&x| if x > 0.0 { x.ln() } else { LOG_ZERO }).collect())
    }

    pub fn softmax(&self) -> Distribution {
        let max = self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights = self.0.iter().map(|&l| if l <= LOG_ZERO { 0.0 } else { (l - max).exp() }).collect();
        Distribution::from_weights(weights).expect("the maximal logit has weight 1")
    }
}

pub fn green_list_size(gamma: f64, d: usize) -> usize {
    (gamma * d as f64).floor() as usize
}

/// Tokens whose position in `permutation(seed, d)` is below `floor(gamma*d)`.
/// Returned sorted by id.
pub fn green_set(seed: Seed, gamma: f64, d: usize) -> Result<Vec<TokenId>, GenerateError> {
    let size = green_list_size(gamma, d);
    if size == 0 || size >= d {
        return Err(GenerateError::DegenerateGreenList { gamma, d, size });
    }
    let mut green = permutation(seed, d)[..size].to_vec();
    green.sort_unstable();
    Ok(green)
}

pub fn apply_shift(logits: &Logits, green: &[TokenId], delta: f64) -> Logits {
    let mut out = logits.0.clone();
    for &g in green {
        if out[g as usize] > LOG_ZERO {
            out[g as usize] += delta;
        }
    }
    Logits(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub gamma: f64,
    pub delta: f64,
}

impl Shift {
    fn shifted(&self, p: &Distribution, seed: Seed) -> Result<Distribution, GenerateError> {
        let green = green_set(seed, self.gamma, p.len())?;
        Ok(apply_shift(&Logits::from_distribution(p), &green, self.delta).softmax())
    }
}

impl GenerationStrategy for Shift {
    fn name(&self) -> &'static str {
        "shift"
    }

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError> {
        let shifted = self.shifted(p, step.seed)?;
        Ok(shifted.inverse_cdf(rand_unit(step.sampling_seed, step.position as u64)))
    }

    fn perturbed(&self, p: &Distribution, step: &StepContext<'_>) -> Option<Distribution> {
        self.shifted(p, step.seed).ok()
    }

    fn statistic(&self) -> Option<TokenStatistic> {
        Some(TokenStatistic::Green { gamma: self.gamma })
    }
}
