//! Unbiased distribution reweighting (delta- and gamma-reweighting).

use crate::detect::stats::TokenStatistic;
use crate::lm::Distribution;
use crate::randomness::{permutation, rand_unit, Seed};
use crate::text::TokenId;

use super::{GenerateError, GenerationStrategy, StepContext};

/// Draws one token from `p` with `rand_unit(seed, 0)` and puts all mass on it.
pub fn reweight_delta(p: &Distribution, seed: Seed) -> Distribution {
    Distribution::one_hot(p.len(), p.inverse_cdf(rand_unit(seed, 0)))
}

/// Gamma-reweighting along an explicit token order.
///
/// With cumulative mass `F_j` along `order`, token `order[j]` receives
/// `g(F_j) - g(F_{j-1})` where `g(x) = max(0, 2x - 1)`: the first half of the
/// mass is rejected and the second half doubled.
pub fn reweight_gamma_with_permutation(p: &Distribution, order: &[TokenId]) -> Distribution {
    let g = |x: f64| (2.0 * x - 1.0).max(0.0);
    let mut q = vec![0.0; p.len()];
    let mut prev_f = 0.0;
    let mut prev_g = 0.0;
    for &tok in order {
        let f = (prev_f + p.prob(tok)).min(1.0);
        let gf = g(f);
        q[tok as usize] = (gf - prev_g).max(0.0);
        prev_f = f;
        prev_g = gf;
    }
    // F reaches 1 only up to rounding
    let total: f64 = q.iter().sum();
    if total > 0.0 {
        q.iter_mut().for_each(|x| *x /= total);
    }
    Distribution::new(q).expect("gamma-reweighting preserves total mass")
}

pub fn reweight_gamma(p: &Distribution, seed: Seed) -> Distribution {
    reweight_gamma_with_permutation(p, &permutation(seed, p.len()))
}

#[derive(Debug, Clone, Default)]
pub struct DeltaReweight;

impl GenerationStrategy for DeltaReweight {
    fn name(&self) -> &'static str {
        "reweight-delta"
    }

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError> {
        Ok(reweight_delta(p, step.seed).inverse_cdf(rand_unit(step.seed, 1)))
    }

    fn perturbed(&self, p: &Distribution, step: &StepContext<'_>) -> Option<Distribution> {
        Some(reweight_delta(p, step.seed))
    }

    fn statistic(&self) -> Option<TokenStatistic> {
        None
    }
}

#[derive(Debug, Clone, Default)]
pub struct GammaReweight;

impl GenerationStrategy for GammaReweight {
    fn name(&self) -> &'static str {
        "reweight-gamma"
    }

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError> {
        Ok(reweight_gamma(p, step.seed).inverse_cdf(rand_unit(step.seed, 1)))
    }

    fn perturbed(&self, p: &Distribution, step: &StepContext<'_>) -> Option<Distribution> {
        Some(reweight_gamma(p, step.seed))
    }

    fn statistic(&self) -> Option<TokenStatistic> {
        None
    }
}
