//! Distribution transform: deterministic sampling from seeded randomness.
//!
//! The exponential transform picks `argmax r_i^(1/p_i)` (Gumbel-max in
//! disguise); the inverse transform walks a key-seeded permutation until the
//! cumulative mass reaches a seeded uniform. Both leave the marginal
//! distribution of each token untouched.

use crate::detect::stats::TokenStatistic;
use crate::lm::Distribution;
use crate::randomness::rand_unit;
use crate::text::TokenId;

use super::{GenerateError, GenerationStrategy, StepContext};

/// `argmax_i r_i^(1/p_i)` over the support of `p`, smallest id on ties.
pub fn sample_exp_transform(p: &Distribution, r: &[f64]) -> Result<TokenId, GenerateError> {
    exp_argmax(p, |i| r[i])
}

// r^(1/p) is monotone in ln(r)/p, which avoids underflow for small p.
fn exp_argmax(p: &Distribution, r: impl Fn(usize) -> f64) -> Result<TokenId, GenerateError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &pi) in p.probs().iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        let key = r(i).ln() / pi;
        if best.is_none_or(|(b, _)| key > b) {
            best = Some((key, i));
        }
    }
    best.map(|(_, i)| i as TokenId).ok_or(GenerateError::EmptySupport)
}

/// Returns `perm[j*]` for the smallest `j*` whose cumulative mass along
/// `perm` reaches `u`.
pub fn sample_inverse_transform(p: &Distribution, u: f64, perm: &[TokenId]) -> TokenId {
    let mut acc = 0.0;
    let mut last_positive = perm[0];
    for &tok in perm {
        let m = p.prob(tok);
        if m > 0.0 {
            acc += m;
            last_positive = tok;
            if acc >= u {
                return tok;
            }
        }
    }
    last_positive
}

#[derive(Debug, Clone, Default)]
pub struct ExpTransform;

impl GenerationStrategy for ExpTransform {
    fn name(&self) -> &'static str {
        "transform-exp"
    }

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError> {
        // same values as rand_vector(seed, d), without materializing it
        exp_argmax(p, |i| rand_unit(step.seed, i as u64))
    }

    fn perturbed(&self, _: &Distribution, _: &StepContext<'_>) -> Option<Distribution> {
        None
    }

    fn statistic(&self) -> Option<TokenStatistic> {
        Some(TokenStatistic::Exp)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InverseTransform;

impl GenerationStrategy for InverseTransform {
    fn name(&self) -> &'static str {
        "transform-its"
    }

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError> {
        let perm = step.key_permutation.expect("inverse transform requires the key permutation");
        Ok(sample_inverse_transform(p, rand_unit(step.seed, 0), perm))
    }

    fn perturbed(&self, _: &Distribution, _: &StepContext<'_>) -> Option<Distribution> {
        None
    }

    fn statistic(&self) -> Option<TokenStatistic> {
        Some(TokenStatistic::Its)
    }

    fn needs_key_permutation(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{rand_vector, Seed};

    #[test]
    fn exp_one_hot_ignores_r() {
        let p = Distribution::one_hot(3, 1);
        assert_eq!(sample_exp_transform(&p, &[0.99, 0.01, 0.99]).unwrap(), 1);
    }

    #[test]
    fn exp_uniform_is_argmax_r() {
        let p = Distribution::uniform(3);
        assert_eq!(sample_exp_transform(&p, &[0.2, 0.9, 0.5]).unwrap(), 1);
        assert_eq!(sample_exp_transform(&p, &[0.7, 0.7, 0.5]).unwrap(), 0);
    }

    #[test]
    fn exp_streaming_matches_vector() {
        let p = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for s in 0..200 {
            let seed = Seed(s * 7919);
            let step = StepContext { seed, position: 0, key_permutation: None, sampling_seed: Seed(0) };
            assert_eq!(
                ExpTransform.select(&p, &step).unwrap(),
                sample_exp_transform(&p, &rand_vector(seed, 4)).unwrap()
            );
        }
    }

    #[test]
    fn inverse_transform_cases() {
        let p = Distribution::uniform(4);
        assert_eq!(sample_inverse_transform(&p, 0.6, &[0, 1, 2, 3]), 2);
        let q = Distribution::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(sample_inverse_transform(&q, 1e-9, &[3, 0, 2, 1]), 2);
    }
}
