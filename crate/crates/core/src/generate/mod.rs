//! Watermarked generation.
//!
//! A [`GenerationStrategy`] turns the model's next-token distribution and
//! the step's seed into a token. The three families live in submodules:
//! distribution shift ([`shift`]), distribution reweight ([`reweight`]) and
//! distribution transform ([`transform`]).

use std::fmt;

use thiserror::Error;

use crate::detect::stats::TokenStatistic;
use crate::lm::{Distribution, NextTokenModel, Temperature};
use crate::randomness::{rand_unit, Seed};
use crate::scheme::Watermarker;
use crate::text::{TokenId, TokenSeq};

pub mod reweight;
pub mod shift;
pub mod transform;

pub use reweight::{reweight_delta, reweight_gamma, reweight_gamma_with_permutation, DeltaReweight, GammaReweight};
pub use shift::{apply_shift, green_set, Logits, Shift};
pub use transform::{sample_exp_transform, sample_inverse_transform, ExpTransform, InverseTransform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("green list would hold {size} of {d} tokens (gamma = {gamma})")]
    DegenerateGreenList { gamma: f64, d: usize, size: usize },
    #[error("distribution has no support")]
    EmptySupport,
    #[error("max_len must be at least 1")]
    ZeroLength,
    #[error("model vocabulary size {model} does not match scheme vocabulary size {scheme}")]
    VocabMismatch { model: usize, scheme: usize },
}

/// Everything a strategy may consume at one generation step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    /// Watermark seed from the context scheme.
    pub seed: Seed,
    pub position: usize,
    /// Key-only permutation, present for strategies that ask for one.
    pub key_permutation: Option<&'a [TokenId]>,
    /// Seed of the per-text sampling stream, used by strategies that still
    /// need ordinary sampling after perturbing the distribution.
    pub sampling_seed: Seed,
}

pub trait GenerationStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn select(&self, p: &Distribution, step: &StepContext<'_>) -> Result<TokenId, GenerateError>;

    /// Explicit perturbed distribution, when the strategy has one.
    fn perturbed(&self, p: &Distribution, step: &StepContext<'_>) -> Option<Distribution>;

    /// Per-token detection statistic that matches this strategy.
    fn statistic(&self) -> Option<TokenStatistic>;

    fn needs_key_permutation(&self) -> bool {
        false
    }
}

/// Generates `max_len` watermarked tokens after `prompt`.
///
/// The model sees prompt plus generated tokens; seeds are derived from the
/// generated tokens alone so a detector holding only the text recomputes
/// them exactly.
pub fn generate_text(
    model: &dyn NextTokenModel,
    prompt: &[TokenId],
    wm: &Watermarker,
    max_len: usize,
) -> Result<TokenSeq, GenerateError> {
    generate_traced(model, prompt, wm, max_len).map(|t| t.tokens)
}

/// Generated tokens with the seed used at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub tokens: TokenSeq,
    pub seeds: Vec<Seed>,
}

pub fn generate_traced(
    model: &dyn NextTokenModel,
    prompt: &[TokenId],
    wm: &Watermarker,
    max_len: usize,
) -> Result<Trace, GenerateError> {
    if max_len == 0 {
        return Err(GenerateError::ZeroLength);
    }
    if model.vocab_size() != wm.vocab_size() {
        return Err(GenerateError::VocabMismatch { model: model.vocab_size(), scheme: wm.vocab_size() });
    }
    let tau = wm.config().tau;
    let sampling_seed = wm.sampling_seed(prompt);
    let mut context: Vec<TokenId> = prompt.to_vec();
    let mut out = Vec::with_capacity(max_len);
    let mut seeds = Vec::with_capacity(max_len);
    for t in 0..max_len {
        let p = model.next_dist(&context, tau);
        let seed = wm.keyed().seed_at(&out, t);
        let step = StepContext { seed, position: t, key_permutation: wm.keyed().key_permutation(), sampling_seed };
        let tok = wm.strategy().select(&p, &step)?;
        out.push(tok);
        seeds.push(seed);
        context.push(tok);
    }
    Ok(Trace { tokens: TokenSeq(out), seeds })
}

/// Ordinary sampling with no watermark, driven by a seeded stream so runs
/// are replayable.
pub fn generate_unwatermarked(
    model: &dyn NextTokenModel,
    prompt: &[TokenId],
    tau: Temperature,
    max_len: usize,
    rng_seed: u64,
) -> TokenSeq {
    let mut context: Vec<TokenId> = prompt.to_vec();
    let mut out = Vec::with_capacity(max_len);
    for t in 0..max_len {
        let p = model.next_dist(&context, tau);
        let tok = p.inverse_cdf(rand_unit(Seed(rng_seed), t as u64));
        out.push(tok);
        context.push(tok);
    }
    TokenSeq(out)
}
