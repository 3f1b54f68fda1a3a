//! Next-token distribution providers.
//!
//! [`NextTokenModel`] is the seam between the watermarking code and whatever
//! produces `p(x_t | x_<t)`. The built-in [`NgramModel`] is an additively
//! smoothed n-gram model, small enough to train on a desk-scale corpus.
//!
//! Persistence format (text, one record per line):
//!
//! ```text
//! wmlab-ngram v1
//! order <n>
//! alpha <alpha>
//! vocab <count of non-sentinel words>
//! <word>                       (repeated, id order)
//! contexts <count>
//! <ctx ids, space separated>\t<token>:<count> <token>:<count> ...
//! ```
//!
//! Context ids may include the `bos` id. Floats are written with Rust's
//! shortest round-trip formatting.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{TextError, TokenId, TokenSeq, Vocabulary};

const FORMAT_HEADER: &str = "wmlab-ngram v1";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self, LmError> {
        if probs.is_empty() {
            return Err(LmError::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(LmError::InvalidDistribution(format!("entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(LmError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self, LmError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(LmError::InvalidDistribution(format!("weights sum to {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn uniform(d: usize) -> Self {
        Self { probs: vec![1.0 / d as f64; d] }
    }

    pub fn one_hot(d: usize, id: TokenId) -> Self {
        let mut probs = vec![0.0; d];
        probs[id as usize] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs.get(id as usize).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i as TokenId)
    }

    /// Smallest id whose cumulative mass (ascending id order) reaches `u`.
    pub fn inverse_cdf(&self, u: f64) -> TokenId {
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = i;
                if acc >= u {
                    return i as TokenId;
                }
            }
        }
        // rounding left the total just short of u
        last_positive as TokenId
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }
}

/// Shannon entropy in nats over the support.
pub fn entropy(p: &Distribution) -> f64 {
    p.probs.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum::<f64>().max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub const ONE: Temperature = Temperature(1.0);

    pub fn new(tau: f64) -> Result<Self, LmError> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Self(tau))
        } else {
            Err(LmError::InvalidParameter(format!("temperature must be > 0, got {tau}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self::ONE
    }
}

impl TryFrom<f64> for Temperature {
    type Error = LmError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// Applies temperature in log space: `p_i^(1/tau)`, renormalized.
pub fn apply_temperature(p: Distribution, tau: Temperature) -> Distribution {
    if tau.0 == 1.0 {
        return p;
    }
    let inv = 1.0 / tau.0;
    let max_log = p.probs.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = p
        .probs
        .iter()
        .map(|&x| if x > 0.0 { ((x.ln() - max_log) * inv).exp() } else { 0.0 })
        .collect();
    Distribution::from_weights(weights).expect("max entry has weight 1")
}

/// Anything that can supply next-token distributions.
pub trait NextTokenModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Distribution of the next token given everything generated so far
    /// (prompt included).
    fn next_dist(&self, context: &[TokenId], tau: Temperature) -> Distribution;
}

#[derive(Debug, Clone, PartialEq)]
struct ContextCounts {
    total: u64,
    /// Sorted by token id.
    counts: Vec<(TokenId, u32)>,
}

/// Additively smoothed n-gram model.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

impl NgramModel {
    pub fn train(vocab: Vocabulary, corpus: &[TokenSeq], order: usize, alpha: f64) -> Result<Self, LmError> {
        if order == 0 {
            return Err(LmError::InvalidParameter("order must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LmError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if corpus.iter().all(|doc| doc.is_empty()) {
            return Err(LmError::EmptyCorpus);
        }
        for doc in corpus {
            vocab.validate(doc)?;
        }
        let ctx_len = order - 1;
        let bos = vocab.bos_id();
        let mut raw: HashMap<Vec<TokenId>, HashMap<TokenId, u32>> = HashMap::new();
        for doc in corpus.iter().filter(|d| !d.is_empty()) {
            let mut padded = vec![bos; ctx_len];
            padded.extend_from_slice(doc);
            for window in padded.windows(order) {
                let (ctx, next) = window.split_at(ctx_len);
                *raw.entry(ctx.to_vec()).or_default().entry(next[0]).or_insert(0) += 1;
            }
        }
        let counts = raw
            .into_iter()
            .map(|(ctx, per_token)| {
                let mut counts: Vec<(TokenId, u32)> = per_token.into_iter().collect();
                counts.sort_unstable();
                let total = counts.iter().map(|&(_, c)| c as u64).sum();
                (ctx, ContextCounts { total, counts })
            })
            .collect();
        Ok(Self { order, alpha, vocab, counts })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    /// Raw count of `next` after `context` (exactly `order - 1` ids).
    pub fn count(&self, context: &[TokenId], next: TokenId) -> u32 {
        self.counts
            .get(context)
            .and_then(|c| c.counts.binary_search_by_key(&next, |&(t, _)| t).ok().map(|i| c.counts[i].1))
            .unwrap_or(0)
    }

    fn context_key(&self, context: &[TokenId]) -> Vec<TokenId> {
        let ctx_len = self.order - 1;
        let mut key = Vec::with_capacity(ctx_len);
        let have = context.len().min(ctx_len);
        key.resize(ctx_len - have, self.vocab.bos_id());
        key.extend_from_slice(&context[context.len() - have..]);
        key
    }

    /// Smoothed distribution before temperature.
    pub fn base_dist(&self, context: &[TokenId]) -> Distribution {
        let d = self.vocab.len();
        let key = self.context_key(context);
        match self.counts.get(&key) {
            None => Distribution::uniform(d),
            Some(cc) => {
                let denom = cc.total as f64 + self.alpha * d as f64;
                let mut probs = vec![self.alpha / denom; d];
                for &(tok, c) in &cc.counts {
                    probs[tok as usize] = (c as f64 + self.alpha) / denom;
                }
                Distribution { probs }
            }
        }
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<(), LmError> {
        writeln!(out, "{FORMAT_HEADER}")?;
        writeln!(out, "order {}", self.order)?;
        writeln!(out, "alpha {}", self.alpha)?;
        let words = self.vocab.word_forms();
        writeln!(out, "vocab {}", words.len())?;
        for w in words {
            writeln!(out, "{w}")?;
        }
        let mut contexts: Vec<_> = self.counts.iter().collect();
        contexts.sort_by(|a, b| a.0.cmp(b.0));
        writeln!(out, "contexts {}", contexts.len())?;
        for (ctx, cc) in contexts {
            let ctx_str: Vec<String> = ctx.iter().map(|t| t.to_string()).collect();
            let counts: Vec<String> = cc.counts.iter().map(|(t, c)| format!("{t}:{c}")).collect();
            writeln!(out, "{}\t{}", ctx_str.join(" "), counts.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self, LmError> {
        let mut lines = input.lines();
        let mut next_line = |what: &str| -> Result<String, LmError> {
            lines.next().ok_or_else(|| LmError::Format(format!("missing {what}")))?.map_err(LmError::from)
        };
        if next_line("header")? != FORMAT_HEADER {
            return Err(LmError::Format("unrecognized header".into()));
        }
        let order: usize = parse_field(&next_line("order")?, "order")?;
        let alpha: f64 = parse_field(&next_line("alpha")?, "alpha")?;
        let n_words: usize = parse_field(&next_line("vocab")?, "vocab")?;
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(next_line("vocabulary word")?);
        }
        let vocab = Vocabulary::from_surface_forms(words)?;
        let n_ctx: usize = parse_field(&next_line("contexts")?, "contexts")?;
        let mut counts = HashMap::with_capacity(n_ctx);
        let parse_id = |s: &str| -> Result<TokenId, LmError> {
            let id: TokenId = s.parse().map_err(|_| LmError::Format(format!("bad token id {s:?}")))?;
            if id as usize >= vocab.len() {
                return Err(LmError::Format(format!("token id {id} out of range")));
            }
            Ok(id)
        };
        for _ in 0..n_ctx {
            let line = next_line("context record")?;
            let (ctx_part, count_part) =
                line.split_once('\t').ok_or_else(|| LmError::Format(format!("bad record {line:?}")))?;
            let ctx = ctx_part.split_whitespace().map(parse_id).collect::<Result<Vec<_>, _>>()?;
            if ctx.len() != order - 1 {
                return Err(LmError::Format(format!("context {ctx_part:?} has wrong length")));
            }
            let mut entries = Vec::new();
            for pair in count_part.split_whitespace() {
                let (t, c) = pair.split_once(':').ok_or_else(|| LmError::Format(format!("bad count {pair:?}")))?;
                let c: u32 = c.parse().map_err(|_| LmError::Format(format!("bad count {pair:?}")))?;
                if c == 0 {
                    return Err(LmError::Format("stored counts must be positive".into()));
                }
                entries.push((parse_id(t)?, c));
            }
            entries.sort_unstable();
            let total = entries.iter().map(|&(_, c)| c as u64).sum();
            counts.insert(ctx, ContextCounts { total, counts: entries });
        }
        if order == 0 || alpha.is_nan() || alpha <= 0.0 {
            return Err(LmError::Format("invalid order or alpha".into()));
        }
        Ok(Self { order, alpha, vocab, counts })
    }
}

fn parse_field<T: std::str::FromStr>(line: &str, name: &str) -> Result<T, LmError> {
    line.strip_prefix(name)
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| LmError::Format(format!("expected `{name} <value>`, got {line:?}")))
}

impl NextTokenModel for NgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_dist(&self, context: &[TokenId], tau: Temperature) -> Distribution {
        apply_temperature(self.base_dist(context), tau)
    }
}
