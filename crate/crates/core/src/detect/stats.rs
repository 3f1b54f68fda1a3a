//! Per-token detection statistics and the keyed view that evaluates them.

use serde::{Deserialize, Serialize};

use crate::generate::shift::green_list_size;
use crate::randomness::{derive_seed, derive_seeds, permutation, positions, rand_unit, ContextScheme, Prf, SecretKey, Seed};
use crate::text::TokenId;

use super::DetectError;

const ITS_PERMUTATION_LABEL: &[u8] = b"wmlab/its-permutation";

/// Which per-token statistic `s(x, r)` a detector aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TokenStatistic {
    /// 1 if the token is in the seed's green list, else 0.
    Green { gamma: f64 },
    /// `-ln(1 - r[x])`, unit exponential under the null.
    Exp,
    /// `(u - 1/2)(eta(x) - 1/2)` with `eta` the token's normalized rank in
    /// the key permutation; zero mean under the null.
    Its,
}

pub fn stat_green(token: TokenId, seed: Seed, gamma: f64, d: usize) -> f64 {
    let k = green_list_size(gamma, d);
    let perm = permutation(seed, d);
    if perm[..k].contains(&token) {
        1.0
    } else {
        0.0
    }
}

/// `-ln(1 - r[token])` for a materialized random vector.
pub fn stat_exp(token: TokenId, r: &[f64]) -> f64 {
    exp_of_unit(r[token as usize])
}

#[inline]
fn exp_of_unit(r: f64) -> f64 {
    -(-r).ln_1p()
}

pub fn sum_score(stats: &[f64]) -> Result<f64, DetectError> {
    if stats.is_empty() {
        return Err(DetectError::EmptyText);
    }
    Ok(stats.iter().sum())
}

/// One-tailed z for a green-token count `s` over `n` tokens.
pub fn z_green(s: f64, n: usize, gamma: f64) -> f64 {
    let n = n as f64;
    (s - gamma * n) / (n * gamma * (1.0 - gamma)).sqrt()
}

/// Fast evaluator for one seed, reused across many tokens.
pub enum StatRow<'a> {
    Green { positions: Vec<u32>, size: u32 },
    Exp { seed: Seed },
    Its { centered_u: f64, key_positions: &'a [u32], scale: f64 },
}

impl StatRow<'_> {
    #[inline]
    pub fn eval(&self, token: TokenId) -> f64 {
        match self {
            StatRow::Green { positions, size } => {
                if positions[token as usize] < *size {
                    1.0
                } else {
                    0.0
                }
            }
            StatRow::Exp { seed } => exp_of_unit(rand_unit(*seed, token as u64)),
            StatRow::Its { centered_u, key_positions, scale } => {
                centered_u * (key_positions[token as usize] as f64 * scale - 0.5)
            }
        }
    }
}

/// The key-dependent half of a watermark scheme: seed derivation plus the
/// per-token statistic, evaluated under one particular key.
#[derive(Debug, Clone)]
pub struct KeyedScheme {
    prf: Prf,
    context: ContextScheme,
    bos: TokenId,
    d: usize,
    statistic: Option<TokenStatistic>,
    key_permutation: Option<Vec<TokenId>>,
    key_positions: Option<Vec<u32>>,
}

impl KeyedScheme {
    pub fn new(
        key: &SecretKey,
        context: ContextScheme,
        bos: TokenId,
        d: usize,
        statistic: Option<TokenStatistic>,
        needs_key_permutation: bool,
    ) -> Self {
        let prf = Prf::new(key);
        let needs_perm = needs_key_permutation || matches!(statistic, Some(TokenStatistic::Its));
        let key_permutation = needs_perm.then(|| permutation(prf.eval(ITS_PERMUTATION_LABEL), d));
        let key_positions = key_permutation.as_deref().map(positions);
        Self { prf, context, bos, d, statistic, key_permutation, key_positions }
    }

    pub fn prf(&self) -> &Prf {
        &self.prf
    }

    pub fn context(&self) -> ContextScheme {
        self.context
    }

    pub fn vocab_size(&self) -> usize {
        self.d
    }

    pub fn statistic(&self) -> Option<TokenStatistic> {
        self.statistic
    }

    pub fn key_permutation(&self) -> Option<&[TokenId]> {
        self.key_permutation.as_deref()
    }

    pub fn seed_at(&self, prior: &[TokenId], t: usize) -> Seed {
        derive_seed(self.context, &self.prf, prior, t, self.bos)
    }

    pub fn seeds(&self, tokens: &[TokenId]) -> Vec<Seed> {
        derive_seeds(self.context, &self.prf, tokens, self.bos)
    }

    fn require_statistic(&self) -> Result<TokenStatistic, DetectError> {
        self.statistic.ok_or(DetectError::Unsupported("scheme has no per-token statistic".into()))
    }

    pub fn row(&self, seed: Seed) -> Result<StatRow<'_>, DetectError> {
        Ok(match self.require_statistic()? {
            TokenStatistic::Green { gamma } => StatRow::Green {
                positions: positions(&permutation(seed, self.d)),
                size: green_list_size(gamma, self.d) as u32,
            },
            TokenStatistic::Exp => StatRow::Exp { seed },
            TokenStatistic::Its => StatRow::Its {
                centered_u: rand_unit(seed, 0) - 0.5,
                key_positions: self.key_positions.as_deref().expect("built with ITS statistic"),
                scale: 1.0 / (self.d.max(2) - 1) as f64,
            },
        })
    }

    /// Per-position statistics `s(x_i, r_i)`.
    pub fn position_stats(&self, tokens: &[TokenId], seeds: &[Seed]) -> Result<Vec<f64>, DetectError> {
        tokens.iter().zip(seeds).map(|(&x, &s)| Ok(self.row(s)?.eval(x))).collect()
    }

    /// Null mean and variance of `s(x, r)` for a token independent of `r`.
    pub fn null_moments(&self, token: TokenId) -> Result<(f64, f64), DetectError> {
        Ok(match self.require_statistic()? {
            TokenStatistic::Green { gamma } => {
                let g = green_list_size(gamma, self.d) as f64 / self.d as f64;
                (g, g * (1.0 - g))
            }
            TokenStatistic::Exp => (1.0, 1.0),
            TokenStatistic::Its => {
                let pos = self.key_positions.as_deref().expect("built with ITS statistic");
                let eta = pos[token as usize] as f64 / (self.d.max(2) - 1) as f64 - 0.5;
                (0.0, eta * eta / 12.0)
            }
        })
    }

    /// Sum-score z: observed sum standardized by the null moments,
    /// conditional on the observed tokens.
    pub fn sum_z(&self, tokens: &[TokenId]) -> Result<(f64, f64), DetectError> {
        if tokens.is_empty() {
            return Err(DetectError::EmptyText);
        }
        let seeds = self.seeds(tokens);
        let stats = self.position_stats(tokens, &seeds)?;
        let s = sum_score(&stats)?;
        let (mut mean, mut var) = (0.0, 0.0);
        for &x in tokens {
            let (m, v) = self.null_moments(x)?;
            mean += m;
            var += v;
        }
        let z = if var > 0.0 { (s - mean) / var.sqrt() } else { 0.0 };
        Ok((z, s))
    }
}
