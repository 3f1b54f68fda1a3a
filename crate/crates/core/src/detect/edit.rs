//! Alignment (edit) score between tokens and a seed sequence.
//!
//! `S(i, j) = min{ S(i-1, j-1) - s(x_i, r_j), S(i, j-1) + psi, S(i-1, j) + psi }`
//! with `S(i, 0) = i*psi` and `S(0, j) = j*psi`. The statistic is negated so
//! that minimization rewards matches; lower scores mean stronger watermark
//! evidence.

use crate::randomness::Seed;
use crate::text::TokenId;

use super::stats::KeyedScheme;
use super::DetectError;

/// Runs the recurrence over an `n x m` cost grid, `cost(i, j)` being the
/// diagonal cost of pairing token `i` with seed `j` (0-based).
pub fn align(n: usize, m: usize, psi: f64, mut cost: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64 * psi).collect();
    let mut cur = vec![0.0; m + 1];
    for i in 1..=n {
        cur[0] = i as f64 * psi;
        for j in 1..=m {
            let diag = prev[j - 1] + cost(i - 1, j - 1);
            let skip_seed = cur[j - 1] + psi;
            let skip_token = prev[j] + psi;
            cur[j] = diag.min(skip_seed).min(skip_token);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

pub fn edit_score(tokens: &[TokenId], seeds: &[Seed], keyed: &KeyedScheme, psi: f64) -> Result<f64, DetectError> {
    if tokens.is_empty() || seeds.is_empty() {
        return Err(DetectError::EmptyText);
    }
    if psi.is_nan() || psi < 0.0 {
        return Err(DetectError::InvalidParameter(format!("psi must be >= 0, got {psi}")));
    }
    let rows = seeds.iter().map(|&s| keyed.row(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(align(tokens.len(), seeds.len(), psi, |i, j| -rows[j].eval(tokens[i])))
}
