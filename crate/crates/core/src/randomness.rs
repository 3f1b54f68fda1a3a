//! Keyed pseudo-random function and context-dependent seed derivation.
//!
//! `prf64` is HMAC-SHA256 truncated to its first eight bytes (little-endian).
//! Per-step seeds are derived from the key and, depending on the
//! [`ContextScheme`], the position or the preceding tokens. A seed is then
//! expanded into unit-interval draws and permutations with a counter-based
//! SplitMix64 stream, which gives O(1) random access to any entry of a
//! random vector.

use std::fmt;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::text::TokenId;

type HmacSha256 = Hmac<Sha256>;

pub const KEY_LEN: usize = 16;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const PERMUTATION_STREAM: u64 = 0x5851_F42D_4C95_7F2D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeyError {
    #[error("secret key must be {KEY_LEN} bytes, got {0}")]
    Length(usize),
    #[error("secret key is not valid hex: {0}")]
    Hex(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretKey(pub [u8; KEY_LEN]);

impl SecretKey {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, KeyError> {
        let arr: [u8; KEY_LEN] = bytes.try_into().map_err(|_| KeyError::Length(bytes.len()))?;
        Ok(Self(arr))
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        Self::from_slice(&decode_hex(s).map_err(KeyError::Hex)?)
    }

    /// Expands a 64-bit number into a key. Used for reproducible experiment
    /// keys and for the reference keys of permutation tests; not a substitute
    /// for a properly random secret.
    pub fn from_u64(n: u64) -> Self {
        let a = splitmix_at(n, 0);
        let b = splitmix_at(n, 1);
        let mut bytes = [0u8; KEY_LEN];
        bytes[..8].copy_from_slice(&a.to_le_bytes());
        bytes[8..].copy_from_slice(&b.to_le_bytes());
        Self(bytes)
    }

    pub fn to_hex(&self) -> String {
        encode_hex(&self.0)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // never print key material
        f.write_str("SecretKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// A keyed PRF instance. Keeps the HMAC key schedule so repeated
/// evaluations under one key skip re-keying.
#[derive(Clone)]
pub struct Prf {
    mac: HmacSha256,
}

impl Prf {
    pub fn new(key: &SecretKey) -> Self {
        Self { mac: HmacSha256::new_from_slice(&key.0).expect("HMAC accepts any key length") }
    }

    pub fn eval(&self, message: &[u8]) -> Seed {
        let mut mac = self.mac.clone();
        mac.update(message);
        let out = mac.finalize().into_bytes();
        Seed(u64::from_le_bytes(out[..8].try_into().unwrap()))
    }
}

impl fmt::Debug for Prf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Prf(..)")
    }
}

pub fn prf64(key: &SecretKey, message: &[u8]) -> Seed {
    Prf::new(key).eval(message)
}

/// How the per-step seed depends on its surroundings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContextScheme {
    /// Seed depends only on the position.
    IndexDependent,
    /// Seed hashes the concatenation of the previous `w` tokens.
    WindowHash { w: usize },
    /// Seed is the minimum of per-token hashes over the previous `w` tokens.
    MinHash { w: usize },
    /// One seed for every position.
    ContextFree,
}

impl ContextScheme {
    pub fn window(&self) -> Option<usize> {
        match *self {
            ContextScheme::WindowHash { w } | ContextScheme::MinHash { w } => Some(w),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.window() {
            Some(0) => Err("context window w must be at least 1".into()),
            _ => Ok(()),
        }
    }
}

/// Token at offset `back` (1 = immediately preceding) before position `t`,
/// or `bos` when the offset reaches past the start of the text.
fn token_before(prior: &[TokenId], t: usize, back: usize, bos: TokenId) -> TokenId {
    if back > t {
        bos
    } else {
        prior[t - back]
    }
}

/// Derives the seed for position `t`. `prior` must hold at least the `t`
/// tokens preceding the position; positions before the start are padded
/// with `bos`.
pub fn derive_seed(scheme: ContextScheme, prf: &Prf, prior: &[TokenId], t: usize, bos: TokenId) -> Seed {
    debug_assert!(prior.len() >= t);
    match scheme {
        ContextScheme::IndexDependent => prf.eval(&(t as u64).to_le_bytes()),
        ContextScheme::WindowHash { w } => {
            let mut msg = Vec::with_capacity(4 * w);
            for back in (1..=w).rev() {
                msg.extend_from_slice(&token_before(prior, t, back, bos).to_le_bytes());
            }
            prf.eval(&msg)
        }
        ContextScheme::MinHash { w } => (1..=w)
            .map(|back| prf.eval(&token_before(prior, t, back, bos).to_le_bytes()))
            .min()
            .expect("w >= 1"),
        ContextScheme::ContextFree => prf.eval(&[]),
    }
}

/// Seeds for every position of `tokens`, as generation would have derived
/// them.
pub fn derive_seeds(scheme: ContextScheme, prf: &Prf, tokens: &[TokenId], bos: TokenId) -> Vec<Seed> {
    match scheme {
        ContextScheme::ContextFree => vec![prf.eval(&[]); tokens.len()],
        _ => (0..tokens.len()).map(|t| derive_seed(scheme, prf, tokens, t, bos)).collect(),
    }
}

#[inline]
fn splitmix_at(state: u64, counter: u64) -> u64 {
    let mut z = state.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to the open unit interval. Only the top 52 bits are
/// used so that `x + 0.5` stays exactly representable and the result can
/// never round to 0 or 1.
#[inline]
pub fn bits_to_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
pub fn rand_unit(seed: Seed, counter: u64) -> f64 {
    bits_to_unit(splitmix_at(seed.0, counter))
}

pub fn rand_vector(seed: Seed, d: usize) -> Vec<f64> {
    (0..d as u64).map(|i| rand_unit(seed, i)).collect()
}

/// Uniform integer in `[0, n)` drawn from a counter stream, by Lemire's
/// multiply-and-reject method.
fn bounded(state: u64, counter: &mut u64, n: u64) -> u64 {
    let threshold = n.wrapping_neg() % n;
    loop {
        let x = splitmix_at(state, *counter);
        *counter += 1;
        let m = (x as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Sequential view of a counter stream, for callers that need many draws
/// of different kinds.
#[derive(Debug, Clone)]
pub struct SeedStream {
    state: u64,
    counter: u64,
}

impl SeedStream {
    pub fn new(seed: Seed) -> Self {
        Self { state: seed.0, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let x = splitmix_at(self.state, self.counter);
        self.counter += 1;
        x
    }

    pub fn unit(&mut self) -> f64 {
        bits_to_unit(self.next_u64())
    }

    /// Uniform in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        bounded(self.state, &mut self.counter, n as u64) as usize
    }
}

impl Seed {
    /// Independent child seed for a named purpose.
    pub fn derive(self, domain: u64) -> Seed {
        Seed(splitmix_at(self.0 ^ domain.rotate_left(17), domain))
    }
}

/// Seeded Fisher–Yates shuffle of `[0, d)`. Entry `i` is the token placed at
/// position `i`.
pub fn permutation(seed: Seed, d: usize) -> Vec<TokenId> {
    let mut perm: Vec<TokenId> = (0..d as TokenId).collect();
    let state = seed.0 ^ PERMUTATION_STREAM;
    let mut counter = 0u64;
    for i in (1..d).rev() {
        let j = bounded(state, &mut counter, i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Position of every token within `perm` (the inverse permutation).
pub fn positions(perm: &[TokenId]) -> Vec<u32> {
    let mut pos = vec![0u32; perm.len()];
    for (i, &tok) in perm.iter().enumerate() {
        pos[tok as usize] = i as u32;
    }
    pos
}

pub fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn decode_hex(s: &str) -> Result<Vec<u8>, String> {
    let s = s.trim();
    if !s.len().is_multiple_of(2) {
        return Err(format!("odd length {}", s.len()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|e| format!("{s}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(n: u8) -> SecretKey {
        SecretKey([n; KEY_LEN])
    }

    #[test]
    fn prf_is_deterministic() {
        let k = key(3);
        assert_eq!(prf64(&k, b"abc"), prf64(&k, b"abc"));
        assert_eq!(Prf::new(&k).eval(b"abc"), prf64(&k, b"abc"));
    }

    #[test]
    fn context_free_ignores_position() {
        let prf = Prf::new(&key(1));
        let tokens: Vec<TokenId> = (0..1000).map(|i| i % 7).collect();
        let a = derive_seed(ContextScheme::ContextFree, &prf, &tokens, 0, 99);
        let b = derive_seed(ContextScheme::ContextFree, &prf, &tokens, 999, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn window_one_equals_min_one() {
        let prf = Prf::new(&key(2));
        let tokens = [4, 1, 1, 3, 0, 2];
        for t in 0..=tokens.len() {
            assert_eq!(
                derive_seed(ContextScheme::WindowHash { w: 1 }, &prf, &tokens, t, 9),
                derive_seed(ContextScheme::MinHash { w: 1 }, &prf, &tokens, t, 9),
            );
        }
    }

    #[test]
    fn window_pads_with_bos() {
        let prf = Prf::new(&key(5));
        let bos: TokenId = 42;
        let seed = derive_seed(ContextScheme::WindowHash { w: 3 }, &prf, &[7], 1, bos);
        let mut msg = Vec::new();
        for id in [bos, bos, 7u32] {
            msg.extend_from_slice(&id.to_le_bytes());
        }
        assert_eq!(seed, prf.eval(&msg));
    }

    #[test]
    fn index_seed_encodes_position() {
        let prf = Prf::new(&key(6));
        let seed = derive_seed(ContextScheme::IndexDependent, &prf, &[], 0, 0);
        assert_eq!(seed, prf.eval(&0u64.to_le_bytes()));
    }

    #[test]
    fn unit_bounds() {
        assert!(bits_to_unit(0) > 0.0);
        assert!(bits_to_unit(u64::MAX) < 1.0);
        assert_eq!(rand_vector(Seed(77), 1)[0], rand_unit(Seed(77), 0));
    }

    #[test]
    fn permutation_small_cases() {
        assert_eq!(permutation(Seed(1), 1), vec![0]);
        let mut p = permutation(Seed(1234), 1000);
        p.sort_unstable();
        assert_eq!(p, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn positions_invert() {
        let p = permutation(Seed(9), 50);
        let pos = positions(&p);
        for (i, &tok) in p.iter().enumerate() {
            assert_eq!(pos[tok as usize] as usize, i);
        }
    }

    #[test]
    fn hex_round_trip() {
        let k = key(0xab);
        assert_eq!(SecretKey::from_hex(&k.to_hex()).unwrap(), k);
        assert!(SecretKey::from_hex("abcd").is_err());
        assert!(SecretKey::from_hex("zz").is_err());
    }
}
