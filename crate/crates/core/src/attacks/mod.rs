//! Watermark-removal attacks on plain text.
//!
//! Attacks operate on whitespace-separated words; outputs rejoin words with
//! single spaces. Each [`AttackKind`] builds an [`Attack`] trait object, and
//! [`attack_chain`] composes a sequence of them left to right.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod copy_paste;
pub mod lexical;
pub mod linguistic;
pub mod paraphrase;
pub mod resources;
mod words;

pub use copy_paste::{copy_paste, CopyPaste, Segment};
pub use lexical::{misspell, swap, synonymize, typo};
pub use linguistic::{contract, expand, lowercase};
pub use paraphrase::{paraphrase_external, ParaphraseEndpoint};
pub use resources::ResourceTables;

/// Rate used when a rate-based attack is named without one.
pub const DEFAULT_RATE: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid attack: {0}")]
    InvalidSpec(String),
    #[error("cover text has {have} words, need {need}")]
    CoverTooShort { need: usize, have: usize },
    #[error("copy-paste needs a cover text")]
    MissingCover,
    #[error("resource table: {0}")]
    Resource(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("malformed paraphraser response: {0}")]
    MalformedResponse(String),
    #[error("empty attack chain")]
    EmptyChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackKind {
    /// Leaves the text untouched.
    Clean,
    Lowercase,
    Contract,
    Expand,
    Misspell { rate: f64 },
    Typo { rate: f64 },
    Synonymize { rate: f64 },
    Swap { count: usize },
    CopyPaste { n: usize, m_pct: f64 },
    ExternalParaphrase(ParaphraseEndpoint),
}

/// An attack and the seed of its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub kind: AttackKind,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Inputs an attack may draw on besides the text.
#[derive(Debug, Clone, Copy)]
pub struct AttackEnv<'a> {
    pub tables: &'a ResourceTables,
    /// Non-watermarked filler for copy-paste.
    pub cover: Option<&'a str>,
}

pub trait Attack: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError>;
}

fn check_rate(rate: f64) -> Result<(), AttackError> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(AttackError::InvalidSpec(format!("rate must be in (0,1], got {rate}")))
    }
}

impl AttackKind {
    pub fn validate(&self) -> Result<(), AttackError> {
        match self {
            AttackKind::Misspell { rate } | AttackKind::Typo { rate } | AttackKind::Synonymize { rate } => check_rate(*rate),
            AttackKind::Swap { count } if *count == 0 => Err(AttackError::InvalidSpec("swap count must be >= 1".into())),
            AttackKind::CopyPaste { n, m_pct } => copy_paste::validate_copy_paste(*n, *m_pct),
            AttackKind::ExternalParaphrase(e) if e.base_url.is_empty() => {
                Err(AttackError::InvalidSpec("paraphraser endpoint is empty".into()))
            }
            _ => Ok(()),
        }
    }

    /// Short name, e.g. `typo-0.3` or `cp-1-10`.
    pub fn label(&self) -> String {
        match self {
            AttackKind::Clean => "clean".into(),
            AttackKind::Lowercase => "lowercase".into(),
            AttackKind::Contract => "contract".into(),
            AttackKind::Expand => "expand".into(),
            AttackKind::Misspell { rate } => format!("misspell-{rate}"),
            AttackKind::Typo { rate } => format!("typo-{rate}"),
            AttackKind::Synonymize { rate } => format!("synonymize-{rate}"),
            AttackKind::Swap { count } => format!("swap-{count}"),
            AttackKind::CopyPaste { n, m_pct } => format!("cp-{n}-{m_pct}"),
            AttackKind::ExternalParaphrase(e) => format!("paraphrase@{}", e.base_url),
        }
    }
}

impl AttackSpec {
    pub fn new(kind: AttackKind, rng_seed: u64) -> Self {
        Self { kind, rng_seed }
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self { kind: self.kind.clone(), rng_seed }
    }

    pub fn build(&self) -> Result<Box<dyn Attack>, AttackError> {
        self.kind.validate()?;
        let seed = self.rng_seed;
        Ok(match self.kind.clone() {
            AttackKind::Clean => Box::new(Clean),
            AttackKind::Lowercase => Box::new(Lowercase),
            AttackKind::Contract => Box::new(Contract),
            AttackKind::Expand => Box::new(Expand),
            AttackKind::Misspell { rate } => Box::new(Misspell { rate, seed }),
            AttackKind::Typo { rate } => Box::new(Typo { rate, seed }),
            AttackKind::Synonymize { rate } => Box::new(Synonymize { rate, seed }),
            AttackKind::Swap { count } => Box::new(Swap { count, seed }),
            AttackKind::CopyPaste { n, m_pct } => Box::new(CopyPasteAttack { n, m_pct }),
            AttackKind::ExternalParaphrase(endpoint) => Box::new(ExternalParaphrase { endpoint }),
        })
    }

    pub fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        self.build()?.apply(text, env)
    }
}

/// Parses the short forms `clean`, `lowercase`, `contract`, `expand`,
/// `misspell[:rate]`, `typo[:rate]`, `synonymize[:rate]`, `swap[:count]`,
/// `cp-N-M` and `paraphrase:URL`.
impl FromStr for AttackKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AttackError::InvalidSpec(format!("cannot parse attack `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let rate = || arg.map_or(Ok(DEFAULT_RATE), |a| a.parse::<f64>().map_err(|_| bad()));
        let kind = match head.to_ascii_lowercase().as_str() {
            "clean" => AttackKind::Clean,
            "lowercase" => AttackKind::Lowercase,
            "contract" => AttackKind::Contract,
            "expand" => AttackKind::Expand,
            "misspell" => AttackKind::Misspell { rate: rate()? },
            "typo" => AttackKind::Typo { rate: rate()? },
            "synonymize" => AttackKind::Synonymize { rate: rate()? },
            "swap" => AttackKind::Swap { count: arg.map_or(Ok(1), |a| a.parse().map_err(|_| bad()))? },
            "paraphrase" => AttackKind::ExternalParaphrase(ParaphraseEndpoint::new(arg.ok_or_else(bad)?)),
            cp if cp.starts_with("cp-") => {
                let mut parts = cp[3..].splitn(2, '-');
                let n = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                let m_pct = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                AttackKind::CopyPaste { n, m_pct }
            }
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Applies `specs` left to right.
pub fn attack_chain(specs: &[AttackSpec], text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
    if specs.is_empty() {
        return Err(AttackError::EmptyChain);
    }
    let mut cur = text.to_string();
    for spec in specs {
        cur = spec.apply(&cur, env)?;
    }
    Ok(cur)
}

#[derive(Debug)]
struct Clean;

impl Attack for Clean {
    fn name(&self) -> String {
        "clean".into()
    }

    fn apply(&self, text: &str, _: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(text.to_string())
    }
}

#[derive(Debug)]
struct Lowercase;

impl Attack for Lowercase {
    fn name(&self) -> String {
        "lowercase".into()
    }

    fn apply(&self, text: &str, _: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(lowercase(text))
    }
}

#[derive(Debug)]
struct Contract;

impl Attack for Contract {
    fn name(&self) -> String {
        "contract".into()
    }

    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(contract(text, env.tables))
    }
}

#[derive(Debug)]
struct Expand;

impl Attack for Expand {
    fn name(&self) -> String {
        "expand".into()
    }

    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(expand(text, env.tables))
    }
}

#[derive(Debug)]
struct Misspell {
    rate: f64,
    seed: u64,
}

impl Attack for Misspell {
    fn name(&self) -> String {
        format!("misspell-{}", self.rate)
    }

    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(misspell(text, self.rate, self.seed, env.tables))
    }
}

#[derive(Debug)]
struct Typo {
    rate: f64,
    seed: u64,
}

impl Attack for Typo {
    fn name(&self) -> String {
        format!("typo-{}", self.rate)
    }

    fn apply(&self, text: &str, _: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(typo(text, self.rate, self.seed))
    }
}

#[derive(Debug)]
struct Synonymize {
    rate: f64,
    seed: u64,
}

impl Attack for Synonymize {
    fn name(&self) -> String {
        format!("synonymize-{}", self.rate)
    }

    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(synonymize(text, self.rate, self.seed, env.tables))
    }
}

#[derive(Debug)]
struct Swap {
    count: usize,
    seed: u64,
}

impl Attack for Swap {
    fn name(&self) -> String {
        format!("swap-{}", self.count)
    }

    fn apply(&self, text: &str, _: &AttackEnv<'_>) -> Result<String, AttackError> {
        Ok(swap(text, self.count, self.seed))
    }
}

#[derive(Debug)]
struct CopyPasteAttack {
    n: usize,
    m_pct: f64,
}

impl Attack for CopyPasteAttack {
    fn name(&self) -> String {
        format!("cp-{}-{}", self.n, self.m_pct)
    }

    fn apply(&self, text: &str, env: &AttackEnv<'_>) -> Result<String, AttackError> {
        let cover = env.cover.ok_or(AttackError::MissingCover)?;
        Ok(copy_paste(text, cover, self.n, self.m_pct)?.text)
    }
}

#[derive(Debug)]
struct ExternalParaphrase {
    endpoint: ParaphraseEndpoint,
}

impl Attack for ExternalParaphrase {
    fn name(&self) -> String {
        "paraphrase".into()
    }

    fn apply(&self, text: &str, _: &AttackEnv<'_>) -> Result<String, AttackError> {
        paraphrase_external(&self.endpoint, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!("typo".parse::<AttackKind>().unwrap(), AttackKind::Typo { rate: DEFAULT_RATE });
        assert_eq!("swap:3".parse::<AttackKind>().unwrap(), AttackKind::Swap { count: 3 });
        assert_eq!("cp-1-10".parse::<AttackKind>().unwrap(), AttackKind::CopyPaste { n: 1, m_pct: 10.0 });
        assert!("cp-1-100".parse::<AttackKind>().is_err());
        assert!("typo:0".parse::<AttackKind>().is_err());
        assert!("shout".parse::<AttackKind>().is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = AttackSpec::new(AttackKind::Typo { rate: 0.5 }, 7);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"typo","rate":0.5,"rng_seed":7}"#);
        assert_eq!(serde_json::from_str::<AttackSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn chain_basics() {
        let tables = ResourceTables::builtin();
        let env = AttackEnv { tables: &tables, cover: None };
        let lower = AttackSpec::new(AttackKind::Lowercase, 0);
        let text = "The Big DOG ran";
        assert_eq!(attack_chain(std::slice::from_ref(&lower), text, &env).unwrap(), lower.apply(text, &env).unwrap());
        assert_eq!(attack_chain(&[lower.clone(), lower.clone()], text, &env).unwrap(), "the big dog ran");
        assert_eq!(attack_chain(&[], text, &env), Err(AttackError::EmptyChain));
    }

    #[test]
    fn copy_paste_needs_cover() {
        let tables = ResourceTables::builtin();
        let env = AttackEnv { tables: &tables, cover: None };
        let cp = AttackSpec::new(AttackKind::CopyPaste { n: 1, m_pct: 10.0 }, 0);
        assert_eq!(cp.apply("a b c", &env), Err(AttackError::MissingCover));
    }
}
