//! Scheme configuration and the registry of generation strategies,
//! detectors and named watermarker presets.
//!
//! A [`SchemeConfig`] names its strategy and detector by string; the
//! [`Registry`] resolves those names to trait objects when a
//! [`Watermarker`] is built, so new variants plug in with
//! [`Registry::register_strategy`] / [`Registry::register_detector`].

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::detectors::{EditScoreDetector, EntropyWeightedGreen, LlrDetector, SumDetector};
use crate::detect::{DetectError, Detector, KeyedScheme, Score, TokenStatistic};
use crate::generate::{
    generate_text, DeltaReweight, ExpTransform, GammaReweight, GenerateError, GenerationStrategy, InverseTransform, Shift,
    StepContext,
};
use crate::lm::{NextTokenModel, Temperature};
use crate::randomness::{ContextScheme, Prf, SecretKey, Seed, KEY_LEN};
use crate::text::{TokenId, TokenSeq, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("unknown generation strategy `{0}`")]
    UnknownStrategy(String),
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("unknown scheme preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid scheme parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Registry name of the detector.
    pub kind: String,
    /// Insertion/deletion cost of the edit score.
    pub psi: f64,
    /// Number of reference keys in permutation tests.
    pub n_rand: usize,
    /// Overrides the scheme's green fraction for green-list statistics.
    pub gamma: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { kind: "sum-green".into(), psi: 1.0, n_rand: 50, gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub context: ContextScheme,
    /// Registry name of the generation strategy.
    pub strategy: String,
    pub gamma: f64,
    pub delta: f64,
    pub detector: DetectorConfig,
    pub tau: Temperature,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            context: ContextScheme::MinHash { w: 1 },
            strategy: "shift".into(),
            gamma: 0.25,
            delta: 2.0,
            detector: DetectorConfig::default(),
            tau: Temperature::ONE,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |msg: String| Err(SchemeError::Invalid(msg));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in (0,1), got {}", self.gamma));
        }
        if let Some(g) = self.detector.gamma {
            if !(g > 0.0 && g < 1.0) {
                return bad(format!("detector gamma must be in (0,1), got {g}"));
            }
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if !(self.detector.psi >= 0.0 && self.detector.psi.is_finite()) {
            return bad(format!("psi must be >= 0, got {}", self.detector.psi));
        }
        if self.detector.n_rand == 0 {
            return bad("n_rand must be at least 1".into());
        }
        self.context.validate().map_err(SchemeError::Invalid)
    }

    pub fn with_tau(mut self, tau: Temperature) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_detector(mut self, kind: &str) -> Self {
        self.detector.kind = kind.into();
        self
    }
}

pub type StrategyFactory = fn(&SchemeConfig) -> Result<Box<dyn GenerationStrategy>, SchemeError>;
pub type DetectorFactory = fn(&SchemeConfig) -> Result<Box<dyn Detector>, SchemeError>;

/// Name-keyed constructors for strategies and detectors, plus named
/// scheme presets.
#[derive(Clone)]
pub struct Registry {
    strategies: BTreeMap<String, StrategyFactory>,
    detectors: BTreeMap<String, DetectorFactory>,
    presets: BTreeMap<String, SchemeConfig>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { strategies: BTreeMap::new(), detectors: BTreeMap::new(), presets: BTreeMap::new() }
    }

    /// All built-in strategies, detectors and presets.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_strategy("shift", |c| Ok(Box::new(Shift { gamma: c.gamma, delta: c.delta })));
        r.register_strategy("reweight-delta", |_| Ok(Box::new(DeltaReweight)));
        r.register_strategy("reweight-gamma", |_| Ok(Box::new(GammaReweight)));
        r.register_strategy("transform-exp", |_| Ok(Box::new(ExpTransform)));
        r.register_strategy("transform-its", |_| Ok(Box::new(InverseTransform)));

        r.register_detector("sum-green", |_| Ok(Box::new(SumDetector::green())));
        r.register_detector("sum-exp", |_| Ok(Box::new(SumDetector::exp())));
        r.register_detector("sum-its", |_| Ok(Box::new(SumDetector::its())));
        r.register_detector("edit-score", |c| Ok(Box::new(EditScoreDetector { psi: c.detector.psi })));
        r.register_detector("llr", |_| Ok(Box::new(LlrDetector)));
        r.register_detector("entropy-weighted-green", |_| Ok(Box::new(EntropyWeightedGreen)));

        for (name, cfg) in builtin_presets() {
            r.register_preset(name, cfg);
        }
        r
    }

    pub fn register_strategy(&mut self, name: &str, factory: StrategyFactory) {
        self.strategies.insert(name.to_string(), factory);
    }

    pub fn register_detector(&mut self, name: &str, factory: DetectorFactory) {
        self.detectors.insert(name.to_string(), factory);
    }

    pub fn register_preset(&mut self, name: &str, cfg: SchemeConfig) {
        self.presets.insert(name.to_string(), cfg);
    }

    pub fn strategy_names(&self) -> Vec<String> {
        self.strategies.keys().cloned().collect()
    }

    pub fn detector_names(&self) -> Vec<String> {
        self.detectors.keys().cloned().collect()
    }

    pub fn preset_names(&self) -> Vec<String> {
        self.presets.keys().cloned().collect()
    }

    pub fn preset(&self, name: &str) -> Result<SchemeConfig, SchemeError> {
        self.presets.get(name).cloned().ok_or_else(|| SchemeError::UnknownPreset(name.to_string()))
    }

    pub fn build(&self, name: &str, cfg: &SchemeConfig, key: SecretKey, vocab: &Vocabulary) -> Result<Watermarker, SchemeError> {
        self.build_sized(name, cfg, key, vocab.len(), vocab.bos_id())
    }

    pub fn build_sized(
        &self,
        name: &str,
        cfg: &SchemeConfig,
        key: SecretKey,
        vocab_size: usize,
        bos: TokenId,
    ) -> Result<Watermarker, SchemeError> {
        cfg.validate()?;
        let strategy = self.strategies.get(&cfg.strategy).ok_or_else(|| SchemeError::UnknownStrategy(cfg.strategy.clone()))?(cfg)?;
        let detector =
            self.detectors.get(&cfg.detector.kind).ok_or_else(|| SchemeError::UnknownDetector(cfg.detector.kind.clone()))?(cfg)?;
        if strategy.name() == "shift" && crate::generate::shift::green_list_size(cfg.gamma, vocab_size) == 0 {
            return Err(SchemeError::Invalid(format!("gamma {} leaves an empty green list for d = {vocab_size}", cfg.gamma)));
        }
        Ok(Watermarker::assemble(name, cfg.clone(), key, vocab_size, bos, strategy, detector))
    }

    pub fn build_preset(&self, name: &str, key: SecretKey, vocab: &Vocabulary) -> Result<Watermarker, SchemeError> {
        self.build(name, &self.preset(name)?, key, vocab)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("strategies", &self.strategies.keys().collect::<Vec<_>>())
            .field("detectors", &self.detectors.keys().collect::<Vec<_>>())
            .field("presets", &self.presets.keys().collect::<Vec<_>>())
            .finish()
    }
}

fn preset(context: ContextScheme, strategy: &str, gamma: f64, delta: f64, detector: DetectorConfig) -> SchemeConfig {
    SchemeConfig { context, strategy: strategy.into(), gamma, delta, detector, tau: Temperature::ONE }
}

fn detector(kind: &str, psi: f64, n_rand: usize) -> DetectorConfig {
    DetectorConfig { kind: kind.into(), psi, n_rand, gamma: None }
}

/// Named watermarkers. Parameters follow the published defaults where they
/// exist (green fraction and shift of the shift schemes, window of 3 for the
/// exponential scheme, 50 reference keys for the index-dependent ones).
pub fn builtin_presets() -> Vec<(&'static str, SchemeConfig)> {
    use ContextScheme::*;
    vec![
        ("tgrl", preset(MinHash { w: 1 }, "shift", 0.25, 2.0, detector("sum-green", 1.0, 50))),
        ("ug", preset(ContextFree, "shift", 0.5, 2.0, detector("sum-green", 1.0, 50))),
        ("go", preset(WindowHash { w: 3 }, "transform-exp", 0.5, 0.0, detector("sum-exp", 1.0, 50))),
        ("rdf", preset(IndexDependent, "transform-exp", 0.5, 0.0, detector("edit-score", 1.0, 50))),
        ("rdf-its", preset(IndexDependent, "transform-its", 0.5, 0.0, detector("edit-score", 0.02, 50))),
        ("ub-delta", preset(WindowHash { w: 3 }, "reweight-delta", 0.5, 0.0, detector("llr", 1.0, 50))),
        ("ub-gamma", preset(WindowHash { w: 3 }, "reweight-gamma", 0.5, 0.0, detector("llr", 1.0, 50))),
        ("ewd", preset(MinHash { w: 1 }, "shift", 0.25, 2.0, detector("entropy-weighted-green", 1.0, 50))),
    ]
}

/// A ready-to-use watermarker: strategy, detector and key material.
#[derive(Debug)]
pub struct Watermarker {
    name: String,
    config: SchemeConfig,
    key: SecretKey,
    strategy: Box<dyn GenerationStrategy>,
    detector: Box<dyn Detector>,
    keyed: KeyedScheme,
    bos: TokenId,
    references: OnceLock<Vec<KeyedScheme>>,
}

impl Watermarker {
    fn assemble(
        name: &str,
        config: SchemeConfig,
        key: SecretKey,
        vocab_size: usize,
        bos: TokenId,
        strategy: Box<dyn GenerationStrategy>,
        detector: Box<dyn Detector>,
    ) -> Self {
        let keyed = keyed_view(&config, strategy.as_ref(), &key, vocab_size, bos);
        Self { name: name.to_string(), config, key, strategy, detector, keyed, bos, references: OnceLock::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn strategy(&self) -> &dyn GenerationStrategy {
        self.strategy.as_ref()
    }

    pub fn detector(&self) -> &dyn Detector {
        self.detector.as_ref()
    }

    pub fn keyed(&self) -> &KeyedScheme {
        &self.keyed
    }

    pub fn vocab_size(&self) -> usize {
        self.keyed.vocab_size()
    }

    pub fn requires_model(&self) -> bool {
        self.detector.requires_model()
    }

    /// Keyed views under `n_rand` reference keys derived from the secret key.
    /// Unrelated to the secret key as far as the text is concerned, so the
    /// true key is exchangeable with them on unwatermarked text.
    pub fn references(&self) -> &[KeyedScheme] {
        self.references.get_or_init(|| {
            let prf = Prf::new(&self.key);
            (0..self.config.detector.n_rand as u64)
                .map(|i| {
                    let mut bytes = [0u8; KEY_LEN];
                    for (half, chunk) in bytes.chunks_mut(8).enumerate() {
                        let mut msg = b"wmlab/reference".to_vec();
                        msg.extend_from_slice(&(2 * i + half as u64).to_le_bytes());
                        chunk.copy_from_slice(&prf.eval(&msg).0.to_le_bytes());
                    }
                    keyed_view(&self.config, self.strategy.as_ref(), &SecretKey(bytes), self.vocab_size(), self.bos)
                })
                .collect()
        })
    }

    /// Seed of the ordinary sampling stream used by strategies that sample
    /// from a perturbed distribution; fixed per (key, prompt).
    pub fn sampling_seed(&self, prompt: &[TokenId]) -> Seed {
        let mut msg = b"wmlab/sample".to_vec();
        for id in prompt {
            msg.extend_from_slice(&id.to_le_bytes());
        }
        self.keyed.prf().eval(&msg)
    }

    pub fn step_context<'a>(&self, keyed: &'a KeyedScheme, seed: Seed, position: usize, sampling_seed: Seed) -> StepContext<'a> {
        StepContext { seed, position, key_permutation: keyed.key_permutation(), sampling_seed }
    }

    pub fn generate(&self, model: &dyn NextTokenModel, prompt: &[TokenId], max_len: usize) -> Result<TokenSeq, GenerateError> {
        generate_text(model, prompt, self, max_len)
    }

    pub fn score(&self, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<Score, DetectError> {
        if self.detector.requires_model() && model.is_none() {
            return Err(DetectError::ModelRequired(self.detector.name()));
        }
        self.detector.score(self, tokens, model)
    }

    /// Permutation test of the configured detector's statistic against the
    /// reference keys.
    pub fn permutation_test(&self, tokens: &[TokenId], model: Option<&dyn NextTokenModel>) -> Result<PermutationTest, DetectError> {
        if tokens.is_empty() {
            return Err(DetectError::EmptyText);
        }
        let observed = self.detector.statistic(self, &self.keyed, tokens, model)?;
        let references = self
            .references()
            .iter()
            .map(|k| self.detector.statistic(self, k, tokens, model))
            .collect::<Result<Vec<_>, _>>()?;
        let p_value =
            crate::detect::permutation_test_pvalue(observed, &references, crate::detect::Polarity::HigherIsWatermarked);
        Ok(PermutationTest { observed, references, p_value })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTest {
    pub observed: f64,
    pub references: Vec<f64>,
    pub p_value: f64,
}

fn keyed_view(cfg: &SchemeConfig, strategy: &dyn GenerationStrategy, key: &SecretKey, d: usize, bos: TokenId) -> KeyedScheme {
    let statistic = match (strategy.statistic(), cfg.detector.gamma) {
        (Some(TokenStatistic::Green { .. }), Some(gamma)) => Some(TokenStatistic::Green { gamma }),
        (s, _) => s,
    };
    KeyedScheme::new(key, cfg.context, bos, d, statistic, strategy.needs_key_permutation())
}
