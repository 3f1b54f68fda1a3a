//! Experiment configuration, read from TOML.
//!
//! ```toml
//! corpus_path = "../data/corpus.txt"
//! prompts_path = "../data/prompts.txt"
//! n_samples = 200
//! n_null = 1000
//! text_len = 200
//! target_fpr = 0.01
//! master_seed = 42
//!
//! [lm]
//! n = 3
//! alpha = 0.001
//!
//! [[schemes]]
//! name = "tgrl"            # a built-in preset
//!
//! [[schemes]]
//! name = "go-cold"
//! preset = "go"
//! tau = 0.7
//!
//! [[attacks]]
//! name = "typo"
//! chain = [{ kind = "typo", rate = 0.3 }]
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmlab_core::attacks::{AttackKind, AttackSpec};
use wmlab_core::lm::Temperature;
use wmlab_core::scheme::{Registry, SchemeConfig};

use crate::HarnessError;

/// Name of the always-present unattacked cell.
pub const CLEAN: &str = "clean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    /// n-gram order.
    pub n: usize,
    /// Additive smoothing.
    pub alpha: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { n: 3, alpha: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeEntry {
    pub name: String,
    /// Built-in preset; defaults to `name` when `config` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Full configuration, overriding any preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SchemeConfig>,
    /// Sampling temperature override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl SchemeEntry {
    pub fn preset(name: &str) -> Self {
        Self { name: name.into(), preset: None, config: None, tau: None }
    }

    pub fn resolve(&self, registry: &Registry) -> Result<SchemeConfig, HarnessError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(cfg), _) => cfg.clone(),
            (None, preset) => registry
                .preset(preset.as_deref().unwrap_or(&self.name))
                .map_err(|e| HarnessError::Config(format!("scheme `{}`: {e}", self.name)))?,
        };
        if let Some(tau) = self.tau {
            cfg.tau = Temperature::new(tau).map_err(|e| HarnessError::Config(format!("scheme `{}`: {e}", self.name)))?;
        }
        cfg.validate().map_err(|e| HarnessError::Config(format!("scheme `{}`: {e}", self.name)))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEntry {
    pub name: String,
    /// Applied left to right.
    pub chain: Vec<AttackSpec>,
}

impl AttackEntry {
    pub fn single(name: &str, kind: AttackKind) -> Self {
        Self { name: name.into(), chain: vec![AttackSpec::new(kind, 0)] }
    }

    pub fn needs_cover(&self) -> bool {
        self.chain.iter().any(|s| matches!(s.kind, AttackKind::CopyPaste { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Training text, one document per line.
    pub corpus_path: PathBuf,
    /// Prompts, one per line.
    pub prompts_path: PathBuf,
    /// Directory with replacement attack tables; built-in tables otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resources_dir: Option<PathBuf>,
    pub lm: LmConfig,
    pub schemes: Vec<SchemeEntry>,
    pub attacks: Vec<AttackEntry>,
    /// Watermarked texts per cell.
    pub n_samples: usize,
    /// Unwatermarked texts used for calibration.
    pub n_null: usize,
    /// Further unwatermarked texts for measuring the calibrated FPR.
    pub n_holdout: usize,
    /// Tokens per generated text.
    pub text_len: usize,
    pub target_fpr: f64,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_path: PathBuf::from("data/corpus.txt"),
            prompts_path: PathBuf::from("data/prompts.txt"),
            resources_dir: None,
            lm: LmConfig::default(),
            schemes: Vec::new(),
            attacks: Vec::new(),
            n_samples: 200,
            n_null: 1000,
            n_holdout: 0,
            text_len: 200,
            target_fpr: 0.01,
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self, HarnessError> {
        toml::from_str(src).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a TOML file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let src = std::fs::read_to_string(path).map_err(|_| HarnessError::FileNotFound(path.to_path_buf()))?;
        let mut cfg = Self::from_toml(&src)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.corpus_path);
        rebase(&mut cfg.prompts_path);
        if let Some(dir) = cfg.resources_dir.as_mut() {
            rebase(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if self.text_len == 0 {
            return bad("text_len must be at least 1".into());
        }
        if !(self.target_fpr > 0.0 && self.target_fpr < 1.0) {
            return bad(format!("target_fpr must be in (0,1), got {}", self.target_fpr));
        }
        let need = wmlab_core::detect::calibrate::MIN_NULL_SCORES.max((1.0 / self.target_fpr - 1e-9).ceil() as usize);
        if self.n_null < need {
            return bad(format!("n_null = {} is too small for target_fpr {}; need {need}", self.n_null, self.target_fpr));
        }
        if self.lm.n == 0 || self.lm.alpha.is_nan() || self.lm.alpha <= 0.0 {
            return bad(format!("lm needs n >= 1 and alpha > 0, got n = {}, alpha = {}", self.lm.n, self.lm.alpha));
        }
        if self.schemes.is_empty() {
            return bad("no schemes configured".into());
        }
        let registry = Registry::builtin();
        let mut names = HashSet::new();
        for s in &self.schemes {
            if !names.insert(s.name.as_str()) {
                return bad(format!("duplicate scheme name `{}`", s.name));
            }
            s.resolve(&registry)?;
        }
        let mut names = HashSet::from([CLEAN]);
        for a in &self.attacks {
            if !names.insert(a.name.as_str()) {
                return bad(format!("duplicate attack name `{}`", a.name));
            }
            if a.chain.is_empty() {
                return bad(format!("attack `{}` has an empty chain", a.name));
            }
            for spec in &a.chain {
                spec.kind.validate().map_err(|e| HarnessError::Config(format!("attack `{}`: {e}", a.name)))?;
            }
        }
        Ok(())
    }
}
