use rayon::prelude::*;
use wmlab_core::attacks::{attack_chain, AttackEnv, AttackKind, AttackSpec, ResourceTables};
use wmlab_core::detect::{calibrate_threshold, Polarity};
use wmlab_core::generate::generate_unwatermarked;
use wmlab_core::lm::{NextTokenModel, NgramModel};
use wmlab_core::metrics::{bleu, roc_auc, wer, ScorePair};
use wmlab_core::randomness::{SecretKey, Seed};
use wmlab_core::scheme::{Registry, Watermarker};
use wmlab_core::text::{TokenId, TokenSeq, Vocabulary};

use crate::config::{AttackEntry, ExperimentConfig, CLEAN};
use crate::dataset::load_dataset;
use crate::report::{CellReport, ExperimentReport, SchemeReport};
use crate::HarnessError;

// seed domains
const KEY: u64 = 0x6b6579;
pub const NULL: u64 = 0x6e756c6c;
const HOLDOUT: u64 = 0x686f6c64;
const COVER: u64 = 0x636f766572;
const ATTACK: u64 = 0x61747461636b;

/// Seed for one sample of one scheme; depends on nothing else, so adding
/// schemes or attacks leaves existing samples untouched.
pub fn sample_seed(master_seed: u64, scheme_index: usize, sample_index: usize, domain: u64) -> Seed {
    Seed(master_seed).derive(domain).derive(scheme_index as u64).derive(sample_index as u64)
}

pub fn scheme_key(master_seed: u64, scheme_index: usize) -> SecretKey {
    SecretKey::from_u64(Seed(master_seed).derive(KEY).derive(scheme_index as u64).0)
}

/// Trained model, vocabulary and tokenized prompts.
pub struct Workbench {
    pub vocab: Vocabulary,
    pub model: NgramModel,
    pub prompts: Vec<TokenSeq>,
    pub tables: ResourceTables,
}

impl Workbench {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let corpus = std::fs::read_to_string(&cfg.corpus_path).map_err(|_| HarnessError::FileNotFound(cfg.corpus_path.clone()))?;
        let vocab = Vocabulary::build(&corpus).map_err(|e| HarnessError::Config(format!("corpus: {e}")))?;
        let docs: Vec<TokenSeq> = corpus.lines().map(|l| vocab.tokenize(l)).collect();
        let model = NgramModel::train(vocab.clone(), &docs, cfg.lm.n, cfg.lm.alpha)
            .map_err(|e| HarnessError::Config(format!("language model: {e}")))?;
        let prompts = load_dataset(&cfg.prompts_path)?.iter().map(|p| vocab.tokenize(p)).collect();
        let tables = match &cfg.resources_dir {
            Some(dir) => ResourceTables::load_dir(dir).map_err(|e| HarnessError::Config(e.to_string()))?,
            None => ResourceTables::builtin(),
        };
        Ok(Self { vocab, model, prompts, tables })
    }

    pub fn prompt(&self, i: usize) -> &[TokenId] {
        &self.prompts[i % self.prompts.len()]
    }
}

/// Runs the scheme x attack grid on `workers` threads. Reports are identical
/// for any worker count.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let bench = Workbench::prepare(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Io(format!("thread pool: {e}")))?;
    pool.install(|| run_with(cfg, &bench))
}

pub fn run_with(cfg: &ExperimentConfig, bench: &Workbench) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let registry = Registry::builtin();
    let mut attacks = vec![AttackEntry::single(CLEAN, AttackKind::Clean)];
    attacks.extend(cfg.attacks.iter().cloned());
    let schemes = cfg
        .schemes
        .iter()
        .enumerate()
        .map(|(si, entry)| {
            let scheme_cfg = entry.resolve(&registry)?;
            let wm = registry
                .build(&entry.name, &scheme_cfg, scheme_key(cfg.master_seed, si), &bench.vocab)
                .map_err(|e| HarnessError::Config(format!("scheme `{}`: {e}", entry.name)))?;
            Ok(run_scheme(cfg, bench, si, &wm, &attacks))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(ExperimentReport { master_seed: cfg.master_seed, target_fpr: cfg.target_fpr, text_len: cfg.text_len, schemes })
}

fn run_scheme(cfg: &ExperimentConfig, bench: &Workbench, si: usize, wm: &Watermarker, attacks: &[AttackEntry]) -> SchemeReport {
    let name = wm.name().to_string();
    let model: &dyn NextTokenModel = &bench.model;
    let detect_model = wm.requires_model().then_some(model);
    let tau = wm.config().tau;
    let fail_all = |error: String, threshold: Option<f64>| SchemeReport {
        scheme: name.clone(),
        threshold,
        n_null: cfg.n_null,
        null_fpr: None,
        n_holdout: cfg.n_holdout,
        holdout_fpr: None,
        cells: attacks.iter().map(|a| CellReport::failed(&a.name, error.clone())).collect(),
    };

    let unwatermarked = |domain: u64, i: usize| {
        generate_unwatermarked(model, bench.prompt(i), tau, cfg.text_len, sample_seed(cfg.master_seed, si, i, domain).0)
    };
    let null_scores = |domain: u64, n: usize| -> Result<Vec<f64>, String> {
        (0..n)
            .into_par_iter()
            .map(|i| wm.score(&unwatermarked(domain, i), detect_model).map(|s| s.value).map_err(|e| format!("({name}, null, {i}): {e}")))
            .collect()
    };

    let nulls = match null_scores(NULL, cfg.n_null) {
        Ok(n) => n,
        Err(e) => return fail_all(e, None),
    };
    let threshold = match calibrate_threshold(&nulls, cfg.target_fpr, Polarity::HigherIsWatermarked) {
        Ok(t) => t,
        Err(e) => return fail_all(format!("({name}, calibration): {e}"), None),
    };
    let fpr = |scores: &[f64]| scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len() as f64;
    let holdout_fpr = if cfg.n_holdout > 0 {
        match null_scores(HOLDOUT, cfg.n_holdout) {
            Ok(h) => Some(fpr(&h)),
            Err(e) => return fail_all(e, Some(threshold)),
        }
    } else {
        None
    };

    let positives: Result<Vec<TokenSeq>, String> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| wm.generate(model, bench.prompt(i), cfg.text_len).map_err(|e| format!("({name}, generate, {i}): {e}")))
        .collect();
    let positives = match positives {
        Ok(p) => p,
        Err(e) => return fail_all(e, Some(threshold)),
    };

    let cells = attacks
        .iter()
        .enumerate()
        .map(|(ai, attack)| run_cell(cfg, bench, si, wm, detect_model, attack, ai, &positives, &nulls, threshold, &unwatermarked))
        .collect();

    SchemeReport {
        scheme: name.clone(),
        threshold: Some(threshold),
        n_null: cfg.n_null,
        null_fpr: Some(fpr(&nulls)),
        n_holdout: cfg.n_holdout,
        holdout_fpr,
        cells,
    }
}

struct Sample {
    score: f64,
    wer: f64,
    bleu: f64,
    len: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    bench: &Workbench,
    si: usize,
    wm: &Watermarker,
    detect_model: Option<&dyn NextTokenModel>,
    attack: &AttackEntry,
    ai: usize,
    positives: &[TokenSeq],
    nulls: &[f64],
    threshold: f64,
    unwatermarked: &(dyn Fn(u64, usize) -> TokenSeq + Sync),
) -> CellReport {
    let coord = |i: usize| format!("({}, {}, {i})", wm.name(), attack.name);
    let samples: Result<Vec<Sample>, String> = positives
        .par_iter()
        .enumerate()
        .map(|(i, tokens)| {
            let original = bench.vocab.detokenize(tokens).map_err(|e| format!("{}: {e}", coord(i)))?;
            let cover = attack.needs_cover().then(|| unwatermarked(COVER, i));
            let cover_text = cover.as_ref().map(|c| bench.vocab.detokenize(c)).transpose().map_err(|e| format!("{}: {e}", coord(i)))?;
            let env = AttackEnv { tables: &bench.tables, cover: cover_text.as_deref() };
            let attack_seed = sample_seed(cfg.master_seed, si, i, ATTACK).derive(ai as u64);
            let chain: Vec<AttackSpec> =
                attack.chain.iter().enumerate().map(|(k, s)| s.with_seed(s.rng_seed ^ attack_seed.derive(k as u64).0)).collect();
            let attacked = attack_chain(&chain, &original, &env).map_err(|e| format!("{}: {e}", coord(i)))?;
            let attacked_tokens = bench.vocab.tokenize(&attacked);
            let score = wm.score(&attacked_tokens, detect_model).map_err(|e| format!("{}: {e}", coord(i)))?.value;
            let before: Vec<&str> = original.split_whitespace().collect();
            let after: Vec<&str> = attacked.split_whitespace().collect();
            let wer = wer(&before, &after).map_err(|e| format!("{}: {e}", coord(i)))?;
            let bleu = bleu(&before, &after, 4).unwrap_or(0.0);
            Ok(Sample { score, wer, bleu, len: attacked_tokens.len() })
        })
        .collect();
    let samples = match samples {
        Ok(s) => s,
        Err(e) => return CellReport::failed(&attack.name, e),
    };
    let n = samples.len() as f64;
    let scores: Vec<f64> = samples.iter().map(|s| s.score).collect();
    let auc = roc_auc(&ScorePair::new(scores.clone(), nulls.to_vec())).ok().map(|c| c.auc);
    CellReport {
        attack: attack.name.clone(),
        n: samples.len(),
        tpr_at_target: Some(scores.iter().filter(|&&s| s >= threshold).count() as f64 / n),
        auc,
        mean_score: Some(scores.iter().sum::<f64>() / n),
        wer: Some(samples.iter().map(|s| s.wer).sum::<f64>() / n),
        bleu: Some(samples.iter().map(|s| s.bleu).sum::<f64>() / n),
        mean_len: Some(samples.iter().map(|s| s.len as f64).sum::<f64>() / n),
        error: None,
    }
}
