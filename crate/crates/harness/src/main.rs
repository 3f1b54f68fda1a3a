use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wmlab_core::attacks::{attack_chain, AttackEnv, AttackKind, AttackSpec, ResourceTables};
use wmlab_core::detect::{calibrate_threshold, detect, Polarity};
use wmlab_core::generate::generate_unwatermarked;
use wmlab_core::lm::NextTokenModel;
use wmlab_core::randomness::SecretKey;
use wmlab_core::scheme::{Registry, Watermarker};
use wmlab_harness::runner::{self, sample_seed, scheme_key};
use wmlab_harness::{run_experiment, ExperimentConfig, HarnessError, ReportFormat, Workbench};

const EXIT_CONFIG: u8 = 2;
const EXIT_CELL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "wmlab", version, about = "Text watermarking laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a watermarked text with one configured scheme.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: String,
        /// Prompt text; defaults to the first prompt of the dataset.
        #[arg(long)]
        prompt: Option<String>,
        /// Tokens to generate; defaults to the config's text_len.
        #[arg(long)]
        len: Option<usize>,
        /// Secret key as 32 hex digits; derived from the seed otherwise.
        #[arg(long)]
        key: Option<String>,
    },
    /// Score a text and compare it with a freshly calibrated threshold.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: String,
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        /// File holding the text; `-` reads stdin.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        key: Option<String>,
    },
    /// Apply an attack chain, e.g. `--attack swap:2 --attack typo:0.3`.
    Attack {
        #[command(flatten)]
        common: Common,
        #[arg(long = "attack", required = true)]
        attacks: Vec<String>,
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Cover text for copy-paste.
        #[arg(long)]
        cover: Option<String>,
    },
    /// Run the full scheme x attack grid and write the report.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<HarnessError>() {
                Some(e) if e.is_config() => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let path = common.config.as_ref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(common: &Common, body: &str) -> anyhow::Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn read_text(text: Option<String>, input: Option<&Path>) -> anyhow::Result<String> {
    match (text, input) {
        (Some(t), _) => Ok(t),
        (None, Some(p)) if p == Path::new("-") => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|_| HarnessError::FileNotFound(p.to_path_buf()).into()),
        (None, None) => Err(HarnessError::Config("pass --text or --input".into()).into()),
    }
}

fn build_scheme(cfg: &ExperimentConfig, bench: &Workbench, scheme: &str, key: Option<&str>) -> anyhow::Result<(usize, Watermarker)> {
    let (index, entry) = cfg
        .schemes
        .iter()
        .enumerate()
        .find(|(_, s)| s.name == scheme)
        .ok_or_else(|| HarnessError::Config(format!("scheme `{scheme}` is not in the config")))?;
    let key = match key {
        Some(hex) => SecretKey::from_hex(hex).map_err(|e| HarnessError::Config(format!("--key: {e}")))?,
        None => scheme_key(cfg.master_seed, index),
    };
    let registry = Registry::builtin();
    let wm = registry
        .build(&entry.name, &entry.resolve(&registry)?, key, &bench.vocab)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok((index, wm))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Bench { common } => {
            let cfg = load_config(&common)?;
            let workers = common.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let report = run_experiment(&cfg, workers)?;
            let format: ReportFormat = common.format.parse()?;
            write_output(&common, &report.render(format))?;
            if report.has_failures() {
                for cell in report.schemes.iter().flat_map(|s| &s.cells) {
                    if let Some(e) = &cell.error {
                        eprintln!("cell failed: {e}");
                    }
                }
                return Ok(ExitCode::from(EXIT_CELL_FAILURE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate { common, scheme, prompt, len, key } => {
            let cfg = load_config(&common)?;
            let bench = Workbench::prepare(&cfg)?;
            let (_, wm) = build_scheme(&cfg, &bench, &scheme, key.as_deref())?;
            let prompt_tokens = match &prompt {
                Some(p) => bench.vocab.tokenize(p),
                None => bench.prompts[0].clone(),
            };
            let tokens = wm.generate(&bench.model, &prompt_tokens, len.unwrap_or(cfg.text_len))?;
            let text = bench.vocab.detokenize(&tokens)?;
            let body = match common.format.as_str() {
                "json" => {
                    let doc = json!({ "scheme": scheme, "prompt": bench.vocab.detokenize(&prompt_tokens)?, "text": text });
                    serde_json::to_string_pretty(&doc)? + "\n"
                }
                _ => text + "\n",
            };
            write_output(&common, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Detect { common, scheme, text, input, key } => {
            let cfg = load_config(&common)?;
            let text = read_text(text, input.as_deref())?;
            let bench = Workbench::prepare(&cfg)?;
            let (index, wm) = build_scheme(&cfg, &bench, &scheme, key.as_deref())?;
            let model: &dyn NextTokenModel = &bench.model;
            let detect_model = wm.requires_model().then_some(model);
            let nulls = (0..cfg.n_null)
                .map(|i| {
                    let seed = sample_seed(cfg.master_seed, index, i, runner::NULL).0;
                    let t = generate_unwatermarked(model, bench.prompt(i), wm.config().tau, cfg.text_len, seed);
                    wm.score(&t, detect_model).map(|s| s.value)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let threshold = calibrate_threshold(&nulls, cfg.target_fpr, Polarity::HigherIsWatermarked)?;
            let tokens = bench.vocab.tokenize(&text);
            let result = detect(&tokens, &wm, threshold, detect_model)?;
            let body = match common.format.as_str() {
                "json" => serde_json::to_string_pretty(&json!({ "scheme": scheme, "n_tokens": tokens.len(), "result": result }))? + "\n",
                _ => format!(
                    "scheme,n_tokens,score,threshold,is_watermarked,p_value\n{scheme},{},{},{},{},{}\n",
                    tokens.len(),
                    result.score,
                    result.threshold,
                    result.is_watermarked,
                    result.p_value.map(|p| p.to_string()).unwrap_or_default()
                ),
            };
            write_output(&common, &body)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack { common, attacks, text, input, cover } => {
            let text = read_text(text, input.as_deref())?;
            let tables = match &common.config {
                Some(_) => match load_config(&common)?.resources_dir {
                    Some(dir) => ResourceTables::load_dir(&dir)?,
                    None => ResourceTables::builtin(),
                },
                None => ResourceTables::builtin(),
            };
            let seed = common.seed.unwrap_or(0);
            let chain = attacks
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    a.parse::<AttackKind>()
                        .map(|kind| AttackSpec::new(kind, seed.wrapping_add(k as u64)))
                        .map_err(|e| HarnessError::Config(e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let env = AttackEnv { tables: &tables, cover: cover.as_deref() };
            let out = attack_chain(&chain, text.trim_end(), &env).map_err(|e| anyhow!(e))?;
            write_output(&common, &(out + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
