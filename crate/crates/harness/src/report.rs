//! Experiment reports and their CSV / JSON forms.
//!
//! CSV has one row per (scheme, attack) cell with the fixed column order of
//! [`CSV_COLUMNS`]; per-scheme and per-run fields repeat on every row.
//! JSON nests scheme -> attack -> metrics. Both parse back to an identical
//! report. Missing values are empty CSV fields and JSON `null`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub attack: String,
    /// Samples that contributed.
    pub n: usize,
    pub tpr_at_target: Option<f64>,
    pub auc: Option<f64>,
    pub mean_score: Option<f64>,
    /// Word error rate of the attacked text against the pre-attack text.
    pub wer: Option<f64>,
    pub bleu: Option<f64>,
    /// Mean token count of the texts that were scored.
    pub mean_len: Option<f64>,
    /// Set when the cell failed; carries the failing coordinate.
    pub error: Option<String>,
}

impl CellReport {
    pub fn failed(attack: &str, error: String) -> Self {
        Self {
            attack: attack.into(),
            n: 0,
            tpr_at_target: None,
            auc: None,
            mean_score: None,
            wer: None,
            bleu: None,
            mean_len: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: String,
    pub threshold: Option<f64>,
    pub n_null: usize,
    /// FPR of the threshold on its own calibration set.
    pub null_fpr: Option<f64>,
    pub n_holdout: usize,
    /// FPR on fresh unwatermarked texts.
    pub holdout_fpr: Option<f64>,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub target_fpr: f64,
    pub text_len: usize,
    pub schemes: Vec<SchemeReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(HarnessError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 18] = [
    "scheme",
    "attack",
    "n",
    "tpr_at_target",
    "auc",
    "mean_score",
    "wer",
    "bleu",
    "mean_len",
    "error",
    "threshold",
    "n_null",
    "null_fpr",
    "n_holdout",
    "holdout_fpr",
    "master_seed",
    "target_fpr",
    "text_len",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| HarnessError::Report(format!("bad number `{s}`")))
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, HarnessError> {
    s.parse().map_err(|_| HarnessError::Report(format!("bad number `{s}`")))
}

impl ExperimentReport {
    pub fn cell(&self, scheme: &str, attack: &str) -> Option<&CellReport> {
        self.scheme(scheme)?.cells.iter().find(|c| c.attack == attack)
    }

    pub fn scheme(&self, scheme: &str) -> Option<&SchemeReport> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn has_failures(&self) -> bool {
        self.schemes.iter().flat_map(|s| &s.cells).any(|c| c.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for s in &self.schemes {
            for c in &s.cells {
                w.write_record([
                    s.scheme.clone(),
                    c.attack.clone(),
                    c.n.to_string(),
                    opt(c.tpr_at_target),
                    opt(c.auc),
                    opt(c.mean_score),
                    opt(c.wer),
                    opt(c.bleu),
                    opt(c.mean_len),
                    c.error.clone().unwrap_or_default(),
                    opt(s.threshold),
                    s.n_null.to_string(),
                    opt(s.null_fpr),
                    s.n_holdout.to_string(),
                    opt(s.holdout_fpr),
                    self.master_seed.to_string(),
                    self.target_fpr.to_string(),
                    self.text_len.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn from_csv(src: &str) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_reader(src.as_bytes());
        let header = r.headers().map_err(|e| HarnessError::Report(e.to_string()))?.clone();
        if header.iter().ne(CSV_COLUMNS.iter().copied()) {
            return Err(HarnessError::Report("unexpected CSV header".into()));
        }
        let mut report: Option<ExperimentReport> = None;
        for row in r.records() {
            let row = row.map_err(|e| HarnessError::Report(e.to_string()))?;
            let f = |i: usize| row.get(i).unwrap_or("");
            let rep = report.get_or_insert(ExperimentReport {
                master_seed: parse_num(f(15))?,
                target_fpr: parse_num(f(16))?,
                text_len: parse_num(f(17))?,
                schemes: Vec::new(),
            });
            if rep.schemes.last().is_none_or(|s| s.scheme != f(0)) {
                rep.schemes.push(SchemeReport {
                    scheme: f(0).into(),
                    threshold: parse_opt(f(10))?,
                    n_null: parse_num(f(11))?,
                    null_fpr: parse_opt(f(12))?,
                    n_holdout: parse_num(f(13))?,
                    holdout_fpr: parse_opt(f(14))?,
                    cells: Vec::new(),
                });
            }
            let scheme = rep.schemes.last_mut().expect("pushed above");
            scheme.cells.push(CellReport {
                attack: f(1).into(),
                n: parse_num(f(2))?,
                tpr_at_target: parse_opt(f(3))?,
                auc: parse_opt(f(4))?,
                mean_score: parse_opt(f(5))?,
                wer: parse_opt(f(6))?,
                bleu: parse_opt(f(7))?,
                mean_len: parse_opt(f(8))?,
                error: Some(f(9).to_string()).filter(|e| !e.is_empty()),
            });
        }
        report.ok_or_else(|| HarnessError::Report("CSV has no rows".into()))
    }

    pub fn to_json(&self) -> String {
        let mut schemes = Map::new();
        for s in &self.schemes {
            let mut attacks = Map::new();
            for c in &s.cells {
                attacks.insert(
                    c.attack.clone(),
                    json!({
                        "n": c.n,
                        "tpr_at_target": c.tpr_at_target,
                        "auc": c.auc,
                        "mean_score": c.mean_score,
                        "wer": c.wer,
                        "bleu": c.bleu,
                        "mean_len": c.mean_len,
                        "error": c.error,
                    }),
                );
            }
            schemes.insert(
                s.scheme.clone(),
                json!({
                    "threshold": s.threshold,
                    "n_null": s.n_null,
                    "null_fpr": s.null_fpr,
                    "n_holdout": s.n_holdout,
                    "holdout_fpr": s.holdout_fpr,
                    "attacks": attacks,
                }),
            );
        }
        let doc = json!({
            "master_seed": self.master_seed,
            "target_fpr": self.target_fpr,
            "text_len": self.text_len,
            "schemes": schemes,
        });
        serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
    }

    pub fn from_json(src: &str) -> Result<Self, HarnessError> {
        let doc: Value = serde_json::from_str(src).map_err(|e| HarnessError::Report(e.to_string()))?;
        let bad = |what: &str| HarnessError::Report(format!("JSON report: missing or invalid `{what}`"));
        let obj = |v: &Value, what: &str| v.as_object().cloned().ok_or_else(|| bad(what));
        let uint = |v: &Value, what: &str| v.as_u64().ok_or_else(|| bad(what));
        let float = |v: &Value, what: &str| -> Result<Option<f64>, HarnessError> {
            if v.is_null() {
                Ok(None)
            } else {
                v.as_f64().map(Some).ok_or_else(|| bad(what))
            }
        };
        let mut schemes = Vec::new();
        for (name, s) in obj(&doc["schemes"], "schemes")? {
            let mut cells = Vec::new();
            for (attack, c) in obj(&s["attacks"], "attacks")? {
                cells.push(CellReport {
                    attack,
                    n: uint(&c["n"], "n")? as usize,
                    tpr_at_target: float(&c["tpr_at_target"], "tpr_at_target")?,
                    auc: float(&c["auc"], "auc")?,
                    mean_score: float(&c["mean_score"], "mean_score")?,
                    wer: float(&c["wer"], "wer")?,
                    bleu: float(&c["bleu"], "bleu")?,
                    mean_len: float(&c["mean_len"], "mean_len")?,
                    error: c["error"].as_str().map(String::from),
                });
            }
            schemes.push(SchemeReport {
                scheme: name,
                threshold: float(&s["threshold"], "threshold")?,
                n_null: uint(&s["n_null"], "n_null")? as usize,
                null_fpr: float(&s["null_fpr"], "null_fpr")?,
                n_holdout: uint(&s["n_holdout"], "n_holdout")? as usize,
                holdout_fpr: float(&s["holdout_fpr"], "holdout_fpr")?,
                cells,
            });
        }
        Ok(Self {
            master_seed: uint(&doc["master_seed"], "master_seed")?,
            target_fpr: doc["target_fpr"].as_f64().ok_or_else(|| bad("target_fpr"))?,
            text_len: uint(&doc["text_len"], "text_len")? as usize,
            schemes,
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    pub fn parse(src: &str, format: ReportFormat) -> Result<Self, HarnessError> {
        match format {
            ReportFormat::Csv => Self::from_csv(src),
            ReportFormat::Json => Self::from_json(src),
        }
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, report.render(format)).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}
