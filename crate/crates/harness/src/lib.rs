//! Experiment runner for the watermarking laboratory: trains the toy model,
//! calibrates every scheme on unwatermarked texts, runs the scheme x attack
//! grid and emits CSV / JSON reports.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod dataset;
pub mod report;
pub mod runner;

pub use config::{AttackEntry, ExperimentConfig, LmConfig, SchemeEntry, CLEAN};
pub use dataset::load_dataset;
pub use report::{emit_report, CellReport, ExperimentReport, ReportFormat, SchemeReport};
pub use runner::{run_experiment, run_with, Workbench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("no prompts in {}", .0.display())]
    EmptyDataset(PathBuf),
    #[error("report: {0}")]
    Report(String),
    #[error("io: {0}")]
    Io(String),
}

impl HarnessError {
    /// Whether the error stems from the configuration or its inputs.
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_) | Self::FileNotFound(_) | Self::EmptyDataset(_))
    }
}
