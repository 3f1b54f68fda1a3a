use std::path::PathBuf;

use wmlab_core::attacks::AttackKind;
use wmlab_harness::report::CSV_COLUMNS;
use wmlab_harness::{load_dataset, run_experiment, AttackEntry, ExperimentConfig, ExperimentReport, HarnessError, ReportFormat, SchemeEntry, CLEAN};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn small(attacks: Vec<AttackEntry>) -> ExperimentConfig {
    ExperimentConfig {
        corpus_path: data("corpus.txt"),
        prompts_path: data("prompts.txt"),
        schemes: ["tgrl", "go", "ub-delta"].iter().map(|s| SchemeEntry::preset(s)).collect(),
        attacks,
        n_samples: 12,
        n_null: 100,
        n_holdout: 20,
        text_len: 30,
        master_seed: 7,
        ..Default::default()
    }
}

fn attacks() -> Vec<AttackEntry> {
    vec![
        AttackEntry::single("typo", AttackKind::Typo { rate: 0.3 }),
        AttackEntry::single("cp", AttackKind::CopyPaste { n: 1, m_pct: 25.0 }),
    ]
}

#[test]
fn dataset_skips_blank_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "first prompt\n\n   \nsecond one\nthird\n").unwrap();
    assert_eq!(load_dataset(&path).unwrap(), vec!["first prompt", "second one", "third"]);

    std::fs::write(&path, "\n \n").unwrap();
    assert!(matches!(load_dataset(&path), Err(HarnessError::EmptyDataset(_))));
    assert!(matches!(load_dataset(&dir.path().join("missing.txt")), Err(HarnessError::FileNotFound(_))));
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let cfg = small(attacks());
    let one = run_experiment(&cfg, 1).unwrap();
    for workers in [4, 16] {
        let other = run_experiment(&cfg, workers).unwrap();
        assert_eq!(one.to_csv(), other.to_csv(), "workers {workers}");
        assert_eq!(one.to_json(), other.to_json(), "workers {workers}");
    }
}

#[test]
fn adding_an_attack_leaves_other_cells_alone() {
    let base = run_experiment(&small(attacks()[..1].to_vec()), 2).unwrap();
    let more = run_experiment(&small(attacks()), 2).unwrap();
    for scheme in ["tgrl", "go", "ub-delta"] {
        for attack in [CLEAN, "typo"] {
            assert_eq!(base.cell(scheme, attack), more.cell(scheme, attack), "{scheme}/{attack}");
        }
        assert_eq!(base.scheme(scheme).unwrap().threshold, more.scheme(scheme).unwrap().threshold);
    }
    assert!(more.cell("go", "cp").is_some());
}

#[test]
fn no_attacks_gives_clean_only_report() {
    let report = run_experiment(&small(vec![]), 1).unwrap();
    for s in &report.schemes {
        assert_eq!(s.cells.len(), 1);
        assert_eq!(s.cells[0].attack, CLEAN);
        assert_eq!(s.cells[0].n, 12);
        assert!(s.threshold.is_some() && s.holdout_fpr.is_some());
    }
    assert!(!report.has_failures());
}

#[test]
fn report_formats_roundtrip() {
    let report = run_experiment(&small(attacks()), 1).unwrap();
    let csv = report.render(ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 3);
    assert!(rows.iter().all(|r| r.len() == CSV_COLUMNS.len()));

    for format in [ReportFormat::Csv, ReportFormat::Json] {
        assert_eq!(ExperimentReport::parse(&report.render(format), format).unwrap(), report);
    }
}

#[test]
fn config_toml_roundtrip_and_validation() {
    let cfg = small(attacks());
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);

    let bad = ExperimentConfig { n_null: 99, ..cfg.clone() };
    assert!(bad.validate().unwrap_err().is_config());
    let bad = ExperimentConfig { target_fpr: 0.0, ..cfg.clone() };
    assert!(bad.validate().is_err());
    let bad = ExperimentConfig { schemes: vec![SchemeEntry::preset("nope")], ..cfg };
    assert!(run_experiment(&bad, 1).unwrap_err().is_config());
}

#[test]
fn example_config_loads() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    cfg.validate().unwrap();
    assert!(cfg.corpus_path.exists() && cfg.prompts_path.exists());
}
