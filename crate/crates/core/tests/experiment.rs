use std::path::Path;

use slidingblocks::experiment::{emit_report, render_report, run_experiment, ExperimentConfig, ReportFormat};
use slidingblocks::{Functional, ProcessKind};

fn golden_config() -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/smoke.cfg");
    ExperimentConfig::from_path(&path).unwrap()
}

#[test]
fn report_matches_golden_file() {
    let report = run_experiment(&golden_config()).unwrap();
    let json = render_report(&report, ReportFormat::Json).unwrap();
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/smoke_report.json")).unwrap();
    assert_eq!(json, golden);
}

#[test]
fn report_bytes_do_not_depend_on_workers() {
    let mut config = golden_config();
    let mut outputs = Vec::new();
    for workers in [1, 3, 8] {
        config.workers = Some(workers);
        let report = run_experiment(&config).unwrap();
        outputs.push((
            render_report(&report, ReportFormat::Json).unwrap(),
            render_report(&report, ReportFormat::Csv).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn json_numbers_round_trip_at_twelve_digits() {
    let report = run_experiment(&golden_config()).unwrap();
    let json = render_report(&report, ReportFormat::Json).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let summaries = value["functionals"].as_array().unwrap();
    assert_eq!(summaries.len(), report.functionals.len());
    for (parsed, summary) in summaries.iter().zip(&report.functionals) {
        for (p, m) in parsed["modes"].as_array().unwrap().iter().zip(&summary.modes) {
            let v = p["variance"].as_f64().unwrap();
            assert!(v >= 0.0);
            assert!((v - m.variance).abs() <= 5e-12 * m.variance.abs());
            // printing the parsed value again gives the same digits
            assert_eq!(format!("{:.11e}", v), format!("{:.11e}", m.variance));
        }
    }
    // every number in the document already carries at most 12 significant digits
    let mut numbers = Vec::new();
    collect_numbers(&value, &mut numbers);
    assert!(numbers.len() > 50);
    for x in numbers {
        let printed: f64 = format!("{x:.11e}").parse().unwrap();
        assert_eq!(printed, x);
    }
}

fn collect_numbers(v: &serde_json::Value, out: &mut Vec<f64>) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => out.push(n.as_f64().unwrap()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| collect_numbers(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| collect_numbers(x, out)),
        _ => {}
    }
}

#[test]
fn csv_has_a_row_per_functional_and_mode() {
    let report = run_experiment(&golden_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    emit_report(&report, ReportFormat::from_path(&path), &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4 * 2);
    assert_eq!(&rows[0][0], "exc");
    assert_eq!(&rows[0][1], "sliding");
    assert_eq!(&rows[1][1], "disjoint");
}

#[test]
fn unwritable_path_is_reported() {
    let report = run_experiment(&golden_config()).unwrap();
    let err = emit_report(&report, ReportFormat::Json, Path::new("/nonexistent-dir/report.json")).unwrap_err();
    assert!(matches!(err, slidingblocks::Error::Write { .. }));
}

#[test]
fn two_replication_smoke_run() {
    let config = ExperimentConfig::new(
        ProcessKind::IidPareto { alpha: 1.0 },
        2000,
        10,
        40,
        vec![Functional::ExtremalIndicator, Functional::ClusterSize { m: 1 }],
        2,
        99,
    );
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.replications, 2);
    for f in &report.functionals {
        assert_eq!(f.oracle_variance, 0.0);
        for m in &f.modes {
            assert!(m.variance >= 0.0 && m.variance.is_finite());
        }
        if f.modes.iter().all(|m| m.variance > 0.0) {
            assert!(f.variance_ratio.is_finite() && f.variance_ratio > 0.0);
        }
    }
}
