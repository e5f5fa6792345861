use std::fs;
use std::path::Path;

use clustersize::cli::run_cli;
use clustersize::output::{csv_string, svg_string, write_csv, CSV_HEADER};
use clustersize::{run, ExperimentConfig, Metric};

fn small_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        "model = armax(0.5)\nn = 300\nreps = 6\nblock_grid = 6,10,20\nm_max = 3\nmaster_seed = 2024\n",
    )
    .unwrap()
}

#[test]
fn output_independent_of_workers() {
    let cfg = small_config();
    let one = csv_string(&run(&cfg, 1).unwrap());
    let four = csv_string(&run(&cfg, 4).unwrap());
    assert_eq!(one, four);
}

#[test]
fn golden_csv_is_stable() {
    let cfg = ExperimentConfig::parse(
        "model = sqarch(0.5)\nn = 200\nreps = 2\nblock_grid = 6,10\nm_max = 2\nmaster_seed = 11\n",
    )
    .unwrap();
    let text = csv_string(&run(&cfg, 2).unwrap());
    assert_eq!(text, csv_string(&run(&cfg, 1).unwrap()));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tiny_summary.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, fs::read_to_string(&golden).unwrap());
    assert!(text.starts_with(CSV_HEADER));
    assert_eq!(text.lines().count(), 1 + 7 * 2 * 2);
}

#[test]
fn svg_is_well_formed() {
    let table = run(&small_config(), 1).unwrap();
    for metric in [Metric::Mse, Metric::Bias, Metric::Variance] {
        let svg = svg_string(&table, metric);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
        assert_eq!(polylines, table.estimators.len() * table.m_max);
        assert!(svg.contains(&format!("{} x 1e3, m = 3", metric.as_str())));
    }
}

#[test]
fn empty_estimators_fail_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.txt");
    fs::write(&cfg_path, "model = armax(0.5)\nestimators =\n").unwrap();
    let out_dir = dir.path().join("out");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        ["clustersize", "experiment", "--config", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 1);
    assert!(!out_dir.exists());

    let mut table = run(&small_config(), 1).unwrap();
    table.rows.clear();
    assert!(write_csv(&table, &dir.path().join("x.csv")).is_err());
}

#[test]
fn experiment_command_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.txt");
    fs::write(&cfg_path, small_config().to_text()).unwrap();
    let out_dir = dir.path().join("out");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        ["clustersize", "experiment", "--config", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--workers", "2"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    for f in ["summary.csv", "mse.svg", "bias.svg", "variance.svg"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let stdout = String::from_utf8(out).unwrap();
    assert!(stdout.starts_with("estimator,m,b,mse_1e3,n_missing"));
}

#[test]
fn sliding_minima_beat_disjoint() {
    for model in ["armax(0.5)", "sqarch(0.5)", "ar(4)"] {
        let cfg = ExperimentConfig::parse(&format!(
            "model = {model}\nreps = 100\nmaster_seed = 1\nestimators = db-z,sb-z\n"
        ))
        .unwrap();
        let table = run(&cfg, 0).unwrap();
        for m in 1..=5 {
            let db = table.min_over_b(cfg.estimators[0], m).unwrap().mse;
            let sb = table.min_over_b(cfg.estimators[1], m).unwrap().mse;
            assert!(sb <= 1.1 * db, "{model} m={m}: sb {sb} db {db}");
        }
    }
}
