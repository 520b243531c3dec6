use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use realized_laplace::ingest::{ingest, IngestSpec};

fn rlt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlt"))
        .args(args)
        .output()
        .expect("run rlt")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate(dir: &Path, name: &str, days: &str, seed: &str) -> PathBuf {
    let path = dir.join(name);
    ok(rlt(&[
        "simulate",
        "--days",
        days,
        "--seed",
        seed,
        "--out",
        path.to_str().unwrap(),
    ]));
    path
}

#[test]
fn mc_is_reproducible() {
    let a = ok(rlt(&["mc", "--reps", "10", "--seed", "7"]));
    let b = ok(rlt(&[
        "mc",
        "--reps",
        "10",
        "--seed",
        "7",
        "--workers",
        "1",
    ]));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(
        header.starts_with("u,row,S fixed at true value"),
        "{header}"
    );
    assert_eq!(text.lines().count(), 1 + 5 * 3);
}

#[test]
fn rlt_table_moves_towards_the_true_values() {
    let dir = tempfile::tempdir().unwrap();
    let truth = [0.9051, 0.6112, 0.3001, 0.0980, 0.0344];
    let mut errors = Vec::new();
    for days in ["20", "1200"] {
        let mut total = 0.0;
        for seed in ["1", "2", "3", "4"] {
            let x = simulate(dir.path(), &format!("x{days}_{seed}.csv"), days, seed);
            let out = ok(rlt(&[
                "rlt",
                "--input",
                x.to_str().unwrap(),
                "--beta",
                "1.7",
                "--u",
                "0.1,0.5,1.25,2.5,3.75",
            ]));
            let text = String::from_utf8(out.stdout).unwrap();
            let rows: Vec<Vec<f64>> = text
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
                .collect();
            assert_eq!(rows.len(), 5);
            total += rows
                .iter()
                .zip(truth)
                .map(|(r, t)| (r[1] - t).abs())
                .sum::<f64>();
        }
        errors.push(total);
    }
    assert!(errors[1] < errors[0], "{errors:?}");
}

#[test]
fn simulated_files_ingest_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate(dir.path(), "x.csv", "5", "4");
    let got = ingest(&IngestSpec::new(&x)).unwrap();
    assert!(got.warnings.is_empty());
    assert_eq!(got.path.n_increments(), 5 * 78);
    let mut again = Vec::new();
    got.path.write_csv(&mut again).unwrap();
    assert_eq!(again, std::fs::read(&x).unwrap());
}

#[test]
fn fit_emits_parameters_and_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate(dir.path(), "x.csv", "300", "5");
    let out = ok(rlt(&[
        "fit",
        "--input",
        x.to_str().unwrap(),
        "--beta",
        "1.7",
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for k in ["alpha", "c", "lambda"] {
        assert!(json["theta_hat"][k].is_f64(), "{k}");
    }
    assert_eq!(json["se"].as_array().unwrap().len(), 3);
}

#[test]
fn activity_reports_an_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate(dir.path(), "x.csv", "60", "6");
    let out = ok(rlt(&[
        "activity",
        "--input",
        x.to_str().unwrap(),
        "--bootstrap",
        "50",
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let b = json["beta_hat"].as_f64().unwrap();
    assert!((1.4..2.0).contains(&b), "{b}");
    assert!(json["se"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_invocations_fail() {
    let dir = tempfile::tempdir().unwrap();
    let x = simulate(dir.path(), "x.csv", "2", "7");
    let x = x.to_str().unwrap();
    let usage = rlt(&[
        "rlt",
        "--input",
        x,
        "--beta",
        "1.7",
        "--u",
        "0",
        "--differenced",
    ]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(
        rlt(&["rlt", "--input", x, "--beta", "1.7", "--no-such-flag"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        rlt(&["rlt", "--input", x, "--beta", "known"]).status.code(),
        Some(2)
    );
    let missing = rlt(&[
        "rlt",
        "--input",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--beta",
        "1.7",
        "--per-day",
        "78",
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));
}
