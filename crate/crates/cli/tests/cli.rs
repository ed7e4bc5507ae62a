use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn boltztune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boltztune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// 6×6 images: a bar in one of six rows or columns.
fn write_bars(dir: &Path, count: usize) -> PathBuf {
    let mut text = String::new();
    for k in 0..count {
        let line = k % 6;
        let vertical = (k / 6) % 2 == 1;
        let cells: Vec<&str> = (0..36)
            .map(|p| {
                let (r, c) = (p / 6, p % 6);
                if (vertical && c == line) || (!vertical && r == line) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    let path = dir.join("bars.csv");
    std::fs::write(&path, text).unwrap();
    path
}

fn tune_args<'a>(data: &'a str, out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "tune", "--data", data, "--format", "csv", "--width", "6", "--height", "6",
        "--train-fraction", "0.5", "--train-count", "20", "--test-count", "20",
        "--epochs", "2", "--batch-size", "10", "--optimizer", "ihs", "--agents", "3",
        "--iters", "2", "--runs", "5", "--seed", seed, "--set", "space.n_max=12",
        "--out", out,
    ]
}

#[test]
fn tune_writes_reports_and_stats_compares_them() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_bars(dir.path(), 60);
    let data = data.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = boltztune(&tune_args(data, a.to_str().unwrap(), "1"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("test MSE"));
    for f in ["report.json", "convergence.csv", "pl_curve.csv"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert!(boltztune(&tune_args(data, b.to_str().unwrap(), "2")).status.success());

    let ra = a.join("report.json");
    let rb = b.join("report.json");
    let out = boltztune(&["stats", ra.to_str().unwrap(), rb.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ihs-dbn1-cd#1"));

    let out = boltztune(&["stats", ra.to_str().unwrap(), ra.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("no_effective_samples"));
}

#[test]
fn train_save_and_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_bars(dir.path(), 40);
    let model = dir.path().join("model.bin");
    let out = boltztune(&[
        "train", "--data", data.to_str().unwrap(), "--format", "csv", "--width", "6",
        "--height", "6", "--train-fraction", "0.5", "--epochs", "5", "--batch-size", "5",
        "--hidden", "8,4", "--save", model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("layer 1 epoch   5"));
    let out = boltztune(&[
        "reconstruct", "--model-file", model.to_str().unwrap(), "--data",
        data.to_str().unwrap(), "--format", "csv", "--width", "6", "--height", "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("40 images, dbn model with 2 layers"));
}

#[test]
fn bench_prints_one_line_per_optimizer() {
    let out = boltztune(&["bench", "--dims", "3", "--iters", "5", "--seeds", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1 + 8);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_bars(dir.path(), 20);
    let out = boltztune(&["tune", "--data", data.to_str().unwrap(), "--set", "no.such=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = boltztune(&["tune", "--data", data.to_str().unwrap(), "--optimizer", "simplex"]);
    assert_eq!(out.status.code(), Some(2));
    let out = boltztune(&["bench", "--function", "sphinx"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contract_violations_exit_with_four() {
    let out = boltztune(&["bench", "--optimizer", "jade", "--agents", "2", "--iters", "1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = boltztune(&[
        "tune", "--data", missing.to_str().unwrap(), "--format", "csv", "--width", "2",
        "--height", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,2\n").unwrap();
    let out = boltztune(&[
        "tune", "--data", bad.to_str().unwrap(), "--format", "csv", "--width", "2",
        "--height", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column 2"));
}
