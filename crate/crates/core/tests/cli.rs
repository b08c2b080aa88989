use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use okmeans::harness::io::{read_dataset, TruthFile};
use okmeans::harness::report::Report;
use serde_json::Value;
use tempfile::TempDir;

fn okmeans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_okmeans"))
        .args(args)
        .env_remove("OK_THREADS")
        .output()
        .expect("spawn okmeans")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn generate(dir: &TempDir, n: usize, k: usize, z: usize, seed: u64) -> (PathBuf, PathBuf) {
    let data = dir.path().join(format!("x{seed}.csv"));
    let out = okmeans(&[
        "generate",
        "--n",
        &n.to_string(),
        "--d",
        "3",
        "--k",
        &k.to_string(),
        "--z",
        &z.to_string(),
        "--delta",
        "20",
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&data),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth = PathBuf::from(format!("{}.truth.json", data.display()));
    assert!(truth.exists());
    (data, truth)
}

#[test]
fn generate_writes_dataset_and_truth() {
    let dir = TempDir::new().unwrap();
    let (data, truth) = generate(&dir, 500, 3, 10, 1);
    let x = read_dataset(&data).unwrap();
    assert_eq!((x.len(), x.dim()), (500, 3));
    let t: TruthFile = serde_json::from_str(&std::fs::read_to_string(truth).unwrap()).unwrap();
    assert_eq!(t.outlier_indices.len(), 10);
    assert_eq!(t.true_centers.len(), 3);
    assert_eq!(t.spec.unwrap().n, 500);
}

#[test]
fn cluster_report_is_reproducible_and_verifiable() {
    let dir = TempDir::new().unwrap();
    let (data, truth) = generate(&dir, 800, 3, 16, 2);
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = okmeans(&[
            "cluster",
            "--input",
            path_str(&data),
            "--k",
            "3",
            "--z",
            "16",
            "--truth",
            path_str(&truth),
            "--out",
            path_str(&out_path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_path
    };
    let a = run("a.json");
    let b = run("b.json");
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let report: Report = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(report.discarded.len(), 16);
    assert!(report.wall_ms.is_none());
    assert_eq!(report.precision, report.recall);

    let out = okmeans(&[
        "eval",
        "--input",
        path_str(&data),
        "--report",
        path_str(&a),
        "--truth",
        path_str(&truth),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective_matches"], Value::Bool(true));
    assert_eq!(v["discarded_matches"], Value::Bool(true));
    assert_eq!(v["precision"], serde_json::to_value(report.precision).unwrap());
}

#[test]
fn report_keys_in_documented_order() {
    let dir = TempDir::new().unwrap();
    let (data, _) = generate(&dir, 300, 2, 5, 3);
    let out = okmeans(&[
        "cluster", "--input", path_str(&data), "--k", "2", "--z", "5", "--algo", "kmm", "--seeds", "4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = ["\"algo\"", "\"status\"", "\"seed\"", "\"params\"", "\"objective\"", "\"precision\"", "\"wall_ms\"", "\"centers\"", "\"discarded\""];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
}

#[test]
fn timing_flag_fills_wall_time() {
    let dir = TempDir::new().unwrap();
    let (data, _) = generate(&dir, 300, 2, 5, 4);
    let out = okmeans(&[
        "cluster", "--input", path_str(&data), "--k", "2", "--z", "5", "--timing", "--coreset", "off",
    ]);
    assert!(out.status.success());
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.wall_ms.unwrap() >= 0.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall_ms"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let (data, _) = generate(&dir, 400, 2, 8, 5);
    let input = path_str(&data);

    let out = okmeans(&["cluster", "--input", input, "--k", "2", "--z", "400"]);
    assert_eq!(out.status.code(), Some(2));
    let out = okmeans(&["cluster", "--input", input, "--k", "2", "--z", "8", "--algo", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = okmeans(&["cluster", "--input", "/nonexistent.csv", "--k", "2", "--z", "8"]);
    assert_eq!(out.status.code(), Some(2));

    let out = okmeans(&[
        "cluster", "--input", input, "--k", "2", "--z", "8", "--coreset", "off", "--timeout", "0.000001",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.status.to_string(), "timeout");

    let out = okmeans(&[
        "cluster", "--input", input, "--k", "2", "--z", "8", "--coreset", "off", "--opt-guess", "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let (data, _) = generate(&dir, 200, 2, 4, 6);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_okmeans"))
            .args(["cluster", "--input", path_str(&data), "--k", "2", "--z", "4"])
            .env("OK_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(run("zero").status.code(), Some(2));
    // Results do not depend on the thread count.
    let two = run("2");
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn bench_from_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sweep.json");
    let spec = r#"{"kind": "synthetic", "n": 600, "d": 2, "k": 3, "z": 12, "noise_range": 40.0, "seed": 9}"#;
    let sweep = format!(
        r#"[{{"source": {spec}, "algo": "kmm", "coreset": "off", "seeds": [1, 2]}},
            {{"source": {spec}, "algo": "nk", "coreset": "off", "seeds": [1, 2]}}]"#
    );
    std::fs::write(&cfg, sweep).unwrap();
    let table = dir.path().join("table.csv");
    let raw = dir.path().join("runs.jsonl");
    let out = okmeans(&[
        "bench",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&table),
        "--raw",
        path_str(&raw),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&table).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][col("algo")], "nk");
    assert_eq!(&rows[0][col("normalized_objective")], "1.0");
    assert_eq!(&rows[1][col("algo")], "kmm");
    assert_eq!(std::fs::read_to_string(&raw).unwrap().lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("low_precision"));
}

#[test]
fn oracle_on_tiny_input() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("tiny.csv");
    std::fs::write(&data, "0\n1\n10\n").unwrap();
    let out = okmeans(&["oracle", "--input", path_str(&data), "--k", "1", "--z", "1", "--continuous"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective"], Value::from(0.5));
    assert_eq!(v["continuous_objective"], Value::from(0.5));
    assert_eq!(v["outliers"], serde_json::json!([2]));
}

#[test]
fn export_coreset_writes_weighted_csv() {
    let dir = TempDir::new().unwrap();
    let (data, _) = generate(&dir, 2000, 3, 20, 7);
    let core = dir.path().join("core.csv");
    let out = okmeans(&[
        "cluster", "--input", path_str(&data), "--k", "3", "--z", "20", "--export-coreset", path_str(&core),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    let c = read_dataset(&core).unwrap();
    assert_eq!(c.len(), r.coreset.unwrap().size);
    assert!(c.weights().unwrap().iter().all(|&w| w >= 1.0));

    let refined = dir.path().join("refined.csv");
    let out = okmeans(&[
        "cluster", "--input", path_str(&data), "--k", "3", "--z", "20", "--refine-coreset",
        "--export-coreset", path_str(&refined),
    ]);
    assert!(out.status.success());
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.params.refine_coreset);
    let c = read_dataset(&refined).unwrap();
    assert_eq!(c.total_weight(), r.coreset.unwrap().sample_size as f64);
}
