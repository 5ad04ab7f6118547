//! End-to-end checks of the binary: exit codes, output schemas, manifests
//! and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn dppsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn sample_spherical_writes_jsonl_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("points.jsonl");
    let result = dppsim(&[
        "sample",
        "--family",
        "spherical",
        "--n",
        "3",
        "--trials",
        "100",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&result),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let body = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 100);
    for line in &lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["family"], "spherical");
        assert_eq!(v["params"]["n"], 3);
        let finite = v["points"].as_array().unwrap().len() as u64;
        let infinite = v["infinity_count"].as_u64().unwrap();
        assert_eq!(finite + infinite, 3);
        assert_eq!(v["seed"], 7);
    }

    let manifest_path = dir.path().join("points.jsonl.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sample");
    assert_eq!(manifest["flags"]["seed"], "7");
    let hash = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(manifest["outputs"][0]["bytes"], body.len());
}

#[test]
fn sample_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.jsonl");
    let out_b = dir.path().join("b.jsonl");
    for (out, threads) in [(&out_a, "1"), (&out_b, "3")] {
        let result = dppsim(&[
            "sample",
            "--family",
            "truncated",
            "--N",
            "16",
            "--n",
            "2",
            "--trials",
            "50",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&result), 0);
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(
        a, b,
        "same seed must give identical bytes regardless of threads"
    );
}

#[test]
fn sample_truncated_points_stay_in_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let result = dppsim(&[
        "sample",
        "--family",
        "truncated",
        "--N",
        "32",
        "--n",
        "1",
        "--trials",
        "20",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    for line in std::fs::read_to_string(&out).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 32);
        for p in points {
            let (re, im) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
            assert!((re * re + im * im).sqrt() <= 1.0 + 1e-8);
        }
    }
}

#[test]
fn sample_csv_and_gnuplot_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("points.csv");
    let gp = dir.path().join("points.dat");
    let result = dppsim(&[
        "sample",
        "--family",
        "planar",
        "--n",
        "4",
        "--trials",
        "10",
        "--seed",
        "5",
        "--format",
        "csv",
        "--gnuplot",
        gp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let body = std::fs::read_to_string(&out).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("trial,index,re,im"));
    assert_eq!(lines.count(), 40);

    let gp_body = std::fs::read_to_string(&gp).unwrap();
    assert_eq!(gp_body.lines().count(), 40);
    for line in gp_body.lines() {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 3);
        assert_eq!(fields[2], "1.0");
    }
}

#[test]
fn sample_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    // Missing --N for the truncated family.
    let result = dppsim(&[
        "sample",
        "--family",
        "truncated",
        "--n",
        "1",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 2);
    // det-gaf radius outside (0, 1).
    let result = dppsim(&[
        "sample",
        "--family",
        "det-gaf",
        "--n",
        "1",
        "--radius",
        "1.5",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 2);
}

#[test]
fn sample_reports_io_failure() {
    let result = dppsim(&[
        "sample",
        "--family",
        "planar",
        "--n",
        "2",
        "--trials",
        "1",
        "--out",
        "/nonexistent-dir/points.jsonl",
    ]);
    assert_eq!(code(&result), 3);
}

#[test]
fn verify_unknown_suite_exits_2() {
    let result = dppsim(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(code(&result), 2);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("unknown suite"), "stderr: {stderr}");
}

#[test]
fn verify_oracle_suite_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports.json");
    let result = dppsim(&[
        "verify",
        "--suite",
        "oracle-lemma41",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&result),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(
        stdout.contains("PASS cycle-sum-vs-series-division"),
        "stdout: {stdout}"
    );

    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let array = reports.as_array().unwrap();
    assert_eq!(array.len(), 1);
    assert_eq!(array[0]["passed"], true);
    assert!(Path::new(&dir.path().join("reports.json.manifest.json")).exists());
}

#[test]
fn verify_mobius_suite_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# identity checks\ntrials = 200\nseed = 4\n").unwrap();
    let result = dppsim(&[
        "verify",
        "--suite",
        "mobius",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert_eq!(stdout.matches("PASS").count(), 4);
    assert!(stdout.contains("trials=200"));
    assert!(stdout.contains("seed=4"));
}

#[test]
fn coeffs_scalar_matrix_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.json");
    std::fs::write(&matrix, r#"{"rows":1,"cols":1,"re":[0.5],"im":[0.0]}"#).unwrap();
    let out = dir.path().join("coeffs.json");
    let result = dppsim(&[
        "coeffs",
        "--matrix",
        matrix.to_str().unwrap(),
        "--kmax",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&result),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // (z + 1/2)/(1 + z/2): c0 = det = 1/2, c1 = 1 - 1/4.
    assert_eq!(v["det"][0], 0.5);
    assert_eq!(v["cycle_sum"]["re"][0], 0.5);
    assert!((v["cycle_sum"]["re"][1].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((v["series_division"]["re"][1].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!(v["max_relative_discrepancy"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn coeffs_sampled_matrix_has_small_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coeffs.json");
    let result = dppsim(&[
        "coeffs",
        "--N",
        "12",
        "--n",
        "2",
        "--kmax",
        "6",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["max_relative_discrepancy"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["cycle_sum"]["order"], 6);
}

#[test]
fn coeffs_singular_matrix_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("singular.json");
    std::fs::write(
        &matrix,
        r#"{"rows":2,"cols":2,"re":[1.0,0.0,0.0,0.0],"im":[0.0,0.0,0.0,0.0]}"#,
    )
    .unwrap();
    let out = dir.path().join("c.json");
    let result = dppsim(&[
        "coeffs",
        "--matrix",
        matrix.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 4);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("resample"), "stderr: {stderr}");
}

#[test]
fn verify_failing_suite_exits_1() {
    // Two trials give a tiny standard error around a skewed draw; at this
    // pinned seed the check deterministically lands outside three sigma,
    // which is exactly the failure path the exit code must surface.
    let result = dppsim(&[
        "verify",
        "--suite",
        "f0-moment",
        "--trials",
        "2",
        "--seed",
        "1",
    ]);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
    assert_eq!(code(&result), 1);
}
