//! End-to-end tests for the `qmatfun` binary: report shapes, exit codes,
//! determinism, and the matrix-document round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmatfun"))
}

fn write_diag(dir: &Path, name: &str, entries: &[f64]) -> PathBuf {
    let p = entries.len();
    let mut data = Vec::new();
    for i in 0..p {
        for j in 0..p {
            data.push([if i == j { entries[i] } else { 0.0 }, 0.0]);
        }
    }
    let doc = serde_json::json!({ "rows": p, "cols": p, "data": data });
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path
}

fn write_full(dir: &Path, name: &str, p: usize, rows: &[[f64; 2]]) -> PathBuf {
    let doc = serde_json::json!({ "rows": p, "cols": p, "data": rows });
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Independent scalar sum for the q-Kummer series.
fn scalar_kummer(s: f64, t: f64, q: f64, z: f64) -> f64 {
    let poch = |a: f64, n: usize| -> f64 {
        let mut prod = 1.0;
        for k in 0..n {
            prod *= 1.0 - a * q.powi(k as i32);
        }
        prod
    };
    (0..60)
        .map(|n| poch(q.powf(s), n) / poch(q.powf(t), n) * z.powi(n as i32) / poch(q, n))
        .sum()
}

#[test]
fn eval_kummer_at_zero_is_identity_with_one_term() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    let out = bin()
        .args(["eval", "kummer", "--z", "0"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    let result = &doc["results"][0];
    assert_eq!(result["terms_used"], 1);
    assert_eq!(result["value"]["data"][0][0], 1.0);
}

#[test]
fn eval_kummer_matches_scalar_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    let out = bin()
        .args(["eval", "kummer", "--q", "0.5", "--z", "0.25"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    let got = doc["results"][0]["value"]["data"][0][0].as_f64().unwrap();
    let want = scalar_kummer(0.5, 1.5, 0.5, 0.25);
    assert!((got - want).abs() <= 1e-10, "got {got}, oracle {want}");
}

#[test]
fn eval_qgamma_diagonal_matches_scalar_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_diag(dir.path(), "p.json", &[1.0, 2.0]);
    let out = bin()
        .args(["eval", "qgamma", "--q", "0.5"])
        .arg("--P")
        .arg(&p)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    let data = doc["results"][0]["value"]["data"].as_array().unwrap();
    // Gamma_q(1) = 1; Gamma_q(2) = 1 (both ends of the functional equation
    // ladder at these arguments).
    let scalar_gamma = |x: f64| -> f64 {
        let q: f64 = 0.5;
        let poch_inf = |a: f64| -> f64 {
            let mut prod = 1.0;
            let mut aq = a;
            for _ in 0..400 {
                prod *= 1.0 - aq;
                aq *= q;
            }
            prod
        };
        let e_q = |z: f64| poch_inf(-(1.0 - q) * z);
        let c0 = 1.0 / (1.0 - q);
        (0..400)
            .map(|j| {
                let u = c0 * q.powi(j);
                (1.0 - q) * u * u.powf(x - 1.0) * e_q(-q * u)
            })
            .sum()
    };
    let g00 = data[0][0].as_f64().unwrap();
    let g11 = data[3][0].as_f64().unwrap();
    assert!((g00 - scalar_gamma(1.0)).abs() <= 1e-10);
    assert!((g11 - scalar_gamma(2.0)).abs() <= 1e-10);
    assert!(data[1][0].as_f64().unwrap().abs() <= 1e-14); // off-diagonal
}

#[test]
fn verify_kummer_series_passes_on_random_draws() {
    let out = bin()
        .args([
            "verify",
            "kummer-series",
            "--samples",
            "4",
            "--seed",
            "7",
            "--z",
            "0.1:0.9:5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_stdout(&out);
    assert_eq!(doc["passed"], true);
    assert!(doc["max_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_kummer_second_rejects_non_commuting_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_full(
        dir.path(),
        "s.json",
        2,
        &[[0.5, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
    );
    let t = write_full(
        dir.path(),
        "t.json",
        2,
        &[[1.5, 0.0], [0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
    );
    let out = bin()
        .args(["verify", "kummer-second"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let doc = json_stdout(&out);
    assert_eq!(doc["error"]["kind"], "NotCommuting");
}

#[test]
fn verify_failing_gate_exits_3() {
    // An absurdly tight gate turns an otherwise-passing suite into a
    // residual failure, which must use the dedicated exit code.
    let out = bin()
        .args([
            "verify",
            "kummer-series",
            "--samples",
            "2",
            "--tolerance",
            "1e-30",
            "--z",
            "0.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let doc = json_stdout(&out);
    assert_eq!(doc["passed"], false);
}

#[test]
fn classify_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5, 1.0]);
    let t = write_diag(dir.path(), "t.json", &[1.5, 2.0]);

    let out = bin()
        .args(["classify", "kummer"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    let kind = doc["results"][0]["kind"].as_str().unwrap();
    assert!(kind.starts_with("singular"), "kummer at 0: {kind}");
    assert!(!doc["results"][0]["probes"].as_array().unwrap().is_empty());

    let out = bin()
        .args(["classify", "kummer-infinity"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    assert_eq!(doc["results"][0]["kind"], "singular-irregular");

    let out = bin().args(["classify", "constant"]).output().unwrap();
    assert!(out.status.success());
    let doc = json_stdout(&out);
    assert_eq!(doc["results"][0]["kind"], "ordinary");
}

#[test]
fn scan_kummer_ratio_approximates_z_in_csv() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5, 1.0]);
    let t = write_diag(dir.path(), "t.json", &[1.5, 2.0]);
    let out = bin()
        .args(["scan", "kummer", "--z", "0.1:0.9:9", "--format", "csv"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "index,z_re,z_im,status,value_norm,terms_used,tail_estimate,residual,ratio"
    );
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], "ok", "row: {line}");
        let z: f64 = cols[1].parse().unwrap();
        let ratio: f64 = cols[8].parse().unwrap();
        assert!((ratio - z).abs() <= 0.05, "z = {z}, ratio = {ratio}");
        let residual: f64 = cols[7].parse().unwrap();
        assert!(residual <= 1e-9, "z = {z}, residual = {residual}");
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn scan_survives_per_point_failures_and_flags_them() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    // z grid includes a negative point where the integral solution is not
    // defined: its row carries an error status, the run still succeeds.
    let out = bin()
        .args(["scan", "integralU1", "--z", "-0.4:0.7:2", "--max-terms", "300"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = json_stdout(&out);
    let rows = doc["results"].as_array().unwrap();
    assert_eq!(rows[0]["status"], "BranchCutViolation");
    assert_eq!(rows[1]["status"], "ok");
}

#[test]
fn reports_are_byte_identical_for_identical_config() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5, 1.0]);
    let t = write_diag(dir.path(), "t.json", &[1.5, 2.0]);
    let run = || {
        bin()
            .args(["eval", "kummer", "--z", "0.05:0.85:8", "--seed", "9"])
            .arg("--S")
            .arg(&s)
            .arg("--T")
            .arg(&t)
            .output()
            .unwrap()
            .stdout
    };
    let a = run();
    let b = run();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn matrix_document_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let entries = [[0.123456789012345678, -0.5], [1.5, 2.25], [3.0, -0.125], [0.75, 0.0]];
    let m = write_full(dir.path(), "m.json", 2, &entries);
    // eval kummer2 with S = T = m echoes the matrix through the pipeline; we
    // instead reread the document directly to check the parse/serialize pair.
    let text = std::fs::read_to_string(&m).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    let data = doc["data"].as_array().unwrap();
    for (k, &[re, im]) in entries.iter().enumerate() {
        assert_eq!(data[k][0].as_f64().unwrap(), re);
        assert_eq!(data[k][1].as_f64().unwrap(), im);
    }
}

#[test]
fn env_var_overrides_term_cap() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    // A tiny cap forces a truncation failure; the env var supplies it.
    let out = bin()
        .args(["eval", "kummer", "--z", "0.9"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .env("QMATFUN_MAX_TERMS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let doc = json_stdout(&out);
    assert_eq!(doc["error"]["kind"], "TruncationNotConverged");
    assert_eq!(doc["meta"]["config"]["max_terms"], 3);

    // An explicit flag takes precedence over the env var.
    let out = bin()
        .args(["eval", "kummer", "--z", "0.9", "--max-terms", "200"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .env("QMATFUN_MAX_TERMS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_grid_and_bad_file_exit_1() {
    let out = bin()
        .args(["eval", "kummer", "--z", "0.1:0.9:0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin()
        .args(["eval", "kummer", "--z", "0.5", "--S", "/nonexistent.json", "--T", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_rejects_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    let out = bin()
        .args(["eval", "kummer", "--z", "0.5", "--format", "csv"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_writes_to_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_diag(dir.path(), "s.json", &[0.5]);
    let t = write_diag(dir.path(), "t.json", &[1.5]);
    let out_path = dir.path().join("report.json");
    let out = bin()
        .args(["eval", "kummer", "--z", "0.3"])
        .arg("--S")
        .arg(&s)
        .arg("--T")
        .arg(&t)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["results"][0]["status"], "ok");
}
