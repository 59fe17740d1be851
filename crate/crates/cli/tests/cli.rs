use std::process::{Command, Output};

use serde_json::Value;

fn gbayes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbayes")).args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = gbayes(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header and rows of a CSV output, metadata lines dropped.
fn csv_body(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn csv_starts_with_metadata() {
    let text = stdout_ok(&["phi", "--points", "4", "--seed", "9"]);
    let meta: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["tool=gbayes", "command=phi", "seed=9", "relative_tolerance=1e-10"] {
        assert!(meta.iter().any(|l| l.ends_with(key)), "missing {key} in {meta:?}");
    }
    assert!(meta.iter().any(|l| l.starts_with("# version=")));
    assert!(meta.iter().any(|l| l.starts_with("# config={")));
}

#[test]
fn phi_grid_endpoints_and_closed_form() {
    let text = stdout_ok(&["phi", "--closed-form", "--w-min", "0.01", "--w-max", "100", "--points", "5"]);
    let (header, rows) = csv_body(&text);
    assert_eq!(rows.len(), 5);
    let (iw, iphi) = (column(&header, "w"), column(&header, "phi"));
    let w: Vec<f64> = rows.iter().map(|r| r[iw].parse().unwrap()).collect();
    assert!((w[0] - 0.01).abs() < 1e-15 && (w[4] - 100.0).abs() < 1e-12);
    let c = 4.0 / 3.0;
    for (row, w) in rows.iter().zip(&w) {
        let phi: f64 = row[iphi].parse().unwrap();
        assert!((phi - c * w / (w + 1.0 + c)).abs() < 1e-14 * (1.0 + phi));
    }
}

#[test]
fn estimate_at_zero_is_zero() {
    let text = stdout_ok(&["estimate", "--p", "4", "--n", "6", "--a", "0", "--b", "1", "--x", "0,0,0,0", "--s", "2"]);
    let (header, rows) = csv_body(&text);
    assert_eq!(rows.len(), 1);
    for k in 1..=4 {
        let v: f64 = rows[0][column(&header, &format!("estimate_{k}"))].parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn estimate_reads_an_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.txt");
    std::fs::write(&path, "# x then s\n1.0\n-2.0\n\n0.5\n3.0\n").unwrap();
    let from_file = stdout_ok(&["estimate", "--p", "3", "--n", "4", "--a", "0", "--b", "0", "--input", path.to_str().unwrap(), "--format", "json"]);
    let inline = stdout_ok(&["estimate", "--p", "3", "--n", "4", "--a", "0", "--b", "0", "--x", "1,-2,0.5", "--s", "3", "--format", "json"]);
    let a: Value = serde_json::from_str(&from_file).unwrap();
    let b: Value = serde_json::from_str(&inline).unwrap();
    assert_eq!(a["result"], b["result"]);
    // The shrunk estimate points the same way as x.
    let est = a["result"]["estimate"].as_array().unwrap();
    assert!(est[0].as_f64().unwrap() > 0.0 && est[1].as_f64().unwrap() < 0.0);
}

#[test]
fn region_for_six_four_has_no_both_points() {
    let text = stdout_ok(&["region", "--p", "6", "--n", "4"]);
    let (header, rows) = csv_body(&text);
    assert_eq!(rows.len(), 21 * 21);
    let both = column(&header, "both");
    assert!(rows.iter().all(|r| r[both] == "false"));
    let text = stdout_ok(&["region", "--p", "10", "--n", "10"]);
    let (header, rows) = csv_body(&text);
    let both = column(&header, "both");
    assert!(rows.iter().any(|r| r[both] == "true"));
}

#[test]
fn risk_json_rows() {
    let text = stdout_ok(&["risk", "--closed-form", "--reps", "2000", "--theta-grid", "0,3", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["risk_mean"].as_f64().unwrap() < 10.0);
    assert_eq!(v["metadata"]["command"], "risk");
}

#[test]
fn verify_passes_and_reports_json() {
    let out = gbayes(&["verify", "--suite", "inequalities"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[PASS]"));
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["phi", "--w-min", "5", "--w-max", "1"],
        &["phi", "--points", "1"],
        &["estimate", "--p", "3", "--x", "1,2", "--s", "1", "--a", "0", "--b", "0"],
        &["estimate", "--x", "1,2,3,4,5,6,7,8,9,10", "--s", "-1"],
        &["phi", "--closed-form", "--a", "0", "--b", "0"],
        &["risk", "--reps", "10"],
        &["region", "--a-min", "-1"],
        &["verify", "--samples", "5"],
        &["phi", "--rel-tol", "2"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = gbayes(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
    }
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    let args = ["phi", "--points", "3", "--format", "json"];
    let printed = stdout_ok(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(stdout_ok(&with_out).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}
