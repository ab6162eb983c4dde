use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn recouple(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recouple"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("single-line JSON error")
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares `--help` output with the stored copy. Set `UPDATE_GOLDEN=1` to
/// rewrite the files.
fn check_help(name: &str, args: &[&str]) {
    let out = recouple(args);
    assert!(out.status.success());
    let got = String::from_utf8(out.stdout).unwrap();
    let path = golden_dir().join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, &got).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(got, want, "help for {name} changed");
}

#[test]
fn help_matches_golden_files() {
    check_help("main", &["--help"]);
    check_help("tau", &["tau", "--help"]);
    check_help("sweep", &["sweep", "--help"]);
    check_help("witness", &["witness", "--help"]);
    check_help("series", &["series", "--help"]);
    check_help("sphere", &["sphere", "--help"]);
    check_help("sphere-density-check", &["sphere", "density-check", "--help"]);
    check_help("sphere-volume", &["sphere", "volume", "--help"]);
    check_help("sphere-ldp", &["sphere", "ldp", "--help"]);
    check_help("homdensity", &["homdensity", "--help"]);
}

#[test]
fn tau_reports_config_and_result() {
    let out = recouple(&["tau", "--graph", "complete:3", "--x", "0.5"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["config"]["x"], 0.5);
    assert_eq!(doc["config"]["graph"]["source"]["family"], "complete:3");
    assert!((doc["result"]["tau"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(doc["result"]["passes"], 0);
}

#[test]
fn tau_from_edge_file_and_matrix_dump() {
    let dir = std::env::temp_dir().join(format!("recouple-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let edges = dir.join("c4.txt");
    fs::write(&edges, "# four-cycle\n10 20\n20 30\n30 40\n40 10\n").unwrap();
    let dump = dir.join("sigma.json");
    let out = recouple(&[
        "tau",
        "--edges",
        edges.to_str().unwrap(),
        "--x",
        "0.5",
        "--dump-matrix",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["config"]["graph"]["labels"], serde_json::json!([10, 20, 30, 40]));
    let m: Value = serde_json::from_str(&fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(m["matrix"].as_array().unwrap().len(), 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn identical_runs_give_identical_output() {
    let args = ["sweep", "--graphs", "cycle:5,complete-bipartite:2,3", "--grid", "0.1:0.5:0.2"];
    let (a, b) = (recouple(&args), recouple(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc = stdout_json(&a);
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn sweep_csv_has_header_and_rows() {
    let out = recouple(&["sweep", "--graphs", "cycle:4", "--grid", "0.2:0.4:0.2", "--csv", "--negative"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("graph,vertices,edges,x"));
    assert_eq!(lines.len(), 5);
}

#[test]
fn witness_and_series_outputs() {
    let out = recouple(&["witness", "--graph", "moebius-ladder", "--x", "0.5", "--compare"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    let want = 0.75f64.powi(9) * 2.0 / 1.5f64.powi(5);
    assert!((doc["result"]["witness_det"].as_f64().unwrap() / want - 1.0).abs() < 1e-12);
    assert_eq!(doc["result"]["thm2"]["holds"], true);
    assert_eq!(doc["result"]["witness_le_tau"], true);

    let out = recouple(&["series", "--graph", "cycle:3", "--order", "4"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    // det of the all-x 3x3 matrix: 1 - 3x^2 + 2x^3
    assert_eq!(doc["result"]["tau_coefficients"], serde_json::json!(["1", "0", "-3", "2", "0"]));
}

#[test]
fn sphere_volume_and_homdensity() {
    let out = recouple(&["sphere", "volume", "--k", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out)["result"]["volume"].as_f64().unwrap();
    assert!((v - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);

    let h = std::env::temp_dir().join(format!("recouple-h-{}.txt", std::process::id()));
    fs::write(&h, "0 1 1\n1 2 0.5\n").unwrap();
    let out = recouple(&["homdensity", "--g", "cycle:4", "--h", h.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["result"]["holds"], true);
    fs::remove_file(&h).ok();
}

#[test]
fn usage_errors_exit_2() {
    let out = recouple(&["tau", "--graph", "nonsense:3", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"], "usage");

    let out = recouple(&["tau", "--graph", "cycle:4", "--x", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    // clap's own parse failures also use code 2
    let out = recouple(&["tau", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_exits_3() {
    let out = recouple(&["tau", "--graph", "cycle:3", "--x", "-0.9"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"], "infeasible");
}

#[test]
fn no_convergence_exits_4_with_best_iterate() {
    let out = recouple(&["tau", "--graph", "cycle:6", "--x", "0.9", "--max-passes", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"], "no-convergence");
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["converged"], false);
    assert!(doc["result"]["residual"].as_f64().unwrap() > 1e-10);
}
