use std::path::PathBuf;
use std::process::{Command, Output};

fn iterperiod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iterperiod"))
        .args(args)
        .env_remove("ITERPERIOD_PRECISION")
        .output()
        .expect("binary runs")
}

fn mapping_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iterperiod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn analyze_swap() {
    let path = mapping_file("swap.txt", "2 2 1");
    let out = iterperiod(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(
        (v["T"].as_str(), v["B"].as_str(), v["O"].as_str()),
        (Some("2"), Some("2"), Some("2"))
    );
}

#[test]
fn analyze_tail() {
    let path = mapping_file("tail.txt", "3 1 1 2");
    let v = json(&iterperiod(&["analyze", path.to_str().unwrap()]));
    assert_eq!((v["T"].as_str(), v["O"].as_str()), (Some("1"), Some("2")));
    assert_eq!(v["cycle_lengths"], serde_json::json!([1]));
}

#[test]
fn analyze_errors() {
    let bad = mapping_file("bad.txt", "1 0");
    assert_eq!(
        iterperiod(&["analyze", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let missing = std::env::temp_dir().join("iterperiod-no-such-file.txt");
    assert_eq!(
        iterperiod(&["analyze", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn exact_reports_pass() {
    let out = iterperiod(&["exact", "--n", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.matches("PASS").count(), 7);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("7,1862890,823543,1965160,823543"));
    assert_eq!(iterperiod(&["exact", "--n", "61"]).status.code(), Some(4));
}

#[test]
fn constants_json() {
    let out = iterperiod(&["constants", "--tolerance", "1e-8"]);
    assert_eq!(out.status.code(), Some(0));
    let k0 = json(&out)["k0"].as_f64().unwrap();
    assert!((3.35..=3.37).contains(&k0));
    assert_eq!(
        iterperiod(&["constants", "--tolerance", "0.1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_is_clean() {
    let out = iterperiod(&[
        "simulate",
        "--n",
        "100",
        "--samples",
        "100000",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (h, v) in header.iter().zip(&row) {
        if h.starts_with("viol_") {
            assert_eq!(*v, "0", "{h}");
        }
    }
    assert_eq!(
        iterperiod(&["simulate", "--n", "20000000", "--samples", "1"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn series_paper_variant_and_limits() {
    let out = iterperiod(&["series", "--degree", "50", "--paper-variant"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("n,log_E_B,rankin_log_bound,s_star,A_n,log_E_B_paper_variant"));
    assert_eq!(
        iterperiod(&["series", "--degree", "600", "--mode", "exact"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        iterperiod(&["series", "--degree", "10", "--n", "11"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        iterperiod(&["series", "--degree", "10", "--precision", "128"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        iterperiod(&["simulate", "--n", "0", "--samples", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(iterperiod(&["frobnicate"]).status.code(), Some(2));
}
