use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rw-spectral"));
    c.env_remove("RW_SPECTRAL_CACHE_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn compute_a0_as_text() {
    let o = run(&["compute", "--order", "0", "--coords", "hopf", "--format", "text"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a_0 = a(t)^3/2\n");
}

#[test]
fn compute_a2_as_json() {
    let o = run(&["compute", "--order", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["order"], 2);
    assert_eq!(v["coords"], "hopf");
    assert_eq!(v["aPower"], 0);
    let mut terms: Vec<(String, Vec<i64>)> = v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["coeff"].as_str().unwrap().to_string(), serde_json::from_value(t["jets"].clone()).unwrap()))
        .collect();
    terms.sort();
    assert_eq!(
        terms,
        vec![("-1/4".into(), vec![1]), ("1/4".into(), vec![1, 2]), ("1/4".into(), vec![2, 0, 1])]
    );
    assert_eq!(v["reduced"]["aPower"], 0);
}

#[test]
fn odd_orders_need_a_flag() {
    let o = run(&["compute", "--order", "3"]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("order must be even (odd coefficients vanish; see --allow-odd to verify zero)"), "{err}");

    let o = run(&["compute", "--order", "3", "--allow-odd", "--coords", "both"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "[hopf] a_3 = 0\n[spherical] a_3 = 0\n");
}

#[test]
fn latex_output() {
    let o = run(&["compute", "--order", "2", "--format", "latex"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("a_{2} = \\frac{1}{4}"));
}

#[test]
fn verify_hn_prints_ten_passes() {
    let o = run(&["verify", "--suite", "hn"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS h_")).count(), 10);
    assert!(text.contains("1/9386196019200"));
}

#[test]
fn verify_cross_and_round() {
    let o = run(&["verify", "--suite", "cross", "--order", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS cross")).count(), 5);

    let o = run(&["verify", "--suite", "round", "--order", "8", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"][0]["detail"].as_str().unwrap().contains("41/10080"));
}

#[test]
fn verify_reference_small_orders() {
    let o = run(&["verify", "--suite", "paper", "--order", "6", "--coords", "both"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS reference")).count(), 8);
}

fn bench_json(args: &[&str]) -> Vec<Value> {
    let mut full = vec!["bench", "--format", "json"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert!(o.status.success());
    serde_json::from_slice(&o.stdout).unwrap()
}

fn counts(row: &Value) -> Vec<(u64, u64)> {
    row["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l["nodes"].as_u64().unwrap(), l["terms"].as_u64().unwrap()))
        .collect()
}

#[test]
fn bench_is_deterministic_across_runs_and_jobs() {
    let a = bench_json(&["--order", "6", "--jobs", "1"]);
    let b = bench_json(&["--order", "6", "--jobs", "1"]);
    let c = bench_json(&["--order", "6", "--jobs", "3"]);
    assert_eq!(counts(&a[0]), counts(&b[0]));
    assert_eq!(counts(&a[0]), counts(&c[0]));
    assert_eq!(a[0]["resultDigest"], c[0]["resultDigest"]);
}

#[test]
fn json_artifacts_are_byte_identical_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("one.json");
    let p2 = dir.path().join("two.json");
    for (jobs, path) in [("1", &p1), ("2", &p2)] {
        let o = run(&["compute", "--order", "6", "--format", "json", "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn warm_cache_skips_computed_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let cold = bench_json(&["--order", "6", "--cache", cache]);
    assert_eq!(cold[0]["reusedLevels"], 0);
    let warm = bench_json(&["--order", "8", "--cache", cache]);
    // levels 4 and 5 were saved; only 6, 7 and the trace of 8 remain
    assert_eq!(warm[0]["reusedLevels"], 5);
    let levels: Vec<u64> = warm[0]["levels"].as_array().unwrap().iter().map(|l| l["level"].as_u64().unwrap()).collect();
    assert_eq!(levels, vec![6, 7, 8]);
    assert_eq!(cold[0]["resultDigest"], bench_json(&["--order", "6", "--cache", cache])[0]["resultDigest"]);
}

#[test]
fn cache_command_uses_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["cache", "warm", "--order", "4"])
        .env("RW_SPECTRAL_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = bin().args(["cache", "info"]).env("RW_SPECTRAL_CACHE_DIR", dir.path()).output().unwrap();
    assert!(stdout(&o).contains("levels complete to 4"), "{}", stdout(&o));
    let o = bin().args(["cache", "clear"]).env("RW_SPECTRAL_CACHE_DIR", dir.path()).output().unwrap();
    assert!(stdout(&o).contains("removed"));
    assert!(!run(&["cache", "info"]).status.success());
}

#[test]
fn corrupt_cache_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["cache", "warm", "--order", "2", "--cache", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        std::fs::write(entry.unwrap().path(), b"not a cache").unwrap();
    }
    let o = run(&["compute", "--order", "2", "--cache", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("cache error"));
}
