use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const FIVE_ROWS: &str = r#"{"n":1,"r":2,"q":5,"coeffs":[["1","0"],["0","1"],["1","1"],["2","1"],["1","2"]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cone-minimax"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    run_env(args, stdin, &[])
}

fn run_env(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn");
    child.stdin.take().unwrap().write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    child.wait_with_output().expect("wait")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn temp_file(name: &str, body: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cone-minimax-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn gen_pipes_into_check() {
    let gen = run(&["gen", "--family", "conjbex", "--n", "1", "--s", "1"], None);
    assert_eq!(gen.status.code(), Some(0));
    let text = String::from_utf8(gen.stdout).unwrap();
    let check = run(&["check", "--n", "1"], Some(&text));
    assert_eq!(check.status.code(), Some(0), "{}", String::from_utf8_lossy(&check.stderr));
    let report = json(&check);
    assert_eq!(report["status"], "pass");
    assert_eq!(report["thresholds"]["hyperbolic_b"], false);
    assert_eq!(report["thresholds"]["required_hyperbolic_b"], 8);
}

#[test]
fn certify_then_verify() {
    let inst = temp_file("five.json", FIVE_ROWS);
    let inst = inst.to_str().unwrap();
    let cert = run(&["certify", inst, "--n", "1", "--seed", "3"], None);
    assert_eq!(cert.status.code(), Some(0), "{}", String::from_utf8_lossy(&cert.stderr));
    let body = json(&cert);
    let cert_path = temp_file("cert.json", &body.to_string());
    let verify = run(&["verify", inst, cert_path.to_str().unwrap(), "--n", "1"], None);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(json(&verify)["status"], "pass");
}

/// `delta` is half the exact margin, so doubling it lands on the margin
/// and still passes; anything beyond fails inequality (iii).
#[test]
fn tampered_delta() {
    let inst = temp_file("five-t.json", FIVE_ROWS);
    let inst = inst.to_str().unwrap();
    let good = r#"{"b":["1","6/5"],"c":["1","6/5","1","1/2","3/5"],"delta":"5/8","kappa":"1/100","seed":0}"#;
    let doubled = good.replace("5/8", "5/4");
    let beyond = good.replace("5/8", "1251/1000");
    for (name, body, code) in [("good", good.to_string(), 0), ("doubled", doubled, 0), ("beyond", beyond, 1)] {
        let path = temp_file(&format!("{name}.json"), &body);
        let out = run(&["verify", inst, path.to_str().unwrap()], None);
        assert_eq!(out.status.code(), Some(code), "{name}");
        if code == 1 {
            let v = json(&out);
            assert_eq!(v["status"], "fail");
            assert_eq!(v["inequality"], "iii");
            assert_eq!(v["witness"]["j"], 2);
            assert_eq!(v["witness"]["value"], "-3/2500");
        }
    }
}

#[test]
fn floats_are_rejected() {
    let out = run(&["check", "--n", "1"], Some(r#"{"r":1,"q":1,"coeffs":[[0.5]]}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rationals only"));
    let out = run(&["solve"], Some(r#"{"n":1,"r":1,"q":1,"coeffs":[["1e3"]]}"#));
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["certify", "--kappa", "0.01", "--n", "1"], Some(FIVE_ROWS));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_mismatch() {
    let out = run(&["check", "--n", "2"], Some(FIVE_ROWS));
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["check"], Some(r#"{"r":1,"q":1,"coeffs":[["1"]]}"#));
    assert_eq!(out.status.code(), Some(2));
    // solve does not need n
    let out = run(&["solve"], Some(r#"{"r":1,"q":1,"coeffs":[["1"]]}"#));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn checked_failures_exit_one() {
    let bad = r#"{"n":1,"r":2,"q":4,"coeffs":[[1,0],[1,0],[1,0],[0,1]]}"#;
    let out = run(&["check"], Some(bad));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["support"]["violation"]["subset"], serde_json::json!([1]));
    let out = run(&["partition"], Some(bad));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "no_partition");
    let zero_row = r#"{"n":1,"r":2,"q":2,"coeffs":[[1,0],[0,0]]}"#;
    let out = run(&["check"], Some(zero_row));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["violations"][0]["kind"], "zero_row");
    let below = r#"{"n":1,"r":2,"q":4,"coeffs":[[1,0],[0,1],[1,1],[2,1]]}"#;
    let out = run(&["certify"], Some(below));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"], "threshold");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["gen", "--family", "conjaex", "--n", "2", "--r", "3"], None).status.code(), Some(2));
    assert_eq!(run(&["gen", "--family", "nope", "--n", "2"], None).status.code(), Some(2));
    assert_eq!(run(&["check", "/nonexistent/file.json"], None).status.code(), Some(2));
    assert_eq!(run(&["bogus"], None).status.code(), Some(2));
    let wide = r#"{"n":1,"r":4,"q":1,"coeffs":[[1,1,1,1]]}"#;
    assert_eq!(run(&["oracle", "partition"], Some(wide)).status.code(), Some(2));
}

#[test]
fn partition_and_oracles() {
    let four = r#"{"n":1,"r":2,"q":4,"coeffs":[[1,0],[1,0],[0,1],[1,1]]}"#;
    let out = run(&["partition"], Some(four));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"blocks":[[1,3],[2,4]]}"#);
    let out = run(&["partition", "--regroup"], Some(four));
    assert_eq!(json(&out)["rows"], serde_json::json!([["1", "1"], ["2", "1"]]));
    let out = run(&["oracle", "partition"], Some(four));
    assert_eq!(json(&out)["exists"], true);
    let out = run(&["oracle", "minimax", "--denominator", "5", "--multiple", "2"], Some(FIVE_ROWS));
    assert_eq!(json(&out)["best_sorted"], serde_json::json!([3, 2]));
}

#[test]
fn iteration_cap_from_environment() {
    let lopsided = r#"{"n":1,"r":2,"q":6,"coeffs":[[1,2],[1,3],[1,4],[1,5],[3,1],[1,1]]}"#;
    let free = run(&["solve"], Some(lopsided));
    assert_eq!(free.status.code(), Some(0));
    assert_eq!(json(&free)["moves"], 1);
    let capped = run_env(&["solve"], Some(lopsided), &[("CONE_MINIMAX_MAX_ITERS", "0")]);
    assert_eq!(capped.status.code(), Some(1));
    assert_eq!(json(&capped)["error"], "iteration_cap");
    let bad = run_env(&["solve"], Some(lopsided), &[("CONE_MINIMAX_MAX_ITERS", "many")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["gen", "--family", "random", "--n", "1", "--r", "3", "--q", "9", "--seed", "5"],
        vec!["gen", "--family", "appex", "--n", "2", "--seed", "1"],
    ] {
        let a = run(&args, None);
        let b = run(&args, None);
        assert_eq!(a.stdout, b.stdout);
        let inst = String::from_utf8(a.stdout).unwrap();
        let c1 = run(&["certify", "--seed", "2"], Some(&inst));
        let c2 = run(&["certify", "--seed", "2"], Some(&inst));
        assert_eq!(c1.stdout, c2.stdout);
    }
}
