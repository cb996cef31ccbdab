use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polypencil"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polypencil-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const UNIT_QUADRATIC: &str = r#"{"size":1,"degree":2,"coeffs":[[[-1,0]],[[0,0]],[[1,0]]]}"#;

#[test]
fn eig_of_unit_quadratic() {
    let d = scratch("eig");
    let p = write(&d, "p.json", UNIT_QUADRATIC);
    let out = run(&["eig", "-i", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let mut re: Vec<f64> = v["result"]["finite"].as_array().unwrap().iter().map(|e| e["eigenvalue"][0].as_f64().unwrap()).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((re[0] + 1.0).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);
    assert_eq!(v["manifest"]["subcommand"], "eig");
    assert_eq!(v["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let csv = run(&["eig", "-i", p.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("re,im,geo,alg\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn nan_entry_is_a_validation_error_with_path() {
    let d = scratch("nan");
    let p = write(&d, "bad.json", r#"{"size":1,"degree":1,"coeffs":[[[1,0]],[[NaN,0]]]}"#);
    let out = run(&["eig", "-i", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("$.coeffs[1][0][0]"), "{err}");
}

#[test]
fn unknown_flag_prints_usage() {
    let out = run(&["eig", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
    let missing = run(&["eig", "-i", "/nonexistent/pencil.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn gyroscopic_index_assert() {
    let d = scratch("index");
    let f = write(&d, "F.json", "[1]");
    let dd = write(&d, "D.json", "[0]");
    let g = write(&d, "G.json", "[3]");
    let t = write(&d, "T.json", "[-1]");
    let out = run(&["index", "--F", f.to_str().unwrap(), "--D", dd.to_str().unwrap(), "--G", g.to_str().unwrap(), "--T", t.to_str().unwrap(), "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["formula_holds"], true);
    assert_eq!(v["result"]["kappa"], 0);
    assert_eq!(v["result"]["eps_plus"], 1);
    assert_eq!(v["verdict"], true);
}

#[test]
fn index_suite_table() {
    let d = scratch("suite");
    for (case, damping) in [("damped", "[1]"), ("gyro", "[0]")] {
        let c = d.join(case);
        std::fs::create_dir_all(&c).unwrap();
        write(&c, "F.json", "[1]");
        write(&c, "D.json", damping);
        write(&c, "G.json", "[3]");
        write(&c, "T.json", "[-1]");
    }
    let out = run(&["index", "--suite", d.to_str().unwrap(), "--format", "csv", "--assert"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap().split(',').take(2).collect::<Vec<_>>(), ["damped", "true"]);
}

#[test]
fn false_verdict_exits_with_four() {
    // singular leading coefficient: the duality count falls short of n·m
    let d = scratch("assert");
    let p = write(&d, "p.json", r#"{"size":1,"degree":2,"coeffs":[[1],[1],[0]]}"#);
    let out = run(&["half", "-i", p.to_str().unwrap(), "--kind", "E+", "--assert"]);
    assert_eq!(out.status.code(), Some(4));
    let relaxed = run(&["half", "-i", p.to_str().unwrap(), "--kind", "E+"]);
    assert_eq!(relaxed.status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = scratch("det");
    let cfg = write(&d, "top.json", r#"{"a":[3,2,1],"kg":0.5,"omega":1.7,"nu":1,"fluid":"synthetic:6"}"#);
    let args = ["top", "--config", cfg.to_str().unwrap(), "--sweep", "nu:1e1..1e3:log:4", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let props = ["props", "--suite", "snumbers", "--trials", "20", "--seed", "9"];
    assert_eq!(run(&props).stdout, run(&props).stdout);
}

#[test]
fn linearization_round_trips() {
    let d = scratch("lin");
    let p = write(&d, "p.json", UNIT_QUADRATIC);
    let out = run(&["linearize", "-i", p.to_str().unwrap(), "--kind", "first"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let a0 = v["result"]["a0_hat"].to_string();
    let m = polypencil::io::parse_matrix(&a0).unwrap();
    assert_eq!(m.nrows(), 2);
    let again: serde_json::Value = serde_json::from_str(&polypencil::io::matrix_to_json(&m)).unwrap();
    assert_eq!(again, v["result"]["a0_hat"]);
}

#[test]
fn grating_side_outputs() {
    let d = scratch("grating");
    let out_dir = d.join("out");
    let out = run(&[
        "grating", "--profile", "cos:0.05", "--k", "2.5", "--phi", "0.1", "--modes", "12", "--field-grid", "4,3",
        "--out-dir", out_dir.to_str().unwrap(), "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let modes = std::fs::read_to_string(out_dir.join("modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 1 + 25);
    let field = std::fs::read_to_string(out_dir.join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 12);
    let v = json(&out);
    assert_eq!(v["result"]["propagating_count"], 5);
}

#[test]
fn props_suites() {
    for suite in ["snumbers", "det", "pontryagin"] {
        let out = run(&["props", "--suite", suite, "--trials", "20", "--size", "5", "--assert"]);
        assert_eq!(out.status.code(), Some(0), "{suite}");
    }
    let out = run(&["props", "--suite", "snumbers", "--size", "17"]);
    assert_eq!(out.status.code(), Some(2));
}
