use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fpwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpwb"))
        .args(args)
        .env_remove("FPWB_SEED")
        .env("RUST_LOG", "off")
        .output()
        .expect("run fpwb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn success(args: &[&str]) -> String {
    let o = fpwb(args);
    assert!(o.status.success(), "fpwb {args:?}: {}", stderr(&o));
    stdout(&o)
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn analyze_json_matches_server_golden() {
    let out = success(&[
        "analyze",
        "--expr",
        "log(x + sqrt(x * x + 1))",
        "--range",
        "x=0:1e308",
        "--points",
        "256",
        "--seed",
        "42",
        "--format",
        "json",
    ]);
    let golden = std::fs::read_to_string(root().join("tests/golden/asinh_errors_seed42.json")).unwrap();
    assert_eq!(out, golden);
}

#[test]
fn analyze_cancellation_example() {
    let out = success(&["analyze", "--expr", "x + 1 - x", "--range", "x=1e10:1e20", "--seed", "42", "--format", "json"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert!(r["average"].as_f64().unwrap() > 20.0, "{}", r["average"]);
    let worst = u64::from_str_radix(r["worst"]["point"][0].as_str().unwrap(), 16).unwrap();
    assert!(f64::from_bits(worst) >= 1e16);
    assert!(r["worst"]["bits"].as_f64().unwrap() >= 60.0);
}

#[test]
fn analyze_formats() {
    let table = success(&["analyze", "--expr", "x", "--range", "x=0:1"]);
    assert!(table.contains("average     0.00 bits"), "{table}");
    let csv = success(&["analyze", "--expr", "x", "--range", "x=0:1", "--points", "16", "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,x,x_hex,bits");
    assert_eq!(lines.len(), 17);
    let cols: Vec<&str> = lines[1].split(',').collect();
    let x: f64 = cols[1].parse().unwrap();
    assert_eq!(x.to_bits(), u64::from_str_radix(cols[2], 16).unwrap());
}

#[test]
fn fpcore_file_input() {
    let dir = std::env::temp_dir().join(format!("fpwb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("asinh.fpcore");
    std::fs::write(&path, "(FPCore (x) :pre (<= 0 x 1e308) (log (+ x (sqrt (+ (* x x) 1)))))").unwrap();
    let out = success(&["analyze", "--fpcore", path.to_str().unwrap(), "--format", "json"]);
    let golden = std::fs::read_to_string(root().join("tests/golden/asinh_errors_seed42.json")).unwrap();
    assert_eq!(out, golden);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_2() {
    let o = fpwb(&["analyze", "--expr", "x + 1 - x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid_range"), "{}", stderr(&o));

    let o = fpwb(&["analyze", "--expr", "log(x +", "--range", "x=0:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse_error"));

    let o = fpwb(&["analyze", "--expr", "x", "--range", "x=zero:1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = fpwb(&["analyze", "--expr", "x", "--fpcore", "f", "--range", "x=0:1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fpwb(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suggest_identity_with_k1() {
    let out = success(&["suggest", "--expr", "x", "--range", "x=0:1", "--k", "1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "done");
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(results[0]["expr"], "x");
}

#[test]
fn suggest_finds_hypot() {
    let out = success(&[
        "suggest", "--expr", "sqrt(x * x + 1)", "--range", "x=0:1e308", "--depth", "2", "--points", "128",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let best = &v["results"][0];
    assert!(best["expr"].as_str().unwrap().contains("hypot"), "{best}");
    assert!(best["report"]["average"].as_f64().unwrap() <= 1.0);
    let table = success(&[
        "suggest", "--expr", "sqrt(x * x + 1)", "--range", "x=0:1e308", "--depth", "2", "--points", "128", "--format",
        "table",
    ]);
    assert!(table.contains("via hypot-intro"), "{table}");
}

#[test]
fn suggest_timeout_warns_and_succeeds() {
    let o = fpwb(&["suggest", "--expr", "log(x + sqrt(x * x + 1))", "--range", "x=0:1e308", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "timeout");
}

#[test]
fn localerror_points_at_sqrt_for_large_x() {
    let out = success(&["localerror", "--expr", "log(x + sqrt(x * x + 1))", "--point", "x=1e200", "--format", "json"]);
    let t: Value = serde_json::from_str(&out).unwrap();
    let hottest = t["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .max_by(|a, b| {
            let (a, b) = (a["local_bits"].as_f64().unwrap_or(-1.0), b["local_bits"].as_f64().unwrap_or(-1.0));
            a.total_cmp(&b).then(std::cmp::Ordering::Greater)
        })
        .unwrap();
    assert!(["sqrt", "*"].contains(&hottest["label"].as_str().unwrap()), "{hottest}");
    let table = success(&["localerror", "--expr", "log(x + sqrt(x * x + 1))", "--point", "x=1e200"]);
    assert!(table.lines().any(|l| l.trim_start().starts_with("sqrt")), "{table}");

    let o = fpwb(&["localerror", "--expr", "log(x)", "--point", "x=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn translate_and_rules() {
    let out = success(&["translate", "--to", "fpcore", "log(x + sqrt(x*x+1))"]);
    assert_eq!(out.trim(), "(FPCore (x) (log (+ x (sqrt (+ (* x x) 1)))))");
    let out = success(&["translate", "--to", "fpcore", "--range", "x=0:1e308", "sqrt(x)"]);
    assert_eq!(out.trim(), "(FPCore (x) :pre (<= 0 x 1e308) (sqrt x))");
    let out = success(&["translate", "--from", "fpcore", "--to", "latex", "(FPCore (x) (sqrt (+ (* x x) 1)))"]);
    assert_eq!(out.trim(), "\\sqrt{x \\cdot x + 1}");

    let rules = success(&["rules"]);
    assert!(rules.starts_with("| name |"));
    assert!(rules.contains("hypot-intro"));
    let json: Value = serde_json::from_str(&success(&["rules", "--json"])).unwrap();
    assert!(json.as_array().unwrap().len() >= 40);
}
