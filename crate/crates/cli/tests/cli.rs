use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netbell::presets;

fn netbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netbell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn extend_matches_presets() {
    let dir = tempfile::tempdir().unwrap();
    let biloc = path(dir.path(), "biloc.json");
    let triloc = path(dir.path(), "triloc.json");
    let out = netbell(&["extend", "--preset", "chsh", "--anchor", "A2", "--plus", "0", "--minus", "1", "--out", &biloc]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("+ party A3"));
    let out = netbell(&["extend", "--in", &biloc, "--anchor", "A3", "--plus", "0", "--minus", "1", "--out", &triloc]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(&biloc).unwrap().trim_end(),
        presets::bilocal().to_json()
    );
    assert_eq!(
        fs::read_to_string(&triloc).unwrap().trim_end(),
        presets::trilocal().to_json()
    );

    let out = netbell(&["extend", "--preset", "i3322", "--anchor", "A2", "--plus", "0", "--minus", "1,2"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim_end(),
        presets::i3322_bilocal().to_json()
    );
}

#[test]
fn evaluate_bilocal_tables() {
    let dir = tempfile::tempdir().unwrap();
    for (v, violated) in [("0.6", true), ("0.4", false)] {
        let table = path(dir.path(), &format!("t{v}.json"));
        let vis = format!("{v},1");
        assert!(netbell(&["quantum-table", "--preset", "bilocal", "--vis", &vis, "--out", &table])
            .status
            .success());
        let out = netbell(&["evaluate", "--preset", "bilocal", "--table", &table]);
        assert!(out.status.success());
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["violated"], violated);
        let expected = 2.0 * v.parse::<f64>().unwrap();
        assert!((r["min_lhs"].as_f64().unwrap() - expected).abs() < 1e-12);
        assert!(!r["trace"].as_array().unwrap().is_empty());
    }
}

#[test]
fn evaluate_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "zero.json");
    // white noise on both sources
    assert!(netbell(&["quantum-table", "--preset", "bilocal", "--vis", "0,0", "--out", &table])
        .status
        .success());
    let out = netbell(&["evaluate", "--preset", "bilocal", "--table", &table]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["min_lhs"].as_f64().unwrap().abs() < 1e-15);
    assert_eq!(r["violated"], false);
}

#[test]
fn evaluate_rejects_other_network() {
    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "t.json");
    let out = path(dir.path(), "r.json");
    netbell(&["quantum-table", "--preset", "bilocal", "--vis", "1,1", "--out", &table]);
    let o = netbell(&["evaluate", "--preset", "trilocal", "--table", &table, "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(&out).exists());
}

#[test]
fn scan_presets() {
    for (name, v) in [("bilocal", 0.5), ("chain5", 2f64.powf(-2.5)), ("mermin_net", 0.5 / 2f64.sqrt())] {
        let out = netbell(&["scan", "--preset", name]);
        assert!(out.status.success(), "{name}");
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!((r["critical_v"].as_f64().unwrap() - v).abs() < 1e-6, "{name}");
    }
    let out = netbell(&["scan", "--preset", "bilocal", "--range", "0.6,0.9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = netbell(&["verify", "--preset", "star3", "--seed", "3", "--samples", "2000"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["verified"], true);

    let mut raw: serde_json::Value = serde_json::from_str(&presets::bilocal().to_json()).unwrap();
    raw["bound"] = serde_json::json!(0.5);
    let bad = path(dir.path(), "bad.json");
    fs::write(&bad, raw.to_string()).unwrap();
    let verdict = path(dir.path(), "verdict.json");
    let out = netbell(&["verify", "--in", &bad, "--seed", "3", "--samples", "10", "--out", &verdict]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(v["verified"], false);
    assert!(v["counterexample"]["model"].is_object());
    assert!(v["counterexample"]["evaluation"]["trace"].is_array());

    let out = netbell(&["verify", "--preset", "trilocal", "--seed", "1", "--no-dedup"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    // sampling needs a seed
    assert_eq!(netbell(&["verify", "--preset", "bilocal"]).status.code(), Some(1));
    assert_eq!(netbell(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(netbell(&["--help"]).status.code(), Some(0));

    let junk = path(dir.path(), "junk.json");
    fs::write(&junk, "{\"network\": 3}").unwrap();
    let out = path(dir.path(), "out.json");
    let o = netbell(&["extend", "--in", &junk, "--anchor", "A1", "--plus", "0", "--minus", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(&out).exists());
    let o = netbell(&["evaluate", "--preset", "bilocal", "--table", &path(dir.path(), "missing.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(netbell(&["extend", "--preset", "nope", "--anchor", "A1", "--plus", "0", "--minus", "1"]).status.code(), Some(1));
}

#[test]
fn w_eval() {
    let out = netbell(&["w-eval", "--ijkl", "0.25,0.25,0.25,-0.25"]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["w"].as_f64().unwrap() + 0.75).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "t.json");
    netbell(&["quantum-table", "--preset", "trilocal", "--vis", "0.5,1,1", "--out", &table]);
    let out = netbell(&["w-eval", "--table", &table]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let v: f64 = 0.5;
    let expected = 3.0 * v.powi(4) * (1.0 - 2f64.powf(1.5) * v);
    assert!((r["w"].as_f64().unwrap() - expected).abs() < 1e-12 * expected.abs().max(1.0));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["verify", "--preset", "mermin_net", "--seed", "9", "--samples", "3000"],
        &["scan", "--preset", "trilocal"],
        &["quantum-table", "--preset", "mermin_net", "--vis", "0.7,0.9", "--csv"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let a = path(dir.path(), &format!("{i}a"));
        let b = path(dir.path(), &format!("{i}b"));
        for p in [&a, &b] {
            let mut full = args.to_vec();
            full.extend(["--out", p.as_str()]);
            assert!(netbell(&full).status.success());
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{args:?}");
    }
}
