use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use hypfill::capacity::{query_anchors, wcap_shortest_length, CapacityQuery};
use hypfill::experiment::{CSV_SCHEMA, PRESETS};
use hypfill::filling::{build_filling, AnchorMode};
use hypfill::metric::{build_square, Region};
use serde_json::Value;

fn hypfill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypfill")).args(args).output().unwrap()
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn list_shows_every_preset() {
    let o = hypfill(&["list-scenarios"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for (name, _, _) in PRESETS {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn malformed_config_exits_two_without_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "name = bad\npipeline = wcap\nspace = square:50\ndepths = 5,4\n").unwrap();
    let out = tmp.path().join("reports");
    let o = hypfill(&["run", cfg.to_str().unwrap(), "--out", out_dir(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_preset_is_a_config_error() {
    let o = hypfill(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn written_certificates_reverify() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let o = hypfill(&["run", "square-wcap", "--depth", "3", "--out", out_dir(out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("square-wcap.csv")).unwrap();
    assert!(csv.starts_with(CSV_SCHEMA));
    assert_eq!(csv.lines().count(), 3);
    let detail: Value = serde_json::from_str(&std::fs::read_to_string(out.join("square-wcap.json")).unwrap()).unwrap();
    let cert: Vec<f64> = detail["rows"][0]["detail"]["certificate"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let space = Arc::new(build_square(50).unwrap());
    let f = build_filling(&space, 2.0, 3).unwrap();
    let q = CapacityQuery::new(
        Region::StripX { lo: 0.0, hi: 0.25 },
        Region::StripX { lo: 0.75, hi: 1.0 },
        AnchorMode::Center,
        2.0,
        3,
    );
    let (a, b) = query_anchors(&f, &q).unwrap();
    assert!(wcap_shortest_length(&f, 3, &a, &b, &cert).unwrap() >= 1.0 - 1e-6);
}

#[test]
fn compare_flags_depth_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let (d3, d4) = (tmp.path().join("d3"), tmp.path().join("d4"));
    for (depth, dir) in [("3", &d3), ("4", &d4)] {
        assert!(hypfill(&["run", "square-wcap", "--depth", depth, "--out", out_dir(dir)]).status.success());
    }
    let (a, b) = (d3.join("square-wcap.csv"), d4.join("square-wcap.csv"));
    let same = hypfill(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    let same = String::from_utf8(same.stdout).unwrap();
    assert_eq!(same.lines().count(), 2);
    assert!(same.ends_with("# unmatched rows: 0; stable: true\n"));
    let diff = hypfill(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--slack", "1.5"]);
    assert!(diff.status.success());
    assert_eq!(String::from_utf8(diff.stdout).unwrap().lines().count(), 3);
}

#[test]
fn compare_rejects_foreign_files() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("x.csv");
    std::fs::write(&f, "a,b\n1,2\n").unwrap();
    let o = hypfill(&["compare", f.to_str().unwrap(), f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("schema"));
}
