use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lightray"));
    c.env_remove("LIGHTRAY_OUT_DIR");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn diagnostic(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().unwrap_or("")).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().unwrap_or("")).unwrap_or_else(|_| panic!("not JSON: {text}"))
}

fn simulate(name: &str, dir: &Path, extra: &[&str]) -> Output {
    let sc = scenario(name);
    let mut args = vec!["simulate", "--scenario", s(&sc), "--out", s(dir)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_static_row_count() {
    let dir = TempDir::new().unwrap();
    let out = simulate("static", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    // one row per generator and emission time, plus the header
    assert_eq!(csv.lines().count(), 8 + 1);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"][0]["file"], "events.csv");
    assert!(manifest.get("timings_ms").is_none());
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(simulate("grafted", a.path(), &["--threads", "1"]).status.success());
    assert!(simulate("grafted", b.path(), &["--threads", "4"]).status.success());
    for f in ["events.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn timings_are_opt_in() {
    let dir = TempDir::new().unwrap();
    assert!(simulate("static", dir.path(), &["--timings"]).status.success());
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["timings_ms"]["simulate"].is_number());
}

#[test]
fn elliptic_generator_is_rejected_without_output() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(scenario("static")).unwrap();
    let a1 = "matrix = [\n    [1.0656854249492229e1, -7.5022844019311883e0, -7.5022844019311696e0],\n    \
              [-7.5022844019312060e0, 4.8284271247460984e0, 5.8284271247460850e0],\n    \
              [7.5022844019312069e0, -5.8284271247461037e0, -4.8284271247460921e0],\n]";
    assert!(text.contains(a1));
    let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
    let rotation = format!("matrix = [[1.0, 0.0, 0.0], [0.0, {c:e}, {:e}], [0.0, {sn:e}, {c:e}]]", -sn);
    let bad = dir.path().join("elliptic.toml");
    fs::write(&bad, text.replacen(a1, &rotation, 1)).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", "--scenario", s(&bad), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(4));
    let d = diagnostic(&out);
    assert_eq!(d["kind"], "validation");
    let msg = d["message"].as_str().unwrap();
    assert!(msg.contains("a1") && msg.contains("Elliptic"), "{msg}");
    assert!(!out_dir.join("events.csv").exists());
}

#[test]
fn evolving_with_one_time_is_insufficient() {
    let dir = TempDir::new().unwrap();
    assert!(simulate("offset", dir.path(), &[]).status.success());
    let events = dir.path().join("events.csv");
    let out = run(&["reconstruct", "--events", s(&events), "--mode", "evolving", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(5));
    let d = diagnostic(&out);
    assert_eq!(d["kind"], "insufficient-data");
    assert!(d["message"].as_str().unwrap().contains("two emission times"));
}

#[test]
fn truncated_csv_names_the_line() {
    let dir = TempDir::new().unwrap();
    assert!(simulate("static", dir.path(), &[]).status.success());
    let csv = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    let cut = &csv[..csv.len() - 40];
    let bad = dir.path().join("truncated.csv");
    fs::write(&bad, cut).unwrap();
    let out = run(&["reconstruct", "--events", s(&bad), "--mode", "static", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let msg = diagnostic(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains(&format!("line {}", cut.lines().count())), "{msg}");
}

#[test]
fn static_reconstruction_report() {
    let dir = TempDir::new().unwrap();
    assert!(simulate("static", dir.path(), &[]).status.success());
    let events = dir.path().join("events.csv");
    let out = run(&["reconstruct", "--events", s(&events), "--mode", "static", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["generator_pairings"].as_array().unwrap().len(), 4);
    assert_eq!(report["domain"]["sides"].as_array().unwrap().len(), 8);
    assert!(report["residuals"]["relator_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["residuals"]["passed"], true);
}

#[test]
fn roundtrips_pass() {
    for (name, bound) in [("static", 1e-9), ("offset", 1e-5), ("grafted", 1e-5)] {
        let out = run(&["roundtrip", "--scenario", s(&scenario(name))]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v = stdout_json(&out);
        assert_eq!(v["status"], "pass");
        assert!(v["deviation"].as_f64().unwrap() < bound, "{name}: {v}");
    }
}

#[test]
fn roundtrip_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = run(&["roundtrip", "--scenario", s(&scenario("grafted")), "--out", s(dir.path())]);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mode"], "evolving");
    assert_eq!(report["roundtrip"]["status"], "pass");
    assert!(dir.path().join("events.csv").exists());
}

#[test]
fn seeded_example_is_reproducible_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    assert!(run(&["example", "random", "--seed", "11", "--out", s(&a)]).status.success());
    assert!(run(&["example", "random", "--seed", "11", "--out", s(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let out = run(&["roundtrip", "--scenario", s(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bundled_scenarios_match_the_generator() {
    for name in ["static", "offset", "grafted"] {
        let out = run(&["example", name]);
        assert!(out.status.success());
        assert_eq!(out.stdout, fs::read(scenario(name)).unwrap(), "{name}");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("env-out");
    let out = bin()
        .args(["simulate", "--scenario", s(&scenario("static"))])
        .env("LIGHTRAY_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("events.csv").exists());
}

#[test]
fn usage_and_parse_errors() {
    let out = run(&["simulate", "--scenario", "x.toml", "--tolerance", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "schema_version = 1\ngenus = \n").unwrap();
    let out = run(&["simulate", "--scenario", s(&bad), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(diagnostic(&out)["message"].as_str().unwrap().contains("line 2"));

    let out = run(&["simulate", "--scenario", s(&dir.path().join("missing.toml")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}
