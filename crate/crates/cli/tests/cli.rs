use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// Speed of the translating solution on the flat unit disk with `phi = 0.2`,
/// from the radial shooting oracle.
const ORACLE_C3_DISK_02: f64 = -0.3960906859;

fn smcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smcf")).args(args).output().expect("binary runs")
}

fn smcf_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smcf")).args(args).env(key, value).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn scenario(dir: &Path, name: &str, phi: &str, n: usize) -> PathBuf {
    let text = format!(
        r#"{{
  "label": "{name}",
  "metric": {{"id": "flat"}},
  "domain": {{"kind": "disk", "radius": 1.0}},
  "phi": {phi},
  "grid": {{"n_radial": {n}, "n_angular": {}}}
}}"#,
        2 * n
    );
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, text).unwrap();
    path
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn flow_without_contact_angle_converges_and_lists_its_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "zero", r#"{"kind": "constant", "value": 0.0}"#, 16);
    let out = tmp.path().join("run");
    let o = smcf(&["flow", s(&cfg), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["status"], "converged");
    let hash = m["scenario_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    for f in m["outputs"].as_array().unwrap() {
        let text = fs::read_to_string(out.join(f["path"].as_str().unwrap())).unwrap();
        if f["path"].as_str().unwrap().ends_with(".csv") {
            assert!(text.starts_with(&format!("# scenario_sha256={hash} units=")));
        }
    }
    assert!(m["diagnostics"]["speed_estimate"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn flow_speed_on_the_disk_matches_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let out = tmp.path().join("run");
    assert_eq!(code(&smcf(&["flow", s(&cfg), "-o", s(&out)])), 0);
    let speed = manifest(&out)["diagnostics"]["speed_estimate"].as_f64().unwrap();
    // 16x32 grid: discretization error about 7e-6
    assert!((speed - ORACLE_C3_DISK_02).abs() < 1e-4, "{speed}");
}

#[test]
fn nonconvex_domain_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"metric": {"id": "flat"},
            "domain": {"kind": "fourier", "radius": 1.0, "amplitude": 0.3, "mode": 3},
            "phi": {"kind": "constant", "value": 0.2},
            "grid": {"n_radial": 16, "n_angular": 32}}"#,
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = smcf(&["flow", s(&cfg), "-o", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not strictly convex"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn translator_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("zero", r#"{"kind": "constant", "value": 0.0}"#),
        ("disk", r#"{"kind": "constant", "value": 0.2}"#),
        ("cos", r#"{"kind": "fourier", "cos": [1.0]}"#),
    ];
    let mut c3 = Vec::new();
    for (name, phi) in cases {
        let cfg = scenario(tmp.path(), name, phi, 16);
        let out = tmp.path().join(name);
        let o = smcf(&["translator", s(&cfg), "-o", s(&out)]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let rec: Value = serde_json::from_str(&fs::read_to_string(out.join("translator.json")).unwrap()).unwrap();
        assert_eq!(rec["grid"]["n_radial"], 16);
        assert!(!rec["eps_trace"].as_array().unwrap().is_empty());
        c3.push(rec["c3"].as_f64().unwrap());
    }
    assert_eq!(c3[0], 0.0);
    assert!((c3[1] - ORACLE_C3_DISK_02).abs() < 1e-4, "{}", c3[1]);
    assert!(c3[2].abs() < 1e-10, "{}", c3[2]);
}

#[test]
fn outputs_are_deterministic_and_the_echoed_config_reruns_to_the_same_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(code(&smcf(&["flow", s(&cfg), "-o", s(&a)])), 0);
    assert_eq!(code(&smcf(&["flow", s(&cfg), "-o", s(&b)])), 0);
    let m = manifest(&a);
    let echoed = tmp.path().join("echo.json");
    fs::write(&echoed, serde_json::to_string_pretty(&m["scenario"]).unwrap()).unwrap();
    assert_eq!(code(&smcf(&["flow", s(&echoed), "-o", s(&c)])), 0);
    assert_eq!(manifest(&c)["scenario_hash"], m["scenario_hash"]);
    for f in ["series.csv", "final.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn verify_passes_clean_runs_and_fails_tampered_or_missing_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let (flow, tr) = (tmp.path().join("flow"), tmp.path().join("tr"));
    assert_eq!(code(&smcf(&["flow", s(&cfg), "-o", s(&flow)])), 0);
    assert_eq!(code(&smcf(&["translator", s(&cfg), "-o", s(&tr)])), 0);
    let report = tmp.path().join("report");
    let o = smcf(&["verify", s(&flow), s(&tr), "-o", s(&report)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("translator_agreement"));
    let r: Value = serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    // push one |Du|^2 entry to the light cone
    let series = flow.join("series.csv");
    let text = fs::read_to_string(&series).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[4].split(',').map(str::to_string).collect();
    cells[3] = "0.9999".into();
    lines[4] = cells.join(",");
    fs::write(&series, lines.join("\n") + "\n").unwrap();
    let o = smcf(&["verify", s(&flow)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("spacelike_bound"));

    fs::remove_file(flow.join("final.csv")).unwrap();
    assert_eq!(code(&smcf(&["verify", s(&flow)])), 2);
    assert_eq!(code(&smcf(&["verify", s(&tmp.path().join("nowhere"))])), 2);
}

#[test]
fn grid_sweep_writes_an_order_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let out = tmp.path().join("sweep");
    let o = smcf_env(&["sweep", s(&cfg), "--grid", "n=16,32,64", "-o", s(&out)], "SMCF_WORKERS", "2");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let order = fs::read_to_string(out.join("order.csv")).unwrap();
    let last: Vec<f64> = order.lines().last().unwrap().split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect();
    assert!((last[2] - 2.0).abs() < 0.3, "observed order {}", last[2]);
    assert!(out.join("point_002/translator/manifest.json").exists());
}

#[test]
fn amplitude_sweep_gives_speeds_growing_with_the_angle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let out = tmp.path().join("sweep");
    let o = smcf(&["sweep", s(&cfg), "--grid", "phi_scale=0:1:3", "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let c3: Vec<f64> = summary.lines().skip(2).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(c3.len(), 3);
    assert_eq!(c3[0], 0.0);
    assert!(c3[1] < 0.0 && c3[2] < c3[1]);
    assert!(!out.join("order.csv").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "disk", r#"{"kind": "constant", "value": 0.2}"#, 16);
    let out = tmp.path().join("sweep");
    assert_eq!(code(&smcf(&["sweep", s(&cfg), "--grid", "n=", "-o", s(&out)])), 2);
    assert_eq!(code(&smcf(&["sweep", s(&cfg), "-o", s(&out)])), 2);
    assert_eq!(code(&smcf(&["frobnicate"])), 2);
    assert_eq!(code(&smcf(&["flow", s(&cfg)])), 2);
    assert_eq!(code(&smcf_env(&["sweep", s(&cfg), "--grid", "n=16", "-o", s(&out)], "SMCF_WORKERS", "many")), 2);
}
