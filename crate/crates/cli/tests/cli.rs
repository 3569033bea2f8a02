use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn rectify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rectify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn run(name: &str, dir: &Path) -> Output {
    rectify(&[
        "run",
        "--config",
        config(name).to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn so3_run_passes_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("so3_pair5.json", dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout_json(&out);
    assert_eq!(report["pass"], true);
    assert_eq!(report["all_q_certified"], true);
    assert!(report["final_defect"].as_f64().unwrap() <= 1e-12);

    let saved: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows = trace.lines().count();
    assert_eq!(
        rows,
        report["iterations"].as_u64().unwrap() as usize + 2,
        "{trace}"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run("u1_onestep.json", a.path());
    run("u1_onestep.json", b.path());
    for file in ["trace.csv", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn u1_run_converges_in_one_step_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("u1_onestep.json", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["iterations"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trivial homomorphism substituted"));
}

#[test]
fn oversized_defect_exits_with_precondition_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("defect_too_large.json", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["error"]["kind"], "defect_too_large");
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn malformed_config_exits_with_precondition_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"name": "x", "unknown": 1}"#).unwrap();
    let out = rectify(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_accepts_shipped_config_and_rejects_bad_core() {
    let out = rectify(&[
        "validate",
        "--config",
        config("so3_pair5.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("units.json");
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(config("so3_pair5.json")).unwrap()).unwrap();
    cfg["core"] = serde_json::json!({"subset": [0, 1]});
    fs::write(&path, cfg.to_string()).unwrap();
    let out = rectify(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert!(
        report["core_error"].as_str().unwrap().contains("Lie type"),
        "{report}"
    );
}

#[test]
fn constants_revalidate() {
    let out = rectify(&["constants", "--group", "su2", "--samples", "5000"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["revalidation_passed"], true);
    assert!(v["admissible_radius"].as_f64().unwrap() > 0.0);

    let out = rectify(&["constants", "--group", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_holo_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = rectify(&[
        "bench-holo",
        "--config",
        config("holo_bench.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let saved: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("holo_report.json")).unwrap())
            .unwrap();
    assert_eq!(saved["pass"], true);
    assert!(saved["cr_order"].as_f64().unwrap() >= 1.9);
}
