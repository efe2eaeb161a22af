use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use aiit_harness::output::{CSV_FILES, MANIFEST};

fn aiit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aiit"))
        .args(args)
        .env_remove("AIIT_OUT_DIR")
        .output()
        .expect("spawn aiit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
  "target": {"p": 6, "theta": 1.0, "modes": "alternating"},
  "ladders": [
    {"label": "A-IIT", "betas": [1.0, 0.5], "kind": "A_IIT", "L0": 20},
    {"label": "RF-MH", "betas": [1.0, 0.5], "kind": "RF_MH", "iters_between_swaps": 1}
  ],
  "rounds": 50
}"#;

#[test]
fn fixtures_are_listed() {
    let o = aiit(&["fixtures"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7, "{text}");
    let scaled = lines.iter().find(|l| l.starts_with("scaled200")).unwrap();
    assert!(scaled.contains("[desk]"), "{scaled}");
    let high = lines.iter().find(|l| l.starts_with("highdim3000")).unwrap();
    assert!(high.contains("[full, long-running]"), "{high}");

    let o = aiit(&["fixtures", "highdim3000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("19517"));
    let o = aiit(&["fixtures", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn smoke_run_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let start = Instant::now();
    let o = aiit(&[
        "run",
        "--fixture",
        "bimodal16",
        "--seeds",
        "1",
        "--rounds",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in CSV_FILES.iter().chain([&MANIFEST]) {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    let mut lines = runs.lines();
    assert!(lines.next().unwrap().starts_with("seed,algorithm,replicas,"));
    assert_eq!(lines.count(), 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([1]));
    assert_eq!(manifest["ladders"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_aiit"))
        .args(["run", "--config", &cfg])
        .env("AIIT_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("hits.csv").is_file());

    let o = aiit(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("AIIT_OUT_DIR"));
}

#[test]
fn seed_list_and_swaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = dir.path().join("o");
    let o = aiit(&[
        "run",
        "--config",
        &cfg,
        "--seed-list",
        "7,3",
        "--record-swaps",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    let seeds: Vec<&str> = runs.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["7", "7", "3", "3"]);
    let swaps = std::fs::read_to_string(out.join("swaps.csv")).unwrap();
    // two replicas: the only pair is even, so it is tried every other round
    assert_eq!(swaps.lines().count(), 1 + 4 * 25);
}

#[test]
fn missing_field_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &SMALL.replace("\"theta\": 1.0, ", ""));
    let o = aiit(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("theta"), "{err}");
    assert!(err.contains("bad.json:2:"), "{err}");
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &SMALL.replace("\"rounds\": 50", "\"rounds\": 50, \"round\": 1"));
    let o = aiit(&["oracle", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn oracle_reports_every_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let o = aiit(&["oracle", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7, "{text}");
    for l in lines {
        let tvd: f64 = l.split("tvd").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
        assert!(tvd <= 1e-10, "{l}");
        assert!(l.ends_with("ok"));
    }
}

#[test]
fn oracle_refuses_large_targets() {
    let o = aiit(&["oracle", "--fixture", "bimodal16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn source_is_required() {
    let o = aiit(&["run"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aiit(&["run", "--config", "a.json", "--fixture", "bimodal16"]);
    assert_eq!(o.status.code(), Some(2));
}
