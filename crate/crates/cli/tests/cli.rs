use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ebc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebc")).current_dir(dir).env_remove("EBC_SEED").args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn static_run_is_byte_identical_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["static-run", "--n", "150", "--replicates", "20", "--functional", "extlength", "--seed", "42"];
    ok(&ebc(dir.path(), &[&args[..], &["--out", "a.csv"]].concat()));
    ok(&ebc(dir.path(), &[&args[..], &["--out", "b.csv"]].concat()));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# ebc "));
    assert_eq!(text.lines().nth(1).unwrap(), "seed,replicate,n,alpha,tau,L,L2prime,ell,J_f");
    assert_eq!(text.lines().count(), 22);
    let schema: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.csv.schema.json")).unwrap()).unwrap();
    assert_eq!(schema["columns"].as_array().unwrap().len(), 9);
    assert!(text.contains(schema["config_hash"].as_str().unwrap()));
}

#[test]
fn config_file_layers_under_flags_and_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "[run]\nn = 30\nreplicates = 2\nseed = 5\n").unwrap();
    let from_file = ok(&ebc(dir.path(), &["static-run", "--config", "run.cfg"]));
    assert!(from_file.lines().nth(2).unwrap().starts_with("5,0,30,"));
    let flag = ok(&ebc(dir.path(), &["static-run", "--config", "run.cfg", "--n", "40"]));
    assert!(flag.lines().nth(2).unwrap().starts_with("5,0,40,"));
    let env = Command::new(env!("CARGO_BIN_EXE_ebc"))
        .current_dir(dir.path())
        .env("EBC_SEED", "77")
        .args(["static-run", "--config", "run.cfg"])
        .output()
        .unwrap();
    assert!(ok(&env).lines().nth(2).unwrap().starts_with("77,0,30,"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebc(dir.path(), &["static-run", "--alpha", "1.7", "--functional", "length"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config field 'functional'"));
    let out = ebc(dir.path(), &["static-run", "--n", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config field 'n'"));
}

#[test]
fn persisted_logs_replay_exactly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ebc(dir.path(), &["evolve-run", "--n", "80", "--replicates", "2", "--times", "0,1", "--save-log", "log.bin", "--plot", "p.svg"]));
    ok(&ebc(dir.path(), &["replay", "--log", "log.bin", "--times", "0,1", "--out", "again.json"]));
    let first = std::fs::read(dir.path().join("log.bin.traces.json")).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("again.json")).unwrap());
    assert!(std::fs::read_to_string(dir.path().join("p.svg")).unwrap().contains("<polyline"));

    let outside = ebc(dir.path(), &["replay", "--log", "log.bin", "--times", "50"]);
    assert_eq!(outside.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&outside.stderr).contains("outside the persisted window"));

    let bytes = std::fs::read(dir.path().join("log.bin")).unwrap();
    std::fs::write(dir.path().join("cut.bin"), &bytes[..bytes.len() - 3]).unwrap();
    let cut = ebc(dir.path(), &["replay", "--log", "cut.bin", "--out", "none.json"]);
    assert_eq!(cut.status.code(), Some(2));
    assert!(!dir.path().join("none.json").exists());
}

#[test]
fn limit_cf_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let doc: Value = serde_json::from_str(&ok(&ebc(dir.path(), &["limit-cf", "--theta", "-1,0,1"]))).unwrap();
    let r = &doc["result"];
    assert_eq!(r["theta"].as_array().unwrap().len(), 3);
    assert_eq!(r["re"][1].as_f64(), Some(1.0));
    assert!((r["im"][0].as_f64().unwrap() + r["im"][2].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn limit_run_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ebc(dir.path(), &["limit-run", "--replicates", "300", "--eps", "0.05", "--out", "lim.csv"]));
    let out = ebc(dir.path(), &["verify", "--input", "lim.csv", "--column", "J@0", "--reference", "5000", "--qq", "qq.svg"]);
    let doc: Value = serde_json::from_str(&ok(&out)).unwrap();
    assert_eq!(doc["result"]["pass"], Value::Bool(true));
    assert!(dir.path().join("qq.svg").exists());
}

#[test]
fn smoke_suite_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let doc: Value = serde_json::from_str(&ok(&ebc(dir.path(), &["suite", "--suite", "smoke"]))).unwrap();
    assert_eq!(doc["result"]["pass"], Value::Bool(true));
    assert!(start.elapsed().as_secs_f64() < 10.0);
}
