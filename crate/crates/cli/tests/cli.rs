use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const LEWIS: &str = r#"{
  "game": {"kind": "lewis", "vocab": ["a", "b", "c"], "max_msg_len": 1, "horizon": 1, "gamma": 1.0,
           "reward_params": {"correct_pick": 1.0}, "layout": {"candidates": ["x", "y", "z"], "target": 0}},
  "community": {"epsilon": 0.0, "temp_msg": "zero"},
  "run": {"n_episodes": 200, "out": "out"}
}"#;

fn cla(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cla"))
        .args(args)
        .current_dir(dir)
        .env_remove("CLA_CONFIG")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cla(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), LEWIS).unwrap();
    dir
}

#[test]
fn collect_is_byte_identical_across_runs() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["collect", "--config", "c.json", "--n", "100", "--seed", "7", "--out", "a", "--canonical"]);
    ok(d, &["collect", "--config", "c.json", "--n", "100", "--seed", "7", "--out", "b", "--canonical"]);
    let a = fs::read(d.join("a/dataset.jsonl")).unwrap();
    assert_eq!(a, fs::read(d.join("b/dataset.jsonl")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 101);

    // outside canonical mode the header carries a timestamp
    ok(d, &["collect", "--config", "c.json", "--n", "5", "--out", "t"]);
    let header = fs::read_to_string(d.join("t/dataset.jsonl")).unwrap();
    assert!(!header.lines().next().unwrap().contains("\"created_unix\":null"));
}

#[test]
fn noiseless_pipeline_recovers_everything() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["gen-community", "--config", "c.json"]);
    ok(d, &["collect", "--config", "c.json", "--canonical"]);
    ok(d, &["fit-broca", "--config", "c.json"]);
    ok(d, &["fit-wernicke", "--config", "c.json", "--alpha", "1000"]);
    ok(d, &["eval-listener", "--config", "c.json", "--n", "300"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["recovery_rate"], 1.0);
    let csv = fs::read_to_string(d.join("out/report.csv")).unwrap();
    assert!(csv.starts_with("kind,n,recovery_rate,"));
    ok(d, &["eval-speaker", "--config", "c.json", "--n", "300"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["success_rate"], 1.0);
    let line = ok(d, &["detect", "--config", "c.json"]);
    assert!(line.contains("listening detected=true"));
    for name in ["community.json", "dataset.jsonl", "broca.json", "wernicke.json", "report.json", "report.csv"] {
        assert!(d.join("out").join(name).exists(), "{name}");
    }
}

#[test]
fn every_artifact_is_reproducible() {
    let dir = setup();
    let d = dir.path();
    let run = |out: &str| {
        for cmd in ["gen-community", "collect", "fit-broca", "fit-wernicke", "eval-listener"] {
            ok(d, &[cmd, "--config", "c.json", "--out", out, "--canonical", "--seed", "3"]);
        }
    };
    run("x");
    run("y");
    for name in ["community.json", "dataset.jsonl", "broca.json", "wernicke.json", "report.json", "report.csv"] {
        assert_eq!(fs::read(d.join("x").join(name)).unwrap(), fs::read(d.join("y").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn oracle_check_reports_counts() {
    let dir = setup();
    let line = ok(dir.path(), &["oracle-check", "--config", "c.json", "--n", "40"]);
    assert_eq!(line.trim(), "oracle-check passed=120 failed=0");
}

#[test]
fn failures_map_to_documented_exit_codes() {
    let dir = setup();
    let d = dir.path();
    let unknown = cla(d, &["frobnicate", "--config", "c.json"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    assert_eq!(cla(d, &["collect"]).status.code(), Some(3));
    assert_eq!(cla(d, &["collect", "--config", "missing.json"]).status.code(), Some(3));
    fs::write(d.join("bad.json"), r#"{"game": 3}"#).unwrap();
    assert_eq!(cla(d, &["collect", "--config", "bad.json"]).status.code(), Some(3));

    // no dataset yet
    assert_eq!(cla(d, &["fit-broca", "--config", "c.json"]).status.code(), Some(4));

    ok(d, &["collect", "--config", "c.json"]);
    let other = LEWIS.replace(r#""target": 0"#, r#""target": 1"#);
    fs::write(d.join("other.json"), other).unwrap();
    assert_eq!(cla(d, &["fit-broca", "--config", "other.json"]).status.code(), Some(5));

    assert_eq!(cla(d, &["collect", "--config", "c.json", "--n", "0"]).status.code(), Some(6));
    assert_eq!(cla(d, &["fit-wernicke", "--config", "c.json", "--alpha=-1"]).status.code(), Some(6));
}

#[test]
fn config_comes_from_the_environment() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_cla"))
        .args(["collect", "--n", "3", "--canonical"])
        .current_dir(dir.path())
        .env("CLA_CONFIG", "c.json")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("out/dataset.jsonl").exists());
}

#[test]
fn help_lists_every_flag_and_exit_code() {
    let dir = setup();
    let help = ok(dir.path(), &["--help"]);
    for flag in ["--config", "--seed", "--n", "--alpha", "--out", "--canonical", "CLA_CONFIG"] {
        assert!(help.contains(flag), "{flag}");
    }
    for code in ["0  success", "2  usage", "3  config", "4  I/O", "5  artifact", "6  invalid", "7  oracle"] {
        assert!(help.contains(code), "{code}");
    }
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["lewis3.json", "market3.json"] {
        let path = root.join(cfg);
        ok(dir.path(), &["gen-community", "--config", path.to_str().unwrap(), "--out", "o"]);
    }
}
