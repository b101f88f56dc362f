use std::process::Command;

use serde_json::Value;

fn anonq(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_anonq"))
        .args(args)
        .output()
        .expect("binary runs");
    let doc = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    (out.status.code().expect("exit code"), doc)
}

#[test]
fn run_writes_a_replayable_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.txt");
    let (code, doc) = anonq(&[
        "run",
        "--n",
        "4",
        "--s",
        "6",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["status"], "pass");
    assert_eq!(doc["report"]["disposition"], "delivered");
    let (code, doc) = anonq(&["replay", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{doc}");
}

#[test]
fn batch_output_directory_replays_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch");
    let out = out.to_str().unwrap();
    let (code, doc) = anonq(&[
        "batch",
        "--n",
        "4",
        "--s",
        "5",
        "--trials",
        "6",
        "--corrupt",
        "0",
        "--strategy",
        "parity-liar",
        "--out",
        out,
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["report"]["summary"]["trials"], 6);
    assert!(std::path::Path::new(out).join("report.json").exists());
    assert_eq!(anonq(&["replay", out]).0, 0);

    let victim = std::path::Path::new(out).join("trial-000004.txt");
    let text = std::fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines[4].pop().unwrap();
    lines[4].push(if last == '0' { '1' } else { '0' });
    std::fs::write(&victim, lines.join("\n") + "\n").unwrap();
    let (code, doc) = anonq(&["replay", out]);
    assert_eq!(code, 1);
    assert_eq!(doc["status"], "fail");
    assert_eq!(doc["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "n = 4\ns = 6\ncorrupt = [0]\nstrategy = \"abort-forcer:7\"\ntrials = 8\n",
    )
    .unwrap();
    let (code, doc) = anonq(&["--config", cfg.to_str().unwrap(), "fidelity-audit", "--s", "5"]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["report"]["s"], 5);
    assert_eq!(doc["report"]["trials"], 8);
    assert_eq!(doc["report"]["strategy"], "abort-forcer:7");
}

#[test]
fn exact_anonymity_passes() {
    let (code, doc) = anonq(&["anonymity-test", "--exact", "--strategy", "ghz-forger:product"]);
    assert_eq!(code, 0, "{doc}");
    assert!(doc["report"]["max_total_variation"].as_f64().unwrap() < 1e-12);
}

#[test]
fn bad_input_is_an_error_not_a_failure() {
    let (code, doc) = anonq(&["run", "--strategy", "nope"]);
    assert_eq!(code, 2);
    assert_eq!(doc["status"], "error");
    let (code, _) = anonq(&["anonymity-test", "--trials", "10"]);
    assert_eq!(code, 2);
    let (code, _) = anonq(&["run", "--n", "9"]);
    assert_eq!(code, 2);
}
