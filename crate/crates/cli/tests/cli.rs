//! End-to-end checks of the mission binary: exit codes and file outputs.

use std::path::PathBuf;
use std::process::Command;

fn mission() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mission"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mission-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

#[test]
fn run_then_replay_round_trips() {
    let dir = temp_dir("run");
    let log = dir.join("mission.log");
    let out = mission()
        .args(["run", "--seed", "7", "--strategy", "random", "--t0", "150"])
        .arg("--out")
        .arg(&log)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("score="));

    let replay = mission().arg("replay").arg(&log).output().expect("binary runs");
    assert!(replay.status.success());
    assert!(String::from_utf8_lossy(&replay.stdout).starts_with("ok:"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_writes_both_csv_files_deterministically() {
    let dir = temp_dir("sweep");
    let csv = dir.join("scores.csv");
    let args = |csv: &PathBuf| {
        vec![
            "sweep".to_string(),
            "--t0-list".into(),
            "100".into(),
            "--trials".into(),
            "2".into(),
            "--strategies".into(),
            "random".into(),
            "--base-seed".into(),
            "3".into(),
            "--out".into(),
            csv.display().to_string(),
        ]
    };
    let out = mission().args(args(&csv)).output().expect("binary runs");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(&csv).expect("csv written");
    assert!(first.starts_with("strategy,t0,seed,score,runtime_ms\n"));
    assert_eq!(first.lines().count(), 3);
    assert!(dir.join("scores.agg.csv").exists());

    let again = mission().args(args(&csv)).output().expect("binary runs");
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(&csv).expect("csv written"), first);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_inputs_use_exit_code_two() {
    let out = mission()
        .args(["run", "--seed", "1", "--strategy", "warp", "--t0", "100"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));

    let out = mission().args(["replay", "/no/such/file"]).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_log_fails_replay_with_exit_code_one() {
    let dir = temp_dir("bad-replay");
    let log = dir.join("mission.log");
    mission()
        .args(["run", "--seed", "3", "--strategy", "cover-pickup", "--t0", "250"])
        .arg("--out")
        .arg(&log)
        .output()
        .expect("binary runs");
    let text = std::fs::read_to_string(&log).expect("log written");
    let claim = text
        .lines()
        .find(|l| l.split_whitespace().nth(1) == Some("claim"))
        .expect("a claim exists")
        .to_string();
    std::fs::write(&log, text.replacen(&claim, &format!("{claim}\n{claim}"), 1)).expect("rewrite");
    let out = mission().arg("replay").arg(&log).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(1), "duplicate claim must be an invariant violation");
    std::fs::remove_dir_all(&dir).ok();
}
