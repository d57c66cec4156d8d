//! End-to-end checks of the `osp` binary: exit codes, stream separation,
//! trace verbosity filtering, and golden comparison.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn osp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osp"))
        .args(args)
        .output()
        .expect("spawn osp binary")
}

fn temp_program(name: &str, content: &str) -> PathBuf {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, content).expect("write temp program");
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

#[test]
fn run_reports_on_stdout_and_exits_zero() {
    let out = osp(&["run", corpus("hello.osp").to_str().unwrap(), "--trace", "quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "\"hello, world\"\n");
    assert_eq!(stderr(&out), "");
}

#[test]
fn trace_levels_filter_ability_lines() {
    let path = corpus("hello.osp");
    let full = stdout(&osp(&["run", path.to_str().unwrap(), "--trace", "full"]));
    let events = stdout(&osp(&["run", path.to_str().unwrap(), "--trace", "events"]));
    assert!(full.contains(" ability "), "full shows ability lines:\n{full}");
    assert!(!events.contains(" ability "), "events hides ability lines:\n{events}");
    assert!(events.contains(" report "), "events keeps report lines:\n{events}");
    assert!(events.contains(" spawn "), "events keeps lifecycle lines:\n{events}");
}

#[test]
fn missing_file_exits_two() {
    let out = osp(&["run", "no-such-file.osp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"), "stderr: {}", stderr(&out));

    let out = osp(&["check", "no-such-file.osp"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn syntax_error_exits_one_with_position() {
    let path = temp_program("osp-cli-syntax.osp", "node Gate {\n  has open bool;\n}\n");
    let out = osp(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("2:"), "position on stderr: {err}");
    assert!(err.contains("error"), "labelled as an error: {err}");
    assert_eq!(stdout(&out), "", "nothing ran, nothing on stdout");
}

#[test]
fn check_reports_static_errors_and_passes_clean_corpus() {
    let bad = temp_program(
        "osp-cli-static.osp",
        "node Gate {}\nwalker W {\n  can f with Gate entry {\n    report visitor;\n  }\n}\n",
    );
    let out = osp(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("visitor"), "stderr: {}", stderr(&out));

    for file in ["hello.osp", "social_media.osp", "fsm.osp", "paths.osp"] {
        let out = osp(&["check", corpus(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{file} should check clean");
    }
}

#[test]
fn budget_abort_exits_three_with_partial_trace() {
    let path = corpus("cycle.osp");
    let out = osp(&["run", path.to_str().unwrap(), "--budget", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("budget"), "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains(" error "),
        "partial trace ends with the error event:\n{}",
        stdout(&out)
    );
}

#[test]
fn golden_comparison_matches_and_mismatches() {
    let path = corpus("hello.osp");
    let ok = osp(&[
        "run",
        path.to_str().unwrap(),
        "--trace",
        "quiet",
        "--golden",
        golden("hello.quiet.txt").to_str().unwrap(),
    ]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = osp(&[
        "run",
        path.to_str().unwrap(),
        "--trace",
        "quiet",
        "--golden",
        golden("social_media.trace.txt").to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("golden"), "stderr: {}", stderr(&bad));
}

#[test]
fn dump_prints_snapshot_only() {
    let out = osp(&["dump", corpus("empty.osp").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "", "empty driver leaves an empty snapshot");

    let out = osp(&[
        "dump",
        corpus("social_media.osp").to_str().unwrap(),
        "--golden",
        golden("social_media.snapshot.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("NODE 1 Profile"), "snapshot only:\n{text}");
}

#[test]
fn dump_after_runtime_error_suppresses_snapshot() {
    let path = temp_program("osp-cli-divzero.osp", "report 1 / 0;\n");
    let out = osp(&["dump", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out), "", "partial snapshot suppressed");
    assert!(
        stderr(&out).contains("division by zero"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn run_with_dump_appends_snapshot_after_trace() {
    let out = osp(&[
        "run",
        corpus("hello.osp").to_str().unwrap(),
        "--trace",
        "quiet",
        "--dump",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.starts_with("\"hello, world\"\n"),
        "reports precede the snapshot:\n{text}"
    );
    assert!(text.contains("NODE 1 Place"), "snapshot appended:\n{text}");
    assert!(text.contains("WALKER 2 Greeter"), "snapshot appended:\n{text}");
}

#[test]
fn budget_flag_rejects_zero() {
    let out = osp(&["run", corpus("hello.osp").to_str().unwrap(), "--budget", "0"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("0"), "clap rejects the value: {}", stderr(&out));
}
