use std::process::Command;

use lumi_core::checker::explore_all;
use lumi_core::format::read_trace;
use lumi_core::FractionSet;

fn lumi(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lumi"))
        .args(args)
        .output()
        .expect("run lumi");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn simulate_fsync_meets_at_the_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let (code, out, _) = lumi(&[
        "simulate",
        "--scheduler",
        "fsync",
        "--positions",
        "0,10",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "RENDEZVOUS @event 1 at (5/1, 0/1)");
    let file = read_trace(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(file.trace.steps.len(), 1);
}

#[test]
fn simulate_reports_bound_and_validation_errors() {
    let (code, out, _) = lumi(&["simulate", "--lights", "BB", "--max-events", "3"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("BOUND d²="), "{out}");

    let (code, _, err) = lumi(&["simulate", "--movement", "non-rigid", "--delta", "0"]);
    assert_eq!(code, 1);
    assert!(err.contains("delta must be positive"), "{err}");

    let (code, _, err) = lumi(&["simulate", "--algorithm", "rendezvous-with-delta", "--movement", "rigid"]);
    assert_eq!(code, 1);
    assert!(err.contains("algorithm:"), "{err}");
}

#[test]
fn simulate_from_scenario_file_with_unknown_field_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(
        &path,
        r#"{"algorithm":"Rendezvous","scheduler":"ASYNC","movement":{"kind":"Rigid"},
            "initial_lights":["A","A"],"initial_positions":[{"x":"0","y":"0"},{"x":"1","y":"0"}],
            "speed":3}"#,
    )
    .unwrap();
    let (code, _, err) = lumi(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("speed"), "{err}");
}

#[test]
fn check_exit_codes_match_library_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("w.jsonl");
    let (code, out, _) = lumi(&["check", "--lights", "BB", "--trace-out", witness.to_str().unwrap()]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("verdict: CounterexampleLasso"));
    let file = read_trace(&std::fs::read_to_string(&witness).unwrap()).unwrap();
    assert!(file.loop_info.is_some());

    let (code, out, _) = lumi(&["check", "--lights", "AA", "--depth", "24"]);
    assert_eq!(code, 0, "{out}");

    let (code, _, _) = lumi(&["check", "--lights", "AA", "--depth", "3"]);
    assert_eq!(code, 2);

    let args = lumi_cli::args::ScenarioArgs {
        lights: Some((lumi_core::Color::A, lumi_core::Color::A)),
        ..Default::default()
    };
    let library = explore_all(&args.build().unwrap(), &FractionSet::halves(), 24).unwrap();
    assert_eq!(library.label(), "AllRunsRendezvous");
}

#[test]
fn lc_atomic_non_rigid_sweep_over_lights() {
    for lights in ["AA", "AB", "BA", "BB"] {
        let (code, out, _) = lumi(&[
            "check",
            "--scheduler",
            "lc-atomic",
            "--movement",
            "non-rigid",
            "--delta",
            "1",
            "--positions",
            "0,3",
            "--lights",
            lights,
            "--depth",
            "32",
        ]);
        assert_eq!(code, 0, "{lights}: {out}");
    }
}

#[test]
fn replay_prints_loop_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("w.jsonl");
    lumi(&["check", "--lights", "BB", "--trace-out", witness.to_str().unwrap()]);
    let (code, out, _) = lumi(&["replay", witness.to_str().unwrap(), "--loops", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("loop start: d²=1/1"), "{out}");
    assert!(out.contains("after pass 2: d²=1/16"), "{out}");

    let tampered = dir.path().join("bad.jsonl");
    let text = std::fs::read_to_string(&witness).unwrap();
    std::fs::write(&tampered, text.replacen("\"B\"", "\"A\"", 3)).unwrap();
    let (code, _, _) = lumi(&["replay", tampered.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn matrix_prints_a_table() {
    let (code, out, _) = lumi(&["check", "--matrix", "--depth", "12", "--positions", "0,1"]);
    assert_eq!(code, 0);
    assert!(out.contains("LC-atomic ASYNC"));
    assert_eq!(out.lines().count(), 1 + 1 + 10 + 1);
}
