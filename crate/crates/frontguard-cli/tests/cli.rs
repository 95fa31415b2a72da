//! End-to-end runs of the `frontguard` binary: exit codes, output formats,
//! seed overrides, and report determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frontguard"))
}

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../frontguard/fixtures")
        .join(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_prints_the_classification() {
    let out = run(&["solve", &fixture("g1_benchmark.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("classification: attack"), "{text}");
    assert!(text.contains("honest 4.000000"), "{text}");
}

#[test]
fn solve_json_format_is_machine_readable() {
    let out = run(&["solve", &fixture("g1_benchmark.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(doc["classification"], "attack");
}

#[test]
fn pi_reports_regime_and_plan() {
    let out = run(&["pi", &fixture("g1_benchmark.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("guess value: 1.000000"), "{text}");
    assert!(text.contains("regime: guessing-hard"), "{text}");
    assert!(text.contains("optimal commitment count: 2"), "{text}");
}

#[test]
fn contest_reports_spends_and_stage() {
    let out = run(&["contest", &fixture("contest_stage_mixed.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("MixedOverlap"), "{text}");
    assert!(text.contains("mixed: strong commits"), "{text}");
}

#[test]
fn contest_requires_a_contest_section() {
    let out = run(&["contest", &fixture("g1_benchmark.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_scenario_exits_one_with_diagnostics() {
    let dir = std::env::temp_dir().join("frontguard-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"game": {"states": []}, "episodes": 1"#).unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    // Parseable but invalid: prior does not sum to one.
    let invalid = dir.join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{
        "game": {
            "states": ["s1", "s2"],
            "messages": ["m1", "m2"],
            "prior": [0.9, 0.5],
            "payoff_a": [[10.0, 0.0], [0.0, 10.0]],
            "payoff_b": [
                [[8.0, 0.0], [0.0, 0.0]],
                [[0.0, 0.0], [0.0, 8.0]]
            ],
            "costs": {"c": 1.0, "f": 2.0, "q": 0.5, "beta": 0.9}
        },
        "episodes": 10,
        "seed": 1
    }"#,
    )
    .unwrap();
    let out = run(&["solve", invalid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("prior"), "{err}");
}

#[test]
fn usage_errors_exit_sixty_four() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("simulate"));
}

#[test]
fn verify_passes_on_shipped_fixtures() {
    for name in [
        "g1_benchmark.json",
        "g1_plain.json",
        "g1_easy_plain.json",
        "contest_unprotected.json",
        "contest_stage_mixed.json",
    ] {
        let out = run(&["verify", &fixture(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("all checks passed"), "{name}");
    }
}

#[test]
fn simulate_reports_are_byte_identical_across_runs() {
    let dir = std::env::temp_dir().join("frontguard-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let r1 = dir.join("r1.json");
    let r2 = dir.join("r2.json");
    let csv = dir.join("episodes.csv");
    for out_path in [&r1, &r2] {
        let out = run(&[
            "simulate",
            &fixture("g1_benchmark.json"),
            "--episodes",
            "500",
            "--out",
            out_path.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&r1).unwrap();
    let b = std::fs::read(&r2).unwrap();
    assert_eq!(a, b, "reports differ across identical runs");

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text
        .starts_with("episode,state,a_action,b_action,front_run,payoff_a,payoff_b,fees_a,fees_b"));
    assert_eq!(csv_text.lines().count(), 501);
}

#[test]
fn seed_precedence_file_env_flag() {
    let report_seed = |extra_args: &[&str], env_seed: Option<&str>| -> u64 {
        let mut cmd = bin();
        cmd.args([
            "simulate",
            &fixture("g1_benchmark.json"),
            "--episodes",
            "50",
            "--format",
            "json",
        ])
        .args(extra_args);
        match env_seed {
            Some(s) => cmd.env("FRONTGUARD_SEED", s),
            None => cmd.env_remove("FRONTGUARD_SEED"),
        };
        let out = cmd.output().expect("binary runs");
        assert_eq!(out.status.code(), Some(0));
        let doc: serde_json::Value =
            serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).expect("json report");
        doc["seed"].as_u64().expect("seed field")
    };
    assert_eq!(report_seed(&[], None), 42); // from the file
    assert_eq!(report_seed(&[], Some("77")), 77); // env overrides file
    assert_eq!(report_seed(&["--seed", "99"], Some("77")), 99); // flag wins
}

#[test]
fn pi_honors_k_max_and_quiet() {
    let out = run(&["pi", &fixture("g1_benchmark.json"), "--k-max", "1", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("optimal commitment count: 1"), "{text}");
    assert!(!text.contains("chosen set"), "quiet still printed detail: {text}");
}

#[test]
fn verify_quiet_prints_only_failures() {
    let out = bin()
        .args(["verify", &fixture("g1_benchmark.json"), "--quiet"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty(), "{}", stdout(&out));
}

#[test]
fn simulate_table_format_prints_a_summary() {
    let out = run(&[
        "simulate",
        &fixture("g1_benchmark.json"),
        "--episodes",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("attack frequency"), "{text}");
    assert!(text.contains("honest payoff"), "{text}");
}
