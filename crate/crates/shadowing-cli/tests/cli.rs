//! End-to-end checks of the command-line surface: exit codes, witness files,
//! and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shadowing")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shadowing-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_rotation_exit_codes_and_witness() {
    let dir = workdir("check");
    let sys = dir.join("rotation4.json");
    let out = run_in(&dir, &["zoo", "build", "rotation:4,1", "-o", sys.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");

    // failing check: exit 1 and a replayable witness file
    let out = run_in(
        &dir,
        &["check", sys.to_str().unwrap(), "--eps", "2/5", "--delta", "3/10"],
    );
    assert_eq!(code(&out), 1);
    let witness: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("witness.json")).unwrap()).unwrap();
    assert_eq!(witness["prefix"], serde_json::json!(["0", "0", "0", "0"]));
    let trace = witness["survivor_trace"].as_array().unwrap();
    assert!(trace.last().unwrap().as_array().unwrap().is_empty());

    // passing check at the strictness boundary: exit 0
    let out = run_in(
        &dir,
        &["check", sys.to_str().unwrap(), "--eps", "2/5", "--delta", "1/4"],
    );
    assert_eq!(code(&out), 0, "{out:?}");

    // other properties agree on the failing cell
    for prop in ["struct", "fgpotp", "cgpotp", "usc"] {
        let out = run_in(
            &dir,
            &[
                "check",
                sys.to_str().unwrap(),
                "--eps",
                "2/5",
                "--delta",
                "3/10",
                "--property",
                prop,
            ],
        );
        assert_eq!(code(&out), 1, "property {prop}: {out:?}");
    }
}

#[test]
fn validate_rejects_bad_documents() {
    let dir = workdir("validate");
    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"labels": ["a","b"], "metric": {"matrix": [["0","1"],["2","0"]]}, "map": [0,1]}"#,
    )
    .unwrap();
    let out = run_in(&dir, &["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("asymmetric"), "{stderr}");

    let out = run_in(&dir, &["validate", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn modulus_is_deterministic() {
    let dir = workdir("modulus");
    let sys = dir.join("rot.json");
    run_in(&dir, &["zoo", "build", "rotation:4,1", "-o", sys.to_str().unwrap()]);
    let a = run_in(
        &dir,
        &["modulus", sys.to_str().unwrap(), "--eps-grid", "auto:5"],
    );
    let b = run_in(
        &dir,
        &["modulus", sys.to_str().unwrap(), "--eps-grid", "auto:5"],
    );
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout, "identical invocations must match bytewise");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("epsilon,delta_shadow,delta_struct,delta_fg,delta_cg,delta_usc"));
}

#[test]
fn equiv_reports_zero_violations_on_rotation() {
    let dir = workdir("equiv");
    let sys = dir.join("rot.json");
    run_in(&dir, &["zoo", "build", "rotation:4,1", "-o", sys.to_str().unwrap()]);
    let report = dir.join("report.json");
    let out = run_in(
        &dir,
        &[
            "equiv",
            sys.to_str().unwrap(),
            "--eps-grid",
            "auto:4",
            "-o",
            report.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["violations"], serde_json::json!(0));
}

#[test]
fn realize_round_trips_the_requested_orbit() {
    let dir = workdir("realize");
    let sys = dir.join("rot.json");
    run_in(&dir, &["zoo", "build", "rotation:4,1", "-o", sys.to_str().unwrap()]);
    let po = dir.join("po.json");
    std::fs::write(&po, r#"{"points": [], "period": ["0"], "delta": "3/10"}"#).unwrap();
    let out = run_in(
        &dir,
        &[
            "realize",
            sys.to_str().unwrap(),
            "--pseudo-orbit",
            po.to_str().unwrap(),
            "--mode",
            "auto",
        ],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["start"], serde_json::json!("0"));
    assert_eq!(parsed["rho_bound"], serde_json::json!("1/4"));
    // the realized map fixes point 0 and keeps the rotation elsewhere
    assert_eq!(parsed["system"]["map"], serde_json::json!([0, 2, 3, 0]));
}

#[test]
fn budget_cap_exits_three() {
    let dir = workdir("budget");
    let sys = dir.join("rot.json");
    run_in(&dir, &["zoo", "build", "rotation:4,1", "-o", sys.to_str().unwrap()]);
    let out = Command::new(bin())
        .args(["check", sys.to_str().unwrap(), "--eps", "2/5", "--delta", "1/4"])
        .env("SHADOWING_STATE_BUDGET", "2")
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{out:?}");
}

#[test]
fn zoo_build_round_trips_through_validate() {
    let dir = workdir("zoo");
    for spec in ["tent:8", "shift:2,2", "random:5,42", "logistic:7/2,6"] {
        let path = dir.join(format!("{}.json", spec.replace([':', ',', '/'], "_")));
        let out = run_in(&dir, &["zoo", "build", spec, "-o", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{spec}: {out:?}");
        let out = run_in(&dir, &["validate", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{spec}: {out:?}");
    }
    let out = run_in(&dir, &["zoo", "list"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("rotation:M,K"));
}

#[test]
fn search_separation_all_class_is_empty() {
    let dir = workdir("sep");
    let out = run_in(
        &dir,
        &["search-separation", "--family", "tent:4..6", "--class", "all"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"candidates\": []"), "{text}");
}

#[test]
fn nonautonomous_check_witness_replays() {
    let dir = workdir("nonaut");
    let sys = dir.join("seq.json");
    std::fs::write(
        &sys,
        r#"{
            "labels": ["0","1","2","3"],
            "metric": {"embedded": {"coords": [["0"],["1/4"],["1/2"],["3/4"]], "norm": "circle"}},
            "maps": {"preperiod": [], "period": [[1,2,3,0]]}
        }"#,
    )
    .unwrap();
    let out = run_in(
        &dir,
        &["check", sys.to_str().unwrap(), "--eps", "2/5", "--delta", "3/10"],
    );
    assert_eq!(code(&out), 1, "{out:?}");
    let witness: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("witness.json")).unwrap()).unwrap();
    let trace = witness["survivor_trace"].as_array().unwrap();
    assert!(trace.last().unwrap().as_array().unwrap().is_empty());
    // unsupported property on sequences: usage error
    let out = run_in(
        &dir,
        &[
            "check",
            sys.to_str().unwrap(),
            "--eps",
            "2/5",
            "--delta",
            "3/10",
            "--property",
            "fgpotp",
        ],
    );
    assert_eq!(code(&out), 2, "{out:?}");
}
