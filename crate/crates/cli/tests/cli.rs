use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn dsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsample"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tiny() -> String {
    fixture("instances/tiny_2x2.txt").display().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(dsample(&["--help"]).status.code(), Some(0));
    assert_eq!(dsample(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(dsample(&[]).status.code(), Some(1));
    assert_eq!(dsample(&["frobnicate"]).status.code(), Some(1));
    // Missing --seed.
    assert_eq!(
        dsample(&[
            "sample",
            "--instance",
            &tiny(),
            "--policy",
            "spt_softmax",
            "--samples",
            "4"
        ])
        .status
        .code(),
        Some(1)
    );
    let negative = dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "spt_softmax",
        "--samples",
        "4",
        "--seed",
        "0",
        "--delta",
        "-1",
    ]);
    assert_eq!(negative.status.code(), Some(1));
    assert_eq!(
        dsample(&[
            "estimate",
            "--pool",
            &fixture("pools/four_values.csv").display().to_string(),
            "--sizes",
            "8"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn missing_input_is_a_runtime_error() {
    let o = dsample(&[
        "sample",
        "--instance",
        "/nonexistent/x.txt",
        "--policy",
        "spt_softmax",
        "--samples",
        "4",
        "--seed",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deterministic_and_sampled_tiny_instance() {
    let det = dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "spt_softmax",
        "--strategy",
        "deterministic",
        "--samples",
        "1",
        "--seed",
        "0",
    ]);
    assert!(det.status.success());
    assert_eq!(stdout(&det).trim(), "7");
    // Uniform priorities tie everywhere; argmax takes job 0 twice first.
    let tied = dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "uniform",
        "--strategy",
        "deterministic",
        "--samples",
        "1",
        "--seed",
        "0",
    ]);
    assert_eq!(stdout(&tied).trim(), "11");
    let sampled = dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "uniform",
        "--samples",
        "100",
        "--seed",
        "3",
    ]);
    assert!(sampled.status.success());
    assert_eq!(stdout(&sampled).trim(), "7");
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = dsample(&[
            "generate",
            "--jobs",
            "4",
            "--machines",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(std::fs::read_to_string(out.join("gen4x3-5.txt")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert!(texts[0].starts_with("4 3\n"));
}

#[test]
fn estimate_prints_estimates() {
    let pool = fixture("pools/four_values.csv").display().to_string();
    let o = dsample(&["estimate", "--pool", &pool, "--sizes", "1,2,4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3.5\n2.5\n2\n");
}

#[test]
fn validate_round_trip_and_infeasible_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "mwkr_softmax",
        "--samples",
        "8",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let batch = out.join("batch.json").display().to_string();
    assert_eq!(
        dsample(&["validate", "--instance", &tiny(), "--schedule", &batch])
            .status
            .code(),
        Some(0)
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"op_start":[[0,0],[0,0]],"makespan":4}"#).unwrap();
    let o = dsample(&[
        "validate",
        "--instance",
        &tiny(),
        "--schedule",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn protocol_check_against_unreachable_endpoint_fails_validation() {
    let o = dsample(&[
        "protocol-check",
        "--endpoint",
        "tcp://127.0.0.1:1",
        "--exchanges",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn inputs_are_not_modified() {
    let before = std::fs::read(tiny()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    dsample(&[
        "sample",
        "--instance",
        &tiny(),
        "--policy",
        "uniform",
        "--samples",
        "16",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(tiny()).unwrap(), before);
}
