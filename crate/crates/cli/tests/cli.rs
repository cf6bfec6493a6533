use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const RHO: &str = r#"{"dim": 2, "entries": [[0.7,0],[0,0],[0,0],[0.3,0]]}"#;
const PLUS: &str = r#"{"dim": 2, "entries": [[0.5,0],[0.5,0],[0.5,0],[0.5,0]]}"#;

fn qusum(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qusum"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rho.json"), RHO).unwrap();
    std::fs::write(dir.path().join("plus.json"), PLUS).unwrap();
    dir
}

fn scenario(dir: &Path, sigma: &str, extra: &str) -> PathBuf {
    let path = dir.join("sc.json");
    let text = format!(
        r#"{{"rho": {RHO}, "sigma": {sigma}, "nu": 0, "ell": 3, "w": 16,
            "trials": 100, "max_steps": 20000, "seed": 5{extra}}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has a line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn pvm_build_prints_a_report() {
    let dir = workspace();
    let out = qusum(
        dir.path(),
        &["pvm-build", "--rho", "rho.json", "--ell", "2"],
    );
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ell"], 2);
    assert!(report["outcome_count"].as_u64().unwrap() <= report["bound"].as_u64().unwrap());
    assert_eq!(report["config"]["command"], "pvm-build");
}

#[test]
fn detect_on_pre_change_stream_does_not_stop() {
    let dir = workspace();
    let model = qusum(
        dir.path(),
        &[
            "induce",
            "--rho",
            "rho.json",
            "--sigma",
            "plus.json",
            "--ell",
            "1",
            "--out",
            "m.json",
        ],
    );
    assert!(model.status.success());
    let stream: String = (0..500)
        .map(|i| if i % 10 < 7 { "0\n" } else { "1\n" })
        .collect();
    std::fs::write(dir.path().join("s.csv"), stream).unwrap();
    let out = qusum(
        dir.path(),
        &[
            "detect",
            "--model",
            "m.json",
            "--stream",
            "s.csv",
            "--window",
            "8",
            "--threshold",
            "50",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["stopped"], false);
    assert_eq!(report["stream_length"], 500);
}

#[test]
fn sweep_writes_one_row_per_target() {
    let dir = workspace();
    scenario(dir.path(), PLUS, "");
    let out = qusum(
        dir.path(),
        &[
            "-q",
            "sweep",
            "--scenario",
            "sc.json",
            "--tfa",
            "20,50,100",
            "--trials",
            "100",
            "--out",
            "run",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let curve = std::fs::read_to_string(dir.path().join("run/curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(
        lines.next().unwrap(),
        "h,tfa_mean,tfa_se,delay_mean,delay_se,censor_frac"
    );
    assert_eq!(lines.count(), 3);
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run/summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["fitted_slope"].is_number());
    assert_eq!(summary["ell"], 3);

    let report = qusum(dir.path(), &["report", "--dir", "run"]);
    assert!(report.status.success());
}

#[test]
fn replay_reproduces_output() {
    let dir = workspace();
    scenario(dir.path(), PLUS, "");
    let first = qusum(
        dir.path(),
        &[
            "-q",
            "calibrate",
            "--scenario",
            "sc.json",
            "--target",
            "30",
            "--out",
            "a.json",
        ],
    );
    assert!(first.status.success());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    std::fs::remove_file(dir.path().join("a.json")).unwrap();
    let again = qusum(dir.path(), &["-q", "--replay", "a.json.bak"]);
    assert!(!again.status.success());
    std::fs::write(dir.path().join("a.json.bak"), &a).unwrap();
    let again = qusum(dir.path(), &["-q", "--replay", "a.json.bak"]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), a);
}

#[test]
fn unknown_subcommand_exits_one() {
    let dir = workspace();
    let out = qusum(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "UnknownSubcommand");
}

#[test]
fn invalid_density_exits_one() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"dim": 2, "entries": [[0.5,0],[0.4,0],[0.1,0],[0.5,0]]}"#,
    )
    .unwrap();
    let out = qusum(
        dir.path(),
        &["pvm-build", "--rho", "bad.json", "--ell", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "NonHermitian");
    assert_eq!(err["exit_code"], 1);
}

#[test]
fn missing_file_exits_one() {
    let dir = workspace();
    let out = qusum(
        dir.path(),
        &["pvm-build", "--rho", "nope.json", "--ell", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "Io");
}

#[test]
fn identical_states_are_a_numerical_failure() {
    let dir = workspace();
    scenario(dir.path(), RHO, "");
    let out = qusum(
        dir.path(),
        &[
            "sweep",
            "--scenario",
            "sc.json",
            "--h",
            "1,2,3",
            "--out",
            "run",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "DegenerateScenario");
}

#[test]
fn stochastic_commands_need_a_seed() {
    let dir = workspace();
    let text = std::fs::read_to_string(scenario(dir.path(), PLUS, ""))
        .unwrap()
        .replace(r#", "seed": 5"#, "");
    std::fs::write(dir.path().join("sc.json"), text).unwrap();
    let out = qusum(
        dir.path(),
        &["calibrate", "--scenario", "sc.json", "--target", "30"],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = qusum(
        dir.path(),
        &[
            "-q",
            "calibrate",
            "--scenario",
            "sc.json",
            "--target",
            "30",
            "--seed",
            "2",
        ],
    );
    assert!(out.status.success());
}
