//! Black-box tests of the `mclfem` binary: exit codes, written files, and
//! byte-identical reruns.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mclfem"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const ADVECTION_RUN: &str = r#"
seed = 42

[model]
kind = "advection"
velocity = [1.0]

[mesh]
dim = 1
cells = 64

[limiter]
mode = "mcl"

[integrator]
cfl = 0.9
t_end = 0.25
snapshots = [0.1]

[initial_condition]
name = "sine_wave"
amplitude = 1.0
mean = 0.0

[output]
formats = ["csv", "vtk"]
write_diagnostics = true
prefix = "adv"
"#;

#[test]
fn run_writes_outputs_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), ADVECTION_RUN);
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("run finished"));

    // Snapshot at t=0.1, final state, in both formats, plus diagnostics.
    for name in [
        "adv_snapshot_000.csv",
        "adv_final.csv",
        "adv_snapshot_000.vtk",
        "adv_final.vtk",
        "adv_diagnostics.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), ADVECTION_RUN);
    let mut dirs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("out{k}"));
        let out = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--output-dir")
            .arg(&dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        dirs.push(dir);
    }
    let mut names: Vec<String> = std::fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in &names {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs between identical reruns");
    }
}

#[test]
fn convergence_subcommand_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), ADVECTION_RUN);
    let out_dir = tmp.path().join("eoc");
    let out = bin()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out_dir)
        .args(["--levels", "32,64"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("fitted L1 slope"), "stdout: {text}");
    assert!(out_dir.join("adv_eoc.csv").is_file());
}

#[test]
fn check_operators_inline_mesh() {
    let out = bin()
        .args(["check-operators", "--dim", "2", "--cells", "8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verdict: PASS"));
}

#[test]
fn check_operators_requires_mesh_source() {
    let out = bin().arg("check-operators").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &ADVECTION_RUN.replace("[mesh]\ndim = 1", "[mesh]\nrows = 3\ndim = 1"),
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn failed_assertion_exits_one() {
    // Unlimited target fluxes overshoot the invariant interval of a steep
    // Burgers profile; with the stage check off the run completes and the
    // configured bound assertion reports the violation.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
seed = 42

[model]
kind = "burgers"

[mesh]
dim = 1
cells = 128

[limiter]
mode = "target"

[integrator]
cfl = 0.4
t_end = 0.25
stage_admissibility_check = false

[initial_condition]
name = "sine_wave"
amplitude = 1.0
mean = 0.0

[admissibility]
scalar_bounds_from_ic = true

[assertions]
scalar_bounds_tol = 1e-12
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("assertion failed"));
}
