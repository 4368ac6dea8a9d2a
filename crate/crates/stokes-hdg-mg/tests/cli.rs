//! Exit-code contract of the command-line harness.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-mg"))
}

#[test]
fn invalid_config_exits_with_code_three() {
    let dir = std::env::temp_dir().join("stokes-mg-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.cfg");
    std::fs::write(&path, "p = 9\n").unwrap();
    let status = bin()
        .args(["eoc", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    let status = bin().args(["eoc", "--method", "fem"]).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn zero_problem_solve_succeeds_with_one_outer_step() {
    let out = bin()
        .args(["solve", "--level", "1", "--p", "1", "--dt", "2"])
        .arg("--config")
        .arg(write_cfg("problem = zero\n"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"n_outer\": 1"), "{text}");
}

#[test]
fn identity_command_passes_on_the_initial_mesh() {
    let status = bin()
        .args(["identity", "--levels", "1", "--p", "1", "--negative-control"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

fn write_cfg(contents: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("stokes-mg-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("cfg-{}.cfg", contents.len()));
    std::fs::write(&path, contents).unwrap();
    path
}
