use std::path::Path;
use std::process::Command;

fn brinkman(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_brinkman"))
        .args(args)
        .env("OUT_DIR", out)
        .output()
        .expect("binary runs")
}

#[test]
fn list_problems_names_every_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(&["list-problems"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in brinkman::problems::NAMES {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(&["amr", "--problem", "mms2d-quad", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_problem_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(&["solve", "--problem", "nowhere"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn out_dir_environment_is_used_without_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(&["solve", "--problem", "mms2d-quad", "--h", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn uniform_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(
        &["uniform", "--problem", "mms2d-trig", "--h", "0.5", "--iters", "2", "--vtk-every", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(dir.path().join("iter_0.vtk").exists());
    assert!(!dir.path().join("iter_1.vtk").exists());
    assert!(dir.path().join("iter_2.vtk").exists());
}

#[test]
fn sweep_writes_eighteen_logs() {
    let dir = tempfile::tempdir().unwrap();
    let out = brinkman(&["sweep", "--problem", "mms2d-quad", "--h", "0.5", "--iters", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let logs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("log.csv").exists())
        .count();
    assert_eq!(logs, 18);
    let table = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(table.lines().count(), 19);
}
