use std::path::{Path, PathBuf};
use std::process::Command;

use lagflow::cli::{io, load_config, CHARACTERISTICS_FILE, DIAGNOSTICS_FILE};

const SMALL: &str = "\
a = -4
b = 4
k = 60
tau = 0.01
t_end = 0.2
cost = ppower
p = 7
m = 1
init = uniform
init_support = -0.3, 0.3
snapshot_times = ladder
";

fn experiments() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn lagflow(out: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lagflow"));
    cmd.env("LAGFLOW_OUT", out);
    cmd
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(experiments()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let (cfg, _) = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.jko().unwrap();
        }
    }
    let (cfg, _) = load_config(&experiments().join("p7_linear.cfg")).unwrap();
    assert_eq!(cfg.k, 1000);
    assert_eq!(cfg.t_end, 2.0);
}

#[test]
fn solve_then_audit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let solved = lagflow(&out).arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(solved.status.code(), Some(0), "{}", String::from_utf8_lossy(&solved.stderr));
    let rows = io::read_diagnostics(&out.join(DIAGNOSTICS_FILE)).unwrap();
    assert_eq!(rows.len(), 20);
    let (times, states) = io::read_characteristics(&out.join(CHARACTERISTICS_FILE)).unwrap();
    assert_eq!(times.len(), 21);
    assert_eq!(states[0].k(), 60);

    let audited = lagflow(&out).arg("audit").arg(&out).output().unwrap();
    assert_eq!(audited.status.code(), Some(0));
    let text = String::from_utf8_lossy(&audited.stdout);
    assert!(text.starts_with("name,worst,step,pass\n"), "{text}");
    assert_eq!(std::fs::read_to_string(out.join("audit.txt")).unwrap(), text.as_ref());
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(lagflow(out).arg("solve").arg(&cfg).output().unwrap().status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn converge_writes_csv_and_rejects_single_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("cost = ppower\np = 7", "cost = relativistic\ngamma = 1"));
    let out = dir.path().join("conv");
    let single = lagflow(&out)
        .args(["converge", cfg.to_str().unwrap(), "--axis", "grid", "--levels", "20", "--reference", "80"])
        .output()
        .unwrap();
    assert_eq!(single.status.code(), Some(2));

    let run = lagflow(&out)
        .args(["converge", cfg.to_str().unwrap(), "--axis", "grid", "--levels", "20,40", "--reference", "160"])
        .output()
        .unwrap();
    assert!(run.status.code() == Some(0) || run.status.code() == Some(1));
    let (axis, levels) = io::read_convergence(&out.join("convergence_grid.csv")).unwrap();
    assert_eq!(axis.as_str(), "grid");
    assert_eq!(levels.len(), 2);
    assert!(levels[1].err_idf < levels[0].err_idf);
}

#[test]
fn bad_config_reports_position_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("k = 60", "k = sixty"));
    let out = lagflow(&dir.path().join("o")).arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let none = lagflow(dir.path()).arg("frobnicate").output().unwrap();
    assert_eq!(none.status.code(), Some(2));
}
