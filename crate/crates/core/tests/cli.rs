use std::path::Path;
use std::process::Command;

fn gapfem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gapfem"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("study.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SINGLE: &str = "study = \"single_solve\"\ngeometry = \"planar\"\np = 2\nlevels = [8]\ndeltas = [0.0]\nconstant = 1.5\ndump_resolution = 6\n";

#[test]
fn single_solve_writes_tables_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SINGLE);
    let out = dir.path().join("out");
    let status = gapfem().arg("run").arg(&cfg).arg("--out").arg(&out).env_remove("GAPFEM_OUT").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",ok"));
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let l2: f64 = row[header.iter().position(|&c| c == "l2").unwrap()].parse().unwrap();
    assert!(l2 < 1e-9, "constant data reproduced, l2 = {l2:e}");
    for name in ["rates.csv", "timings.csv", "delta=0e0_n8_patch1.txt", "delta=0e0_n8_patch2.txt", "delta=0e0_n8_hybrid.txt"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let dump = std::fs::read_to_string(out.join("delta=0e0_n8_patch1.txt")).unwrap();
    assert_eq!(dump.lines().next(), Some("x y z value"));
    assert_eq!(dump.lines().count(), 37);

    let again = dir.path().join("again");
    gapfem().arg("run").arg(&cfg).arg("--out").arg(&again).status().unwrap();
    assert_eq!(std::fs::read_to_string(again.join("results.csv")).unwrap(), csv);
}

#[test]
fn overrides_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SINGLE);
    let env_out = dir.path().join("from_env");
    let status = gapfem()
        .arg("run")
        .arg(&cfg)
        .args(["--study", "fixed_gap", "--p", "1", "--levels", "4,8", "--delta", "0,0.01"])
        .env("GAPFEM_OUT", &env_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(env_out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("fixed_gap,planar,")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "study = \"fixed_gap\"\ngeometry = \"planar\"\np = 2\nlevels = [16, 8]\ndeltas = [0.0]\n");
    let out = gapfem().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    let missing = gapfem().arg("run").arg(dir.path().join("nope.toml")).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study = \"fixed_gap\"\ngeometry = \"planar\"\np = 1\nlevels = [4]\ndeltas = [0.5]\n");
    let out = gapfem().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(dir.path().join("o/results.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("error: disc leaves square"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = gapfem::harness::ExperimentConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert_eq!(count, 4);
}
