//! End-to-end runs of the `iabsim` binary.

use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = r#"
trials = 5
ue_count = 10

[region]
width = 400.0
height = 400.0

[[node]]
name = "mbs"
kind = "mbs"
x = 200.0
y = 200.0
"#;

fn iabsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iabsim"))
        .args(args)
        .current_dir(dir)
        .env("IABSIM_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_rows(table: &str) -> Vec<Vec<String>> {
    table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn fig2_preset_gives_27_rows() {
    let dir = tempfile::tempdir().unwrap();
    let preset = stdout(&iabsim(&["--preset", "fig2"], dir.path()));
    let cfg = write(dir.path(), "fig2.toml", &preset);
    let table = stdout(&iabsim(&["--config", &cfg, "--trials", "3"], dir.path()));
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 27);
    assert!(rows.iter().all(|r| r[0] == "tree_depth" && r[6] == "3"));
    let header = table.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "axis,value,variant,rho_hat,ci_low,ci_high,trials,ue_samples,mean_rate_bps");
}

#[test]
fn single_trial_single_ue_interval_is_wide() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "one.toml", &MINIMAL.replace("ue_count = 10", "ue_count = 1"));
    let table = stdout(&iabsim(&["--config", &cfg, "--trials", "1"], dir.path()));
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 1);
    let (lo, hi): (f64, f64) = (rows[0][4].parse().unwrap(), rows[0][5].parse().unwrap());
    assert!(hi - lo > 0.75, "interval [{lo}, {hi}] from one sample");
    assert_eq!(rows[0][6], "1");
}

#[test]
fn same_seed_gives_identical_tables_and_seed_changes_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.toml", MINIMAL);
    let a = stdout(&iabsim(&["--config", &cfg, "--seed", "9"], dir.path()));
    let b = stdout(&iabsim(&["--config", &cfg, "--seed", "9"], dir.path()));
    let c = stdout(&iabsim(&["--config", &cfg, "--seed", "10"], dir.path()));
    assert_eq!(a, b);
    assert_ne!(data_rows(&a), data_rows(&c));
    assert!(a.contains("# overrides: --seed 9"));
}

#[test]
fn output_file_manifest_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.toml", MINIMAL);
    let out = iabsim(&["--config", &cfg, "--output", "res.csv", "--sweep", "psi", "--values", "0.2,0.8", "--variants", "direct"], dir.path());
    assert!(stdout(&out).is_empty());
    let table = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    assert_eq!(data_rows(&table).len(), 2);
    let manifest = std::fs::read_to_string(dir.path().join("res.csv.manifest.toml")).unwrap();
    assert!(manifest.contains("# wall_time_seconds:"));

    // The table's embedded configuration, and the manifest (plain TOML),
    // both rerun to the same rows.
    for (source, target) in [("res.csv", "again.csv"), ("res.csv.manifest.toml", "manifest.csv")] {
        stdout(&iabsim(&["--config", source, "--output", target], dir.path()));
        let again = std::fs::read_to_string(dir.path().join(target)).unwrap();
        assert_eq!(data_rows(&again), data_rows(&table), "rerun from {source}");
    }
}

#[test]
fn exit_codes_per_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let missing = iabsim(&["--config", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(3));

    let bad_psi = write(dir.path(), "psi.toml", &format!("psi = 1.5\n{MINIMAL}"));
    let out = iabsim(&["--config", &bad_psi], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("psi"));

    let typo = write(dir.path(), "psy.toml", &format!("psy = 0.5\n{MINIMAL}"));
    let out = iabsim(&["--config", &typo], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did you mean `psi`"));

    let cfg = write(dir.path(), "min.toml", MINIMAL);
    let out = iabsim(&["--config", &cfg, "--output", "no/such/dir/r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("no").exists());

    let out = Command::new(env!("CARGO_BIN_EXE_iabsim"))
        .args(["--config", &cfg])
        .current_dir(dir.path())
        .env("IABSIM_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_previous_output_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.toml", MINIMAL);
    std::fs::write(dir.path().join("keep.csv"), "old").unwrap();
    let out = iabsim(&["--config", &cfg, "--output", "keep.csv", "--sweep", "tree_depth", "--values", "-5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(dir.path().join("keep.csv")).unwrap(), "old");
}
