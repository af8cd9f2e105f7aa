use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wsrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsrm")).args(args).output().expect("binary runs")
}

fn small_args(out: &Path) -> Vec<String> {
    ["--subcarriers", "4", "--ia-restarts", "3", "--out", out.to_str().unwrap()].iter().map(|s| s.to_string()).collect()
}

fn run_with(extra: &[&str], out: &Path) -> Output {
    let mut args: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    args.extend(small_args(out));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    wsrm(&refs)
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn convergence_writes_one_trajectory_per_mode_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(&["--preset", "convergence", "--seed", "3", "--init", "both"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        names(dir.path()),
        ["resolved_config.toml", "summary.csv", "trajectory_seed3_ia.csv", "trajectory_seed3_random.csv"]
    );
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("seed,mode,converged,iterations,final_wsr,messages_exchanged"));
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.all(|l| l.ends_with(",0")));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(printed.lines().count(), 4);
}

#[test]
fn single_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert!(run_with(&["--seed", "5", "--init", "ia"], dir.path()).status.success());
    }
    for name in ["channels.txt", "ia_leakage.csv", "solver_trace.csv", "trajectory.csv", "rates.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn negligible_power_gives_negligible_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(&["--seed", "1", "--init", "random", "--power-dbw", "-120"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let wsr: f64 = rates.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.0..1e-6).contains(&wsr), "{wsr}");
}

#[test]
fn power_sweep_writes_one_row_per_power_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(&["--preset", "power_sweep", "--seeds", "0..2", "--sweep", "5,15"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("power_sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "power_dbw,mode,mean_sumrate,stderr");
    assert_eq!(rows.len(), 5);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        vec!["--preset", "nonsense"],
        vec!["--init", "sideways"],
        vec!["--seeds", "x..3"],
        vec!["--weights", "1,2,3"],
        vec!["--unknown-flag"],
    ] {
        let out = run_with(&bad, dir.path());
        assert_eq!(out.status.code(), Some(1), "{bad:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("occupied");
    fs::write(&blocker, "not a directory").unwrap();
    let out = run_with(&["--seed", "0"], &blocker);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_is_read_and_overridden() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_with(&["--seed", "2", "--init", "random"], dir.path()).status.success());
    let resolved = dir.path().join("resolved_config.toml");
    let again = tempfile::tempdir().unwrap();
    let out = run_with(&["--config", resolved.to_str().unwrap(), "--init", "ia"], again.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("channels.txt")).unwrap(),
        fs::read(again.path().join("channels.txt")).unwrap()
    );
    assert!(again.path().join("ia_leakage.csv").exists());
}
