use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cavity_chain::config::parse_config;

const BIN: &str = env!("CARGO_BIN_EXE_cavity-chain");

fn run(dir: &Path, command: &str, config: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{out}.cfg"));
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

fn csv(dir: &Path, out: &str) -> String {
    fs::read_to_string(dir.join(format!("{out}.csv"))).unwrap()
}

#[test]
fn every_command_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("evolve", "n_atoms=2 k=1 mu=1 rate_in=1.5 rate_out=1.5 g=0.2 dephasing=lindblad cavity_loss=0.05\nt_max=4 sample_every=20"),
        ("bottleneck", "n_atoms=2 k=1 mu=1\naxis1_param=rate_in axis1_values=1,1.5\naxis2_param=rate_out axis2_values=0.5:2.5:1\nt_max=30"),
        ("dat", "n_atoms=2 k=0.8 mu=0.2 dephasing=unitary\naxis1_param=rate_out axis1_values=0.4,1.2 axis2_param=g axis2_values=0,0.4\nobjective_time=10"),
        ("sweep", "n_atoms=2 k=0.8 mu=0.5 rate_in=1.9\naxis1_param=rate_out axis1_values=0.5,1,1.5 axis2_param=k axis2_values=0.4,0.8\nt_max=40"),
    ];
    for (command, config) in cases {
        let first = run(dir.path(), command, config, &format!("{command}_a"), &["--dt", "0.02"]);
        assert!(first.status.success(), "{command}: {}", String::from_utf8_lossy(&first.stderr));
        let second = run(dir.path(), command, config, &format!("{command}_b"), &["--dt", "0.02"]);
        assert!(second.status.success());
        let a = csv(dir.path(), &format!("{command}_a"));
        assert_eq!(a, csv(dir.path(), &format!("{command}_b")), "{command}");
        assert!(a.lines().count() > 1);
        let manifest = fs::read_to_string(dir.path().join(format!("{command}_a.manifest"))).unwrap();
        assert!(manifest.starts_with(&format!("# command: {command}\n")));
        let resolved = parse_config(&manifest).unwrap();
        assert_eq!(resolved.dt, 0.02);
    }
}

#[test]
fn trajectory_layout_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "evolve", "n_atoms=2 k=1 mu=1 rate_in=1.5 rate_out=1.5\nt_max=1 sample_every=10", "traj", &[]);
    assert!(out.status.success());
    let text = csv(dir.path(), "traj");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "time,sink,photon_1,photon_2,exciton_1,exciton_2,trace,min_eig_flag");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let trace: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((trace - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn jaynes_cummings_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "evolve", "n_atoms=1 mu=0.9\nt_max=10 sample_every=7", "jc", &[]);
    assert!(out.status.success());
    for row in csv(dir.path(), "jc").lines().skip(1) {
        let f: Vec<f64> = row.split(',').take(5).map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[1], 0.0);
        assert!((f[3] - (0.9 * f[0]).sin().powi(2)).abs() <= 1e-6);
    }
}

#[test]
fn capped_cells_carry_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let config = "n_atoms=2 k=1 mu=1 rate_in=1.5\naxis1_param=rate_out axis1_values=0,1.5";
    let out = run(dir.path(), "sweep", config, "cap", &["--t-max", "12", "--target", "0.9"]);
    assert!(out.status.success());
    let text = csv(dir.path(), "cap");
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "rate_out,value,capped");
    assert_eq!(rows[1], "0,12,1");
    assert!(rows[2].ends_with(",0"));
}

#[test]
fn zero_g_dat_matches_runoff_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let base = "n_atoms=2 k=0.8 mu=0.2 objective=sink_at_time objective_time=15\naxis1_param=rate_out axis1_values=0.5,1,2";
    assert!(run(dir.path(), "dat", &format!("{base} axis2_param=g axis2_values=0"), "dat", &[]).status.success());
    assert!(run(dir.path(), "sweep", base, "sweep", &[]).status.success());
    let dat: Vec<String> = csv(dir.path(), "dat").lines().skip(1).map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        format!("{},{},{}", f[0], f[2], f[3])
    }).collect();
    let sweep: Vec<String> = csv(dir.path(), "sweep").lines().skip(1).map(str::to_string).collect();
    assert_eq!(dat, sweep);
}

#[test]
fn bad_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    for (config, key) in [("k=1", "n_atoms"), ("n_atoms=2 mu=abc", "mu"), ("n_atoms=2 flux=1", "flux")] {
        let out = run(dir.path(), "evolve", config, "bad", &[]);
        assert!(!out.status.success());
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(key), "{stderr}");
    }
    let out = run(dir.path(), "evolve", "n_atoms=2", "bad", &["--dt", "-1"]);
    assert!(!out.status.success());
    assert!(!dir.path().join("bad.csv").exists());
}
