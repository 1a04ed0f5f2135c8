//! End-to-end runs of the `cgme` binary.

use std::path::Path;
use std::process::Command;

const MODEL: &str = r#""model": {
    "qubits": 2,
    "hamiltonian": {"pauli": [[0.5, "ZI"], [-0.7, "IZ"], [0.3, "ZZ"], [1.0, "XI"], [1.0, "IX"]]},
    "couplings": [{"pauli": [[1.0, "ZI"]]}],
    "initial": {"bitstring": "11"}
}"#;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, format!("{{{MODEL}, {body}}}")).unwrap();
    path
}

fn cgme(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cgme")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> (i32, String, String) {
    cgme(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
}

const TOY: &str = r#""bath": {"kind": "toy", "a": 1.01, "b": 0.6, "beta": 4.0, "tau_sb": 10.0}"#;

#[test]
fn bath_info_on_the_toy_bath() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    let (code, stdout, _) = run("bath-info", &cfg, &dir.path().join("out"));
    assert_eq!(code, 0);
    assert!(stdout.contains("τ_B = 0.68"), "{stdout}");
    assert!(stdout.contains("peak ω* = 2.0"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("out/bath_gamma.csv")).unwrap();
    assert!(csv.starts_with("omega [1/t],gamma [1/t]\n"));
}

#[test]
fn ohmic_without_cutoff_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#""bath": {"kind": "ohmic", "kappa": 1.0, "omega_c": 1.0, "beta": 1.0}"#);
    let (code, _, stderr) = run("bath-info", &cfg, &dir.path().join("out"));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("T_cutoff"), "{stderr}");
    let cfg = write_config(dir.path(), r#""bath": {"kind": "ohmic", "kappa": 1.0, "omega_c": 1.0, "beta": 1.0, "t_cutoff": 50.0}"#);
    assert_eq!(run("bath-info", &cfg, &dir.path().join("out")).0, 0);
}

#[test]
fn rectangle_bath_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#""bath": {"kind": "rectangle", "g": 0.3, "tau_c": 1.0}"#);
    let (code, stdout, stderr) = run("bath-info", &cfg, &dir.path().join("out"));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("γ(ω) < 0 for some ω: not CP-admissible"), "{stdout}");
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"model\": 3,\n}").unwrap();
    let (code, _, stderr) = run("evolve", &path, dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("line"), "{stderr}");
    assert_eq!(cgme(&["evolve"]).0, 2);
}

#[test]
fn numeric_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Unattainable tolerances make the adaptive integrator give up.
    let body = format!(
        r#"{TOY}, "equations": [{{"kind": "davies"}}], "grid": {{"t_max": 1.0, "points": 3}},
           "integrator": {{"method": "rk45", "atol": 1e-300, "rtol": 1e-300}}"#
    );
    let cfg = write_config(dir.path(), &body);
    let (code, _, stderr) = run("evolve", &cfg, &dir.path().join("out"));
    assert_eq!(code, 3, "{stderr}");
}

#[test]
fn evolve_is_deterministic_and_starts_on_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{TOY}, "equations": [{{"kind": "ore"}}, {{"kind": "cgme", "t_a": 2.0}}],
           "grid": {{"t_max": 0.5, "points": 11}}, "outputs": {{"gnuplot": true}}"#
    );
    let cfg = write_config(dir.path(), &body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("evolve", &cfg, &a).0, 0);
    assert_eq!(cgme(&["evolve", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "1"]).0, 0);
    for f in ["evolve_ore.csv", "evolve_cgme.csv", "evolve_summary.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("evolve_ore.gp").is_file());
    let csv = std::fs::read_to_string(a.join("evolve_ore.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t [t],t/tau_sb [1],p0 [1]"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[2..6].iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn dd_table_and_bounds_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{TOY}, "dd": {{"betas": [5.0], "omega_cs": [0.785398163397], "dts": [0.25, 0.5]}},
           "grid": {{"t_max": 0.2, "points": 5}}"#
    );
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run("dd", &cfg, &out);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("ξ < 1 at 2/2 points"), "{stdout}");
    let (code, stdout, stderr) = run("bounds", &cfg, &out);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("exceeds strongest_bound at 0/5"), "{stdout}");
    assert!(out.join("bounds_long.csv").is_file());
}

#[test]
fn optimize_ta_reports_the_quoted_value_gap() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(r#"{TOY}, "lambda": {{"samples": 100, "t_max": 0.5, "quoted_t_a": 0.97}}"#);
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = cgme(&["optimize-ta", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("T_a (theory) = √(τ_Bτ_SB/5) = 1.17"), "{stdout}");
    assert!(stdout.contains("discrepancy: quoted T_a = 0.97"), "{stdout}");
    assert!(stdout.contains("T_a (adjusted)"), "{stdout}");
}
