#![allow(clippy::excessive_precision)]
use std::fs;
use std::path::Path;
use std::process::Command;

use lsw_harness::{run_particles, run_pde, HarnessError, RunConfig};

const TWO: &str = r#"
horizon = 1.0
[scale]
delta = 0.5
alpha = 2.0
zero_drag = true
[initial.radii]
kind = "explicit"
radii = [1.0, 2.0]
"#;

const SMALL: &str = r#"
horizon = 0.2
[scale]
delta = 0.2
alpha = 2.0
[initial]
seed = 11
jitter = 0.1
[initial.radii]
kind = "uniform"
low = 0.5
high = 1.5
[pde]
r_max = 3.0
cells = 200
[survey]
samples = 500
defect_particles = 50
"#;

fn lsw(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lsw"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn two_particle_run_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TWO);
    let out = dir.path().join("out");
    let (code, stdout, stderr) =
        lsw(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("1 of 2 particles active"), "{stdout}");

    let text = fs::read_to_string(out.join("extinctions.csv")).unwrap();
    let row = text.lines().last().unwrap();
    let (index, time) = row.split_once(',').unwrap();
    assert_eq!(index, "0");
    let t: f64 = time.parse().unwrap();
    assert!((t - 0.866750800136170034420).abs() <= 1e-6, "t = {t}");

    let hash = RunConfig::from_toml(TWO).unwrap().hash();
    for file in [
        "trajectory.csv",
        "extinctions.csv",
        "invariants.csv",
        "radii.csv",
    ] {
        let first = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(
            first.lines().next().unwrap(),
            format!("# config_hash={hash}"),
            "{file}"
        );
    }
    let invariants = fs::read_to_string(out.join("invariants.csv")).unwrap();
    assert!(!invariants.contains(",false,"), "{invariants}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_particles(&cfg, &a).unwrap();
    run_particles(&cfg, &b).unwrap();
    for file in [
        "trajectory.csv",
        "radii.csv",
        "extinctions.csv",
        "invariants.csv",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        lsw(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        lsw(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            b.to_str().unwrap(),
            "--seed",
            "12"
        ])
        .0,
        0
    );
    let ta = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let tb = fs::read_to_string(b.join("trajectory.csv")).unwrap();
    assert_ne!(ta.lines().next(), tb.lines().next());
    let saved = RunConfig::load(&b.join("config.toml")).unwrap();
    assert_eq!(saved.initial.seed, 12);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &SMALL.replace("alpha = 2.0", "alpha = 1.2"));
    let (code, _, stderr) = lsw(&["simulate", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(
        stderr.contains("alpha must exceed 3/2 + epsilon"),
        "{stderr}"
    );

    let unknown = write_config(
        dir.path(),
        &SMALL.replace("seed = 11", "seed = 11\nsed = 3"),
    );
    let (code, _, stderr) = lsw(&["pde", "--config", &unknown]);
    assert_eq!(code, 2);
    assert!(stderr.contains("sed"), "{stderr}");

    let (code, _, stderr) = lsw(&["sweep", "--config", &write_config(dir.path(), SMALL)]);
    assert_eq!(code, 2);
    assert!(stderr.contains("at least 3 points"), "{stderr}");
}

#[test]
fn diagnostics_only_flag_opens_the_regime_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("alpha = 2.0", "alpha = 1.2"));
    let out = dir.path().join("out");
    let (code, stdout, stderr) = lsw(&[
        "field-survey",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--diagnostics-only",
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("delta 0.2"), "{stdout}");
    let survey = fs::read_to_string(out.join("survey.csv")).unwrap();
    assert_eq!(survey.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn zero_initial_density_is_rejected() {
    let text = format!(
        "{SMALL}\n[pde.initial]\nkind = \"cells\"\nvalues = [{}]\n",
        vec!["0.0"; 200].join(", ")
    );
    let cfg = RunConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_pde(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");
    assert!(err.to_string().contains("extinct input"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn pde_and_compare_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let (code, _, stderr) = lsw(&["pde", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(out.join("moments.csv").exists());
    assert!(out.join("profiles/profile_0000.csv").exists());
    let (code, stdout, stderr) =
        lsw(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("weak residual"), "{stdout}");
    let table = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("time,w1")));
}

#[test]
fn sweep_writes_summary_and_slopes() {
    let text = SMALL.replace(
        "[survey]",
        "[sweep]\ndeltas = [0.2, 0.15, 0.1]\nworkers = 2\n\n[survey]",
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let (code, _, stderr) = lsw(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().filter(|l| l.contains(",ok,")).count(),
        3,
        "{summary}"
    );
    let slopes = fs::read_to_string(out.join("slopes.csv")).unwrap();
    assert!(slopes.contains("\nresidual,"), "{slopes}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
