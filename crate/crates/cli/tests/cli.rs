//! End-to-end tests against the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-sde"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const ZERO_CONFIG: &str = r#"
scenario = "zero"
paths = 8
seed = 7

[grid]
horizon = 1.0
steps = 64

[diagnostics]
stability_epsilons = [0.5]
stability_gap = 0.0
"#;

#[test]
fn zero_scenario_all_diagnostics_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", ZERO_CONFIG);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    // D(0,1) = 0 in the convergence report.
    let conv = fs::read_to_string(out_dir.join("reports/convergence.txt")).unwrap();
    assert!(conv.contains("verdict converged"), "{conv}");
    let line = conv
        .lines()
        .find(|l| l.starts_with("0\t"))
        .expect("successive distance row");
    assert!(line.starts_with("0\t0e0\t0e0"), "D(0,1) row: {line}");

    // Stability gap is exactly zero.
    let stab = fs::read_to_string(out_dir.join("reports/stability.txt")).unwrap();
    assert!(stab.contains("estimate 0e0"), "{stab}");
    assert!(stab.contains("pass true"), "{stab}");

    assert!(out_dir.join("manifest.txt").exists());
    assert!(out_dir.join("plot/iterate_distances.tsv").exists());
}

#[test]
fn negative_control_fails_assumption1_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "control.toml",
        r#"
scenario = "hoelder-negative-control"
paths = 8

[grid]
horizon = 1.0
steps = 64

[diagnostics]
osgood = false
cauchy = false
moment_bound = false
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    assert!(
        stderr(&out).contains("assumption1"),
        "stderr must name the diagnostic: {}",
        stderr(&out)
    );
    // The report localises the worst pair near the origin.
    let report = fs::read_to_string(out_dir.join("reports/assumption1.txt")).unwrap();
    assert!(report.contains("pass false"), "{report}");
}

#[test]
fn check_config_reports_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        "scenario = \"zero\"\npaths = 1\n[grid]\nhorizon = 1.0\nsteps = 1000\n",
    );
    let out = bin().args(["check-config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("grid.steps"), "{err}");
    assert!(err.contains("paths"), "{err}");
}

#[test]
fn check_config_accepts_minimal_and_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "ok.toml", "scenario = \"zero\"\npaths = 4\n");
    let out = bin().args(["check-config"]).arg(&config).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("solver = 1e-6") || text.contains("solver = 0.000001"),
        "{text}"
    );
    assert!(
        text.contains("quadrature = 1e-9") || text.contains("quadrature = 0.000000001"),
        "{text}"
    );
}

#[test]
fn unknown_scenario_lists_known_names() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "foo.toml", "scenario = \"foo\"\npaths = 4\n");
    let out = bin().args(["check-config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("foo") && err.contains("ou-jump"), "{err}");
}

#[test]
fn list_subcommands_show_registries() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "zero",
        "deterministic-exp",
        "ou-jump",
        "log-modulus-drift",
        "hoelder-negative-control",
    ] {
        assert!(text.contains(name), "missing {name}: {text}");
    }
    let out = bin().arg("list-moduli").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["linear", "log", "log-log", "hoelder-3/4"] {
        assert!(text.contains(name), "missing {name}: {text}");
    }
}

#[test]
fn repeated_runs_emit_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ou.toml",
        r#"
scenario = "ou-jump"
paths = 32
seed = 11

[grid]
horizon = 1.0
steps = 128

[diagnostics]
stability_epsilons = [1.0]
"#,
    );
    let run = |out_dir: &Path| {
        let out = bin()
            .args(["run"])
            .arg(&config)
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&out_a);
    run(&out_b);
    for sub in ["reports", "plot"] {
        let mut names: Vec<_> = fs::read_dir(out_a.join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = fs::read(out_a.join(sub).join(&name)).unwrap();
            let b = fs::read(out_b.join(sub).join(&name)).unwrap();
            assert_eq!(a, b, "{sub}/{name:?} differs between runs");
        }
    }
}

#[test]
fn env_var_names_the_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", "scenario = \"zero\"\npaths = 4\n");
    let out_dir = dir.path().join("from-env");
    let out = bin()
        .args(["run"])
        .arg(&config)
        .env("LEVY_SDE_OUT_DIR", &out_dir)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(out_dir.join("manifest.txt").exists());
}

#[test]
fn mean_oracle_diagnostic_passes_for_ou_jump() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ou.toml",
        r#"
scenario = "ou-jump"
paths = 64
seed = 5

[grid]
horizon = 1.0
steps = 64

[diagnostics]
assumption1 = false
osgood = false
uniqueness = false
mean_oracle = true
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        stdout(&out),
        stderr(&out)
    );
    let report = fs::read_to_string(out_dir.join("reports/mean_oracle.txt")).unwrap();
    assert!(report.contains("pass true"), "{report}");
    assert!(report.contains("[refinement]"), "{report}");
}

#[test]
fn cli_overrides_take_effect() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "zero.toml", ZERO_CONFIG);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&config)
        .args(["--steps", "32", "--seed", "99", "--paths", "4"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed 99"), "{manifest}");
    assert!(manifest.contains("steps = 32"), "{manifest}");

    // An override that breaks an invariant is rejected up front.
    let out = bin()
        .args(["run"])
        .arg(&config)
        .args(["--steps", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("grid.steps"));
}
