//! End-to-end CLI tests: config parsing and validation, artifacts on
//! disk, exit codes, overrides, and byte-determinism across reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pohozaev"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pohozaev-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn classical_config(out: &Path, extra: &str) -> String {
    format!(
        r#"command = "solve"
seed = 7

[problem]
family = "classical"
dimension = 3
nonlinearity = "cubic"

[grid]
kind = "radial"
extent = 20.0
points = 2048

[solver]
tol_el = 1e-6

[output]
directory = "{}"
{extra}"#,
        out.display()
    )
}

#[test]
fn solve_writes_all_artifacts_and_is_deterministic() {
    let dir = temp_dir("solve");
    let out = dir.join("out");
    let cfg = dir.join("run.toml");
    write(&cfg, &classical_config(&out, ""));

    let status = bin().arg("solve").arg(&cfg).status().unwrap();
    assert!(status.success());
    for name in [
        "report.txt",
        "solution.csv",
        "fiber.csv",
        "energy_trace.csv",
        "summary.csv",
        "config.toml",
    ] {
        assert!(out.join(name).exists(), "missing artifact {name}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap() == "key,value");
    assert!(summary.contains("converged,true"), "{summary}");
    let energy: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("energy,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((energy - 18.897).abs() < 0.05, "energy {energy}");

    // fiber CSV has the header and a marked t* row
    let fiber = fs::read_to_string(out.join("fiber.csv")).unwrap();
    assert_eq!(fiber.lines().next().unwrap(), "t,h,k,is_t_star");
    assert_eq!(fiber.lines().filter(|l| l.ends_with(",1")).count(), 1);

    // byte-identical rerun
    let first: Vec<(String, Vec<u8>)> = ["report.txt", "solution.csv", "summary.csv"]
        .iter()
        .map(|n| (n.to_string(), fs::read(out.join(n)).unwrap()))
        .collect();
    let status = bin().arg("solve").arg(&cfg).status().unwrap();
    assert!(status.success());
    for (name, bytes) in first {
        assert_eq!(
            bytes,
            fs::read(out.join(&name)).unwrap(),
            "{name} differs between reruns"
        );
    }
}

#[test]
fn validation_error_exits_2_and_lists_all_errors() {
    let dir = temp_dir("invalid");
    let cfg = dir.join("bad.toml");
    write(
        &cfg,
        r#"command = "solve"

[problem]
family = "fractional"
dimension = 1
s = [0.6]
nonlinearity = "power(2.2)"

[grid]
kind = "box"
extent = -5.0
points = 1024
"#,
    );
    let output = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("extent"), "{stderr}");
}

#[test]
fn unknown_key_reports_line_and_column() {
    let dir = temp_dir("unknown-key");
    let out = dir.join("out");
    let cfg = dir.join("weird.toml");
    write(&cfg, &classical_config(&out, "\n[solver2]\nx = 1\n"));
    let output = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("solver2"), "{stderr}");
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = temp_dir("mismatch");
    let out = dir.join("out");
    let cfg = dir.join("run.toml");
    write(&cfg, &classical_config(&out, ""));
    let output = bin().arg("fiber").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn supercritical_fractional_names_the_bound() {
    let dir = temp_dir("supercritical");
    let cfg = dir.join("bad.toml");
    write(
        &cfg,
        r#"command = "solve"

[problem]
family = "fractional"
dimension = 1
s = [0.6]
nonlinearity = "power(2.2)"

[grid]
kind = "box"
extent = 20.0
points = 1024
"#,
    );
    let output = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("N > 2 s_n"), "{stderr}");
}

#[test]
fn fiber_command_marks_t_star() {
    let dir = temp_dir("fiber");
    let out = dir.join("out");
    let cfg = dir.join("run.toml");
    write(
        &cfg,
        &classical_config(&out, "").replace("command = \"solve\"", "command = \"fiber\""),
    );
    let status = bin().arg("fiber").arg(&cfg).status().unwrap();
    assert!(status.success());
    let fiber = fs::read_to_string(out.join("fiber.csv")).unwrap();
    let mut lines = fiber.lines();
    assert_eq!(lines.next().unwrap(), "t,h,k,is_t_star");
    let starred: Vec<&str> = fiber.lines().filter(|l| l.ends_with(",1")).collect();
    assert_eq!(starred.len(), 1);
    // the marked row carries |K| at machine scale
    let k: f64 = starred[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(k.abs() < 1e-8, "K at t* = {k}");
}

#[test]
fn check_hypotheses_exit_code_reflects_hard_failures() {
    let dir = temp_dir("check");
    let out = dir.join("out");
    let cfg = dir.join("check.toml");
    write(
        &cfg,
        &format!(
            r#"command = "check-hypotheses"

[problem]
family = "classical"
dimension = 3
nonlinearity = "cubic"

[grid]
kind = "radial"
extent = 20.0
points = 4096

[check]
samples = 10

[output]
directory = "{}"
"#,
            out.display()
        ),
    );
    let status = bin().arg("check-hypotheses").arg(&cfg).status().unwrap();
    assert!(status.success(), "classical hard checks should pass");
    assert!(out.join("report.txt").exists());

    // the anisotropic family carries the documented X6 defect: exit 5
    let cfg2 = dir.join("check-aniso.toml");
    write(
        &cfg2,
        &format!(
            r#"command = "check-hypotheses"

[problem]
family = "anisotropic"
dimension = 2
p = [1.6, 1.9]
nonlinearity = "cubic"

[grid]
kind = "box"
extent = 10.0
points = 128

[check]
samples = 10

[output]
directory = "{}"
"#,
            dir.join("out-aniso").display()
        ),
    );
    let output = bin().arg("check-hypotheses").arg(&cfg2).output().unwrap();
    assert_eq!(output.status.code(), Some(5));
}

#[test]
fn sweep_writes_combined_table() {
    let dir = temp_dir("sweep");
    let out = dir.join("out");
    let cfg = dir.join("sweep.toml");
    write(
        &cfg,
        &format!(
            r#"command = "sweep"
seed = 3

[problem]
family = "fractional"
dimension = 1
s = [0.3, 0.3]
nonlinearity = "power(2.2)"

[grid]
kind = "box"
extent = 20.0
points = 1024

[solver]
tol_el = 1e-5

[sweep]
parameter = "problem.s"
values = [[0.25, 0.25], [0.35, 0.35]]
parallelism = 2

[output]
directory = "{}"
"#,
            out.display()
        ),
    );
    let status = bin().arg("sweep").arg(&cfg).status().unwrap();
    assert!(status.success());
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "index,value,status,energy,k_residual,el_residual,iterations"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",ok,"));
    assert!(lines[2].contains(",ok,"));
    assert!(out.join("entry-000/solution.csv").exists());
    assert!(out.join("entry-001/solution.csv").exists());
}

#[test]
fn set_overrides_reach_nested_keys() {
    let dir = temp_dir("override");
    let out = dir.join("out");
    let cfg = dir.join("run.toml");
    write(&cfg, &classical_config(&out, ""));
    let status = bin()
        .arg("solve")
        .arg(&cfg)
        .arg("--set")
        .arg("grid.points=1024")
        .arg("--set")
        .arg(format!("output.directory='{}'", dir.join("out2").display()))
        .status()
        .unwrap();
    assert!(status.success());
    let effective = fs::read_to_string(dir.join("out2/config.toml")).unwrap();
    assert!(effective.contains("points = 1024"), "{effective}");
}

#[test]
fn output_root_env_var_prefixes_relative_directories() {
    let dir = temp_dir("envroot");
    let cfg = dir.join("run.toml");
    write(
        &cfg,
        &classical_config(Path::new("nested/run"), "").replace("points = 2048", "points = 1024"),
    );
    let status = bin()
        .arg("solve")
        .arg(&cfg)
        .env("POHOZAEV_OUTPUT_ROOT", &dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("nested/run/summary.csv").exists());
}

#[test]
fn jump_solve_writes_stage_table() {
    let dir = temp_dir("jump");
    let out = dir.join("out");
    let cfg = dir.join("run.toml");
    write(
        &cfg,
        &classical_config(&out, "")
            .replace("nonlinearity = \"cubic\"", "nonlinearity = \"cubic-jump(1.0, 1.0)\"")
            .replace("points = 2048", "points = 4096"),
    );
    let status = bin().arg("solve").arg(&cfg).status().unwrap();
    assert!(status.success());
    let stages = fs::read_to_string(out.join("stages.csv")).unwrap();
    assert_eq!(
        stages.lines().next().unwrap(),
        "eps,energy,el_residual,violation_measure"
    );
    assert_eq!(stages.lines().count(), 5);
}
