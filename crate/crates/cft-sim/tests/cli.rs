//! End-to-end tests of the command-line interface: exit codes, output
//! files, and determinism of emitted artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cft-sim"))
}

fn run_ok(args: &[&str], extra: impl FnOnce(&mut Command)) -> Output {
    let mut cmd = cli();
    cmd.args(args);
    extra(&mut cmd);
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn missing_config_file_exits_with_code_two() {
    let out = cli()
        .args(["run", "--config", "/nonexistent/path.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn invalid_config_value_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "disconnection_rate = 0.97\n").unwrap();
    let out = cli()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnection_rate"));
}

#[test]
fn unknown_figure_exits_with_code_two() {
    let out = cli().args(["sweep", "--figure", "f42"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_all_prints_one_line_per_case() {
    let out = run_ok(&["oracle", "--case", "all"], |_| {});
    let stdout = String::from_utf8_lossy(&out.stdout);
    let passes = stdout.lines().filter(|l| l.starts_with("PASS")).count();
    assert_eq!(passes, 8, "stdout:\n{stdout}");
}

#[test]
fn oracle_single_case_resolves_by_name() {
    let out = run_ok(&["oracle", "--case", "write-daalg-late"], |_| {});
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("write-daalg-late"));
}

#[test]
fn oracle_unknown_case_exits_with_code_two() {
    let out = cli().args(["oracle", "--case", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("small.cfg");
    std::fs::write(
        &cfg,
        "horizon = 1800\ndisconnection_rate = 0.6\nwrite_fraction = 0.8\nseed = 3\n",
    )
    .unwrap();
    cfg
}

#[test]
fn run_writes_results_and_trace_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(
            &[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--trace",
                "--out",
                out.to_str().unwrap(),
            ],
            |_| {},
        );
    }
    let results_a = std::fs::read(out_a.join("results.csv")).unwrap();
    let results_b = std::fs::read(out_b.join("results.csv")).unwrap();
    assert_eq!(results_a, results_b);
    let trace_a = std::fs::read(out_a.join("trace_3.txt")).unwrap();
    let trace_b = std::fs::read(out_b.join("trace_3.txt")).unwrap();
    assert!(!trace_a.is_empty());
    assert_eq!(trace_a, trace_b, "event trace must be bit-identical");
    // Stable field order in the trace.
    let text = String::from_utf8(trace_a).unwrap();
    for line in text.lines().take(50) {
        assert!(
            line.starts_with("t=") && line.contains(" role=") && line.contains(" event=")
                && line.contains(" txn="),
            "malformed trace line: {line}"
        );
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out_dir = dir.path().join("out");
    run_ok(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "99",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        |_| {},
    );
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let row = results.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(2), Some("99"), "row: {row}");
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let env_out = dir.path().join("env_out");
    run_ok(&["run", "--config", cfg.to_str().unwrap()], |cmd| {
        cmd.env("CFT_SIM_OUT", &env_out);
    });
    assert!(env_out.join("results.csv").exists());
}

#[test]
fn sweep_f3_emits_sorted_results_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    run_ok(
        &[
            "sweep",
            "--figure",
            "f3",
            "--seeds",
            "1",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        |_| {},
    );
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    // 11 disconnection points x 2 variants x 1 seed, plus the header.
    assert_eq!(lines.len(), 23);
    assert_eq!(lines[0].split(',').count(), 16);
    // Sorted by grid point, then variant.
    let mut keys = Vec::new();
    for row in &lines[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        let d: f64 = cols[3].parse().unwrap();
        keys.push((d, cols[1].to_string()));
        assert_eq!(cols[0], "f3");
    }
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    assert_eq!(keys, sorted);

    let plot = std::fs::read_to_string(out_dir.join("plot_f3.csv")).unwrap();
    let plot_lines: Vec<&str> = plot.lines().collect();
    assert_eq!(plot_lines.len(), 12); // header + 11 grid points
    assert_eq!(plot_lines[0], "disconnection_rate,standard2pc,adhoc_only");
}
