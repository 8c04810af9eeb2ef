use std::fs;
use std::path::Path;
use std::process::Command as Process;

use kicked_kerr_cli::config::{parse_command, Command};
use kicked_kerr_cli::manifest::RunStatus;
use kicked_kerr_cli::table::Table;
use kicked_kerr_cli::{emit_plot_data, execute, RunConfig};

fn config(args: &str, out: &Path) -> RunConfig {
    let mut v: Vec<String> = args.split_whitespace().map(String::from).collect();
    v.push("--out".into());
    v.push(out.display().to_string());
    match parse_command(&v).unwrap() {
        Command::Run(c) => *c,
        other => panic!("{other:?}"),
    }
}

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_kicked-kerr"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(bin(&["--help"]).0, 0);
    assert_eq!(bin(&["--epsilon", "0.1"]).0, 2);
    assert_eq!(bin(&["--mode", "trajectory", "--frobnicate"]).0, 2);
    assert_eq!(
        bin(&[
            "--mode",
            "trajectory",
            "--kicks",
            "3",
            "--dim",
            "16",
            "--buffer",
            "4",
            "--out",
            d
        ])
        .0,
        0
    );
    // a strong kick in a tiny space runs into the cutoff
    let (code, stdout, _) = bin(&[
        "--mode",
        "trajectory",
        "--epsilon",
        "0.8",
        "--dim",
        "12",
        "--buffer",
        "4",
        "--kicks",
        "30",
        "--out",
        d,
    ]);
    assert_eq!(code, 3);
    assert!(stdout.contains("truncation_unsafe"));
    // output directory path is an existing file
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    assert_eq!(
        bin(&[
            "--mode",
            "trajectory",
            "--kicks",
            "2",
            "--dim",
            "8",
            "--buffer",
            "2",
            "--out",
            file.to_str().unwrap()
        ])
        .0,
        4
    );
}

#[test]
fn trajectory_csv_has_one_row_per_kick() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--mode trajectory --epsilon 0.1 --delta-eps 0.001 --kicks 500 --dim 32 --buffer 16",
        dir.path(),
    );
    let m = execute(&c).unwrap();
    assert_eq!(m.runs[0].status, RunStatus::Ok);
    let t = Table::read(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(t.columns, ["k", "F", "F_N", "mean_n"]);
    assert_eq!(t.rows.len(), 501);
    assert_eq!(t.column("F").unwrap()[0], 1.0);
    assert_eq!(t.meta("epsilon").unwrap().parse::<f64>().unwrap(), 0.1);
    for f in &m.files {
        assert!(dir.path().join(&f.path).exists());
    }
}

#[test]
fn rerun_is_detected_and_damage_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--mode trajectory --kicks 50 --dim 24 --buffer 8",
        dir.path(),
    );
    let first = execute(&c).unwrap();
    assert!(!first.reused);
    let again = execute(&c).unwrap();
    assert!(again.reused);
    assert_eq!(again.config_hash, first.config_hash);
    // a modified output invalidates the earlier run
    fs::write(dir.path().join("trajectory.csv"), "truncated").unwrap();
    let redo = execute(&c).unwrap();
    assert!(!redo.reused);
    assert_eq!(
        Table::read(&dir.path().join("trajectory.csv"))
            .unwrap()
            .rows
            .len(),
        51
    );
}

#[test]
fn no_temporaries_left_behind() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--mode trajectory --sweep epsilon 0.1 0.3 3 --kicks 20 --dim 24 --buffer 8 --workers 3",
        dir.path(),
    );
    let m = execute(&c).unwrap();
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut expected: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    expected.push(format!("manifest_{}.json", &m.config_hash[..16]));
    expected.sort();
    assert_eq!(names, expected);
}

#[test]
fn sweep_outputs_keyed_by_index() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        "--mode trajectory --sweep epsilon 0.1 0.3 3 --kicks 10 --dim 24 --buffer 8 --workers 2",
        dir.path(),
    );
    let m = execute(&c).unwrap();
    let keys: Vec<&str> = m.runs.iter().map(|r| r.key.as_str()).collect();
    assert_eq!(
        keys,
        [
            "trajectory_epsilon_0000",
            "trajectory_epsilon_0001",
            "trajectory_epsilon_0002"
        ]
    );
    assert_eq!(m.runs[2].system.epsilon, 0.3);
}

#[test]
fn failed_point_does_not_abort_sweep() {
    let dir = tempfile::tempdir().unwrap();
    // the lyapunov estimate needs far more samples than 30 kicks give
    let c = config(
        "--mode lyapunov --sweep epsilon 0.1 0.2 2 --kicks 30 --dim 24 --buffer 8",
        dir.path(),
    );
    let m = execute(&c).unwrap();
    assert_eq!(m.runs.len(), 2);
    assert!(m
        .runs
        .iter()
        .all(|r| r.status == RunStatus::Failed && r.message.is_some()));
    assert!(dir.path().join("lyapunov_summary.csv").exists());
}

#[test]
fn json_format_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = config(
        "--mode trajectory --kicks 20 --dim 24 --buffer 8",
        dir.path(),
    );
    let json = config(
        "--mode trajectory --kicks 20 --dim 24 --buffer 8 --format json",
        dir.path(),
    );
    execute(&csv).unwrap();
    execute(&json).unwrap();
    let a = Table::read(&dir.path().join("trajectory.csv")).unwrap();
    let b = Table::read(&dir.path().join("trajectory.json")).unwrap();
    for col in ["k", "F", "F_N", "mean_n"] {
        assert_eq!(a.column(col).unwrap(), b.column(col).unwrap());
    }
}

#[test]
fn figure_data_from_runs() {
    let dir = tempfile::tempdir().unwrap();
    let err = emit_plot_data(dir.path(), "fig3").unwrap_err().to_string();
    assert!(err.contains("trajectory") && err.contains("0.05"), "{err}");

    execute(&config(
        "--mode trajectory --epsilon 0.1 --delta-eps 0.05 --kicks 40 --dim 32 --buffer 16",
        dir.path(),
    ))
    .unwrap();
    let files = emit_plot_data(dir.path(), "fig3").unwrap();
    let dat = fs::read_to_string(&files[0]).unwrap();
    let rows: Vec<Vec<f64>> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.iter().all(|r| r.len() == 2));
    assert_eq!(rows[3][0], 9.0);
    assert!(rows[3][1] < 0.0);
    assert!(fs::read_to_string(dir.path().join("figures/fig3.txt"))
        .unwrap()
        .contains("k^2"));

    execute(&config(
        "--mode trajectory --epsilon 0.505 --delta-eps 0.001 --kicks 40 --dim 32 --buffer 16",
        dir.path(),
    ))
    .unwrap();
    let files = emit_plot_data(dir.path(), "fig7c").unwrap();
    let header = fs::read_to_string(&files[0]).unwrap();
    assert!(header.starts_with("# k mean_n"));

    let err = emit_plot_data(dir.path(), "fig99").unwrap_err().to_string();
    assert!(err.contains("fig1") && err.contains("fig8"), "{err}");
}

#[test]
fn bifurcation_and_entropy_modes() {
    let dir = tempfile::tempdir().unwrap();
    let m = execute(&config(
        "--mode bifurcation --sweep epsilon 0.0 0.6 61 --analysis.samples 100",
        dir.path(),
    ))
    .unwrap();
    assert_eq!(m.files.len(), 2);
    let scatter = Table::read(&dir.path().join("bifurcation.csv")).unwrap();
    assert_eq!(scatter.rows.len(), 61 * 100);
    emit_plot_data(dir.path(), "bifurcation").unwrap();

    let c = config(
        "--mode entropy_sweep --sweep epsilon 0.05 0.15 3 --kicks 400 --dim 32 --buffer 16",
        dir.path(),
    );
    execute(&c).unwrap();
    let t = Table::read(&dir.path().join("entropy_sweep.csv")).unwrap();
    assert_eq!(t.columns, ["epsilon", "entropy", "bins_used"]);
    assert_eq!(t.rows.len(), 3);
    emit_plot_data(dir.path(), "fig8").unwrap();

    let bad = config("--mode entropy_sweep --kicks 10", dir.path());
    assert_eq!(execute(&bad).unwrap_err().exit_code(), 2);
}
