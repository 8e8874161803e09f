//! End-to-end runs of the `bet` binary: flag validation, exit codes, and
//! artifact round trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bet"))
}

fn run(args: &[&str]) -> Output {
    bet().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bet-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// 64 observations at cell centres of the 4x2 grid: 25 points in the
/// positive region of A2B1 and 39 in the negative.
fn write_figure_fixture(path: &Path) {
    let counts: [[u32; 2]; 4] = [[6, 10], [10, 7], [6, 10], [9, 6]];
    let mut body = String::from("x,y\n");
    for (cu, row) in counts.iter().enumerate() {
        for (cv, &k) in row.iter().enumerate() {
            for _ in 0..k {
                body.push_str(&format!(
                    "{},{}\n",
                    (cu as f64 + 0.5) / 4.0,
                    (cv as f64 + 0.5) / 2.0
                ));
            }
        }
    }
    fs::write(path, body).unwrap();
}

#[test]
fn test_command_reports_the_strongest_interaction() {
    let dir = temp_dir("test");
    let input = dir.join("figure.csv");
    write_figure_fixture(&input);
    let out = run(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--depth",
        "2,1",
        "--marginals",
        "known-uniform",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("strongest: A2B1"), "{text}");
    assert!(text.contains("s = -14"), "{text}");
    assert!(text.contains("n_tests = 3"), "{text}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn json_and_csv_artifacts_carry_identical_numbers() {
    let dir = temp_dir("payload");
    let input = dir.join("figure.csv");
    write_figure_fixture(&input);
    let csv_path = dir.join("out.csv");
    let json_path = dir.join("out.json");
    for (path, format) in [(&csv_path, "csv"), (&json_path, "json")] {
        let out = run(&[
            "test",
            "--input",
            input.to_str().unwrap(),
            "--depth",
            "2,1",
            "--marginals",
            "known-uniform",
            "--out",
            path.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert!(out.status.success());
    }
    let csv = fs::read_to_string(&csv_path).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    let csv_rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), csv_rows.len());
    for (json_row, csv_row) in rows.iter().zip(&csv_rows) {
        let fields: Vec<&str> = csv_row.split(',').collect();
        assert_eq!(json_row["interaction"].as_str().unwrap(), fields[0]);
        assert_eq!(json_row["s"].as_i64().unwrap(), fields[1].parse::<i64>().unwrap());
        let p_csv: f64 = fields[3].parse().unwrap();
        assert_eq!(json_row["p"].as_f64().unwrap().to_bits(), p_csv.to_bits());
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = temp_dir("simulate");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--scenario",
            "sine",
            "--level",
            "2",
            "--n",
            "128",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // Output feeds straight back into `test`.
    let out = run(&["test", "--input", a.to_str().unwrap(), "--d-max", "4"]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("strongest:"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn small_samples_fail_validation() {
    let dir = temp_dir("small");
    let input = dir.join("tiny.csv");
    fs::write(&input, "1,2\n2,1\n3,4\n4,3\n").unwrap();
    let out = run(&["test", "--input", input.to_str().unwrap(), "--d-max", "4"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("below 2^4"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_flags_and_scenarios_exit_2() {
    let out = run(&["test", "--input", "x.csv", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--scenario", "spiral"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let out = run(&["test", "--input", "/nonexistent/nowhere.csv"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = temp_dir("parse");
    let input = dir.join("bad.csv");
    fs::write(&input, "1,2\n3,oops\n").unwrap();
    let out = run(&["test", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains(":2:"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn screen_flags_a_planted_pair() {
    let dir = temp_dir("screen");
    let data = dir.join("matrix.csv");
    let sim = dir.join("pair.csv");
    let out = run(&[
        "simulate", "--scenario", "null", "--n", "128", "--seed", "3", "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let xy = fs::read_to_string(&sim).unwrap();
    let mut body = String::from("g1,g2,g3\n");
    for line in xy.lines().skip(1) {
        let (x, y) = line.split_once(',').unwrap();
        body.push_str(&format!("{x},{y},{x}\n")); // g3 duplicates g1
    }
    fs::write(&data, body).unwrap();
    let report = dir.join("report.csv");
    let out = run(&[
        "screen",
        "--input",
        data.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("1 significant"), "{text}");
    let csv = fs::read_to_string(&report).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("g1,g3,"), "{first}");
    assert!(first.ends_with("true"), "{first}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn plot_region_emits_panel_sets() {
    let dir = temp_dir("plot");
    let input = dir.join("figure.csv");
    write_figure_fixture(&input);
    let panels = dir.join("panels");
    let out = run(&[
        "plot-region",
        "--input",
        input.to_str().unwrap(),
        "--depth",
        "2,1",
        "--marginals",
        "known-uniform",
        "--out",
        panels.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let files: Vec<_> = fs::read_dir(&panels).unwrap().collect();
    assert_eq!(files.len(), 7, "4 marginal + 3 cross panels");

    let single = dir.join("one.svg");
    let out = run(&[
        "plot-region",
        "--input",
        input.to_str().unwrap(),
        "--depth",
        "2,1",
        "--marginals",
        "known-uniform",
        "--interaction",
        "A2B1",
        "--out",
        single.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let svg = fs::read_to_string(&single).unwrap();
    assert!(svg.contains("positive: 25"), "{svg:.300}");
    assert!(svg.contains("negative: 39"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn power_writes_the_grid_schema() {
    let dir = temp_dir("power");
    let grid = dir.join("grid.csv");
    let out = run(&[
        "power",
        "--scenario",
        "linear",
        "--levels",
        "1,2",
        "--n",
        "64",
        "--reps",
        "40",
        "--seed",
        "5",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(&grid).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,method,level,n,alpha,reps,power,se"
    );
    assert_eq!(lines.count(), 2);
    fs::remove_dir_all(&dir).ok();
}
