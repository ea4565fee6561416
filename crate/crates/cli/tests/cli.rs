//! End-to-end tests of the binary: exit codes, CSV schemas, determinism,
//! and config-file precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_tensorkv")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tensorkv-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn bench_writes_pinned_header_and_summary() {
    let dir = scratch_dir("bench");
    let output = run_in(
        &dir,
        &[
            "bench",
            "--n-values",
            "8,16",
            "--d-values",
            "4",
            "--out",
            "bench.csv",
            "--summary-path",
            "bench.json",
        ],
    );
    assert!(output.status.success(), "{output:?}");

    let csv = read(&dir.join("bench.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "layout,n,d,step,append_ns,attend_ns,append_ops,attend_ops,logical_bytes"
    );
    // Two layouts, two n values: 2 * (8 + 16) rows.
    assert_eq!(lines.count(), 48);

    // Every row's logical_bytes obeys the closed-form law for its layout.
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let (layout, d, step, bytes) = (
            cells[0],
            cells[2].parse::<u64>().unwrap(),
            cells[3].parse::<u64>().unwrap(),
            cells[8].parse::<u64>().unwrap(),
        );
        let expected = match layout {
            "four" => 4 * step * d * 8,
            _ => 2 * step * step * d * 8,
        };
        assert_eq!(bytes, expected, "row: {line}");
    }

    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("bench.json"))).unwrap();
    assert_eq!(summary["command"], "bench");
    assert_eq!(summary["final_step_gap_exact"], true);
    let slopes = summary["memory_slopes"].as_array().unwrap();
    for slope in slopes {
        let value = slope["slope"].as_f64().unwrap();
        match slope["layout"].as_str().unwrap() {
            "four" => assert!((value - 1.0).abs() < 0.05),
            "two" => assert!((value - 2.0).abs() < 0.05),
            other => panic!("unexpected layout {other}"),
        }
    }
}

#[test]
fn witness_default_invocation_passes_the_gate() {
    // Bare `witness` runs the four protocol at n = 8 with 200 trials.
    let dir = scratch_dir("witness-defaults");
    let output = run_in(&dir, &["witness", "--summary-path", "w.json"]);
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("w.json"))).unwrap();
    assert_eq!(summary["protocol"], "four");
    assert_eq!(summary["n"], 8);
    assert_eq!(summary["d"], 1664);
    assert_eq!(summary["trials"], 200);
    assert!(summary["success_rate"].as_f64().unwrap() >= 0.9);
}

#[test]
fn bench_csv_is_deterministic_outside_wall_time_columns() {
    let dir = scratch_dir("determinism");
    let args = [
        "bench",
        "--n-values",
        "8,16",
        "--d-values",
        "4,8",
        "--seed",
        "31",
    ];
    let mask = |text: &str| -> Vec<String> {
        text.lines()
            .map(|line| {
                let cells: Vec<&str> = line.split(',').collect();
                // Columns 4 and 5 are append_ns/attend_ns, exempt from the
                // determinism contract.
                cells
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 4 && *i != 5)
                    .map(|(_, c)| *c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };

    let output = run_in(&dir, &[&args[..], &["--out", "a.csv"]].concat());
    assert!(output.status.success());
    let output = run_in(&dir, &[&args[..], &["--out", "b.csv"]].concat());
    assert!(output.status.success());
    assert_eq!(
        mask(&read(&dir.join("a.csv"))),
        mask(&read(&dir.join("b.csv")))
    );
}

#[test]
fn witness_gate_and_exit_codes() {
    let dir = scratch_dir("witness");
    let output = run_in(
        &dir,
        &[
            "witness",
            "--protocol",
            "four",
            "--n",
            "4",
            "--trials",
            "10",
            "--out",
            "w.csv",
            "--summary-path",
            "w.json",
        ],
    );
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("w.json"))).unwrap();
    assert_eq!(summary["trials"], 10);
    assert!(summary["success_rate"].as_f64().unwrap() >= 0.9);
    assert!(summary["min_clean_margin"].as_f64().unwrap() > 0.0);
    let csv = read(&dir.join("w.csv"));
    assert!(csv.starts_with("trial,protocol,n,d,true_bit,recovered_bit,output_coordinate,"));
    assert_eq!(csv.lines().count(), 11);

    // trials = 0 is a usage error.
    let output = run_in(&dir, &["witness", "--trials", "0"]);
    assert_eq!(output.status.code(), Some(64));

    // A spike constant that cannot separate the two bit ranges is a
    // constraint violation.
    let output = run_in(
        &dir,
        &["witness", "--n", "8", "--epsilon", "0.45", "--trials", "5"],
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("separation violated"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_values_are_usage_errors() {
    let dir = scratch_dir("usage");
    let output = run_in(&dir, &["bench", "--layout", "diagonal"]);
    assert_eq!(output.status.code(), Some(64));
    let output = run_in(&dir, &["nonsense"]);
    assert_eq!(output.status.code(), Some(64));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = scratch_dir("config");
    std::fs::write(
        dir.join("run.conf"),
        "# harness settings\nseed = 31\nn-values = 8\nd-values = 4\nlayout = four\n",
    )
    .unwrap();

    let output = run_in(
        &dir,
        &["bench", "--config", "run.conf", "--out", "from_config.csv"],
    );
    assert!(output.status.success());
    let output = run_in(
        &dir,
        &[
            "bench",
            "--seed",
            "31",
            "--n-values",
            "8",
            "--d-values",
            "4",
            "--layout",
            "four",
            "--out",
            "from_flags.csv",
        ],
    );
    assert!(output.status.success());
    let strip_times = |text: &str| -> Vec<String> {
        text.lines()
            .map(|line| {
                line.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != 4 && *i != 5)
                    .map(|(_, c)| c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    assert_eq!(
        strip_times(&read(&dir.join("from_config.csv"))),
        strip_times(&read(&dir.join("from_flags.csv")))
    );

    // Flags override the config file.
    let output = run_in(
        &dir,
        &[
            "bench",
            "--config",
            "run.conf",
            "--n-values",
            "16",
            "--out",
            "override.csv",
        ],
    );
    assert!(output.status.success());
    let csv = read(&dir.join("override.csv"));
    assert!(csv.lines().skip(1).all(|line| line.starts_with("four,16,")));

    // Malformed config lines are usage errors.
    std::fs::write(dir.join("bad.conf"), "seed 31\n").unwrap();
    let output = run_in(&dir, &["bench", "--config", "bad.conf"]);
    assert_eq!(output.status.code(), Some(64));
}

#[test]
fn jl_check_reports_rates_per_multiplier() {
    let dir = scratch_dir("jlcheck");
    let output = run_in(
        &dir,
        &[
            "jl-check",
            "--n",
            "32",
            "--epsilon",
            "0.3",
            "--multipliers",
            "2,8",
            "--seeds",
            "10",
            "--out",
            "jl.csv",
            "--summary-path",
            "jl.json",
        ],
    );
    assert!(output.status.success(), "{output:?}");
    let csv = read(&dir.join("jl.csv"));
    assert!(csv.starts_with("multiplier,n,epsilon,d,seeds,violations,violation_rate"));
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("jl.json"))).unwrap();
    assert_eq!(summary["rates"].as_array().unwrap().len(), 2);
}

#[test]
fn subgen_eval_lossless_limits_and_flat_memory() {
    let dir = scratch_dir("subgen");

    // Single-cluster streams are lossless.
    let output = run_in(
        &dir,
        &[
            "subgen-eval",
            "--n-values",
            "32",
            "--memory-n-values",
            "100,400",
            "--m-true",
            "1",
            "--seeds",
            "5",
            "--out",
            "m1.csv",
            "--summary-path",
            "m1.json",
        ],
    );
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("m1.json"))).unwrap();
    for row in summary["error_table"].as_array().unwrap() {
        assert!(row["max_abs_error"].as_f64().unwrap() <= 1e-12);
    }
    assert_eq!(summary["memory_flat_across_n"], true);

    // delta = 0 clusters every distinct key alone, also lossless.
    let output = run_in(
        &dir,
        &[
            "subgen-eval",
            "--n-values",
            "32",
            "--memory-n-values",
            "64,128",
            "--m-true",
            "4",
            "--delta",
            "0",
            "--seeds",
            "5",
            "--bound-epsilon",
            "1e-9",
            "--out",
            "d0.csv",
            "--summary-path",
            "d0.json",
        ],
    );
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("d0.json"))).unwrap();
    for row in summary["error_table"].as_array().unwrap() {
        assert!(row["max_abs_error"].as_f64().unwrap() <= 1e-12);
    }

    // The e/3 preset parses.
    let output = run_in(
        &dir,
        &[
            "subgen-eval",
            "--n-values",
            "16",
            "--memory-n-values",
            "16,32",
            "--m-true",
            "2",
            "--delta",
            "e/3",
            "--seeds",
            "2",
            "--out",
            "preset.csv",
        ],
    );
    assert!(output.status.success(), "{output:?}");
}
