use std::path::PathBuf;
use std::process::{Command, Output};

use stemflow::PopulationTrace;

fn stemflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stemflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stemflow-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(stemflow(&[]).status.code(), Some(2));
    assert_eq!(stemflow(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(stemflow(&["simulate", "--model", "approx9"]).status.code(), Some(2));
    assert_eq!(stemflow(&["reproduce", "--figure", "8"]).status.code(), Some(2));
    let o = stemflow(&["--set", "no_such_key=1", "steady"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));
}

#[test]
fn domain_errors_exit_with_1() {
    let o = stemflow(&["steady", "--rho-d", "5", "--b", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}

#[test]
fn help_exits_with_0() {
    assert_eq!(stemflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_writes_a_readable_trace() {
    let path = scratch("simulate").join("trace.csv");
    let o = stemflow(&[
        "simulate",
        "--model",
        "approx3",
        "--days",
        "3",
        "--record-every",
        "0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let trace = PopulationTrace::read_csv(std::fs::File::open(&path).unwrap(), "approx3").unwrap();
    assert_eq!(trace.len(), 7);
    assert_eq!(trace.points[0].alpha, 1.0);
}

#[test]
fn d_flag_changes_the_parameters() {
    let at = |d: &str| {
        let o = stemflow(&["--d", d, "eigen"]);
        assert!(o.status.success());
        stdout(&o).lines().next().unwrap().to_string()
    };
    assert_ne!(at("1.05"), at("1.2"));
}

#[test]
fn steady_state_of_the_default_preset() {
    let o = stemflow(&["steady"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((value("b_star") - 0.0632305).abs() < 1e-6);
    assert!((value("A_tilde") - 0.894940).abs() < 1e-5);
}

#[test]
fn char_roots_lists_the_rightmost_first() {
    let o = stemflow(&["char-roots", "--b", "1.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,residual,multiplicity"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 0.3349).abs() < 1e-3 && (first[1] - 0.6934).abs() < 1e-3);
}

#[test]
fn stability_map_writes_csv_and_svg() {
    let dir = scratch("map");
    let o = stemflow(&["stability-map", "--rho-n", "4", "--b-n", "3", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.join("stability_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    let svg = std::fs::read_to_string(dir.join("stability_map.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn zero_stability_reports_a_verdict() {
    let o = stemflow(&["--d", "1.2", "zero-stability"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "attractive");
}
