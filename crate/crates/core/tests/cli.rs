//! End-to-end checks of the command-line interface.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi-erasure"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_boundary_half() {
    let out = run(&["solve", "--q", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("lambda_prime=0.000000000"), "{text}");
    assert!(text.contains("lambda_star=2.000000000"), "{text}");
    assert!(text.contains("regime=threshold"), "{text}");
}

#[test]
fn solve_greedy() {
    let out = run(&["solve", "--q", "0.8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("regime=greedy"), "{text}");
    assert!(text.contains("lambda_star=5.000000000"), "{text}");
}

#[test]
fn solve_golden_q03() {
    let out = run(&["solve", "--q", "0.3"]);
    let text = stdout(&out);
    assert!(text.contains("lambda_prime=0.470"), "{text}");
    assert!(text.contains("lambda_star=1.409"), "{text}");
}

#[test]
fn solve_rejects_out_of_range() {
    let out = run(&["solve", "--q", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["solve", "--q", "-0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_rejected() {
    let out = run(&["solve", "--q", "0.3", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_reproducible_and_optimal_policy() {
    let args = [
        "simulate", "--q", "0.3", "--policy", "optimal", "--epochs", "20000", "--seed", "5",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same argv must give byte-identical output");
    let text = stdout(&a);
    assert!(text.contains("analytic_lambda_star=1.409"), "{text}");
    // printed sim AoI is close to the printed analytic value
    let aoi: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("time_avg_aoi="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((aoi - 1.4092).abs() < 0.05, "aoi={aoi}");
}

#[test]
fn simulate_requires_horizon() {
    let out = run(&["simulate", "--q", "0.3", "--policy", "greedy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_trace_written() {
    let dir = std::env::temp_dir().join("aoi_cli_trace_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    let p = path.to_str().unwrap();
    let out = run(&[
        "simulate", "--q", "0.4", "--policy", "greedy", "--epochs", "50", "--seed", "3",
        "--trace", p,
    ]);
    assert!(out.status.success());
    let trace = std::fs::read_to_string(&path).unwrap();
    assert!(trace.lines().any(|l| l.contains(",SUCCESS,")), "{trace}");
    assert!(trace.lines().all(|l| l.split(',').count() == 4));
    std::fs::remove_file(&path).ok();
}

#[test]
fn sweep_csv_to_stdout() {
    let args = ["sweep", "--q-min", "0.1", "--q-max", "0.9", "--steps", "5"];
    let a = run(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    assert!(text.starts_with("q,lambda_prime,lambda_star_b1,greedy_aoi,b_inf_bound"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(a.stdout, run(&args).stdout);
}

#[test]
fn validate_exit_status() {
    let out = run(&[
        "validate", "--q", "0.3", "--epochs", "50000", "--seed", "5",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("pass=true"));
}
