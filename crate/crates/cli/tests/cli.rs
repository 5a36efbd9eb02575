//! End-to-end runs of the `cbfl` binary.

use std::path::Path;
use std::process::{Command, Output};

fn cbfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbfl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn model_prints_reference_breakdown() {
    let o = cbfl(&["model"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(lines.next(), None);
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(field("t_consensus"), "0.56");
    assert_eq!(field("t_commun"), "0.030025");
    assert_eq!(field("t_total"), "0.596025");
    assert!(!text.contains('\r'));
}

#[test]
fn bad_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "lambda=oops\n");
    let o = cbfl(&["model", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: config: line 1"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let cfg = write(dir.path(), "dup.cfg", "# c\nmu=300\nmu=400\n");
    let o = cbfl(&["model", "--config", &cfg]);
    assert!(stderr(&o).contains("line 3: duplicate key `mu`"), "{}", stderr(&o));

    let cfg = write(dir.path(), "unstable.cfg", "lambda=300\n");
    let o = cbfl(&["simulate", "--config", &cfg, "--reps", "10"]);
    assert!(stderr(&o).contains("lambda must be < mu"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_reported() {
    let o = cbfl(&["model", "--config", "/nonexistent/params.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cbfl(&["simulate", "--reps", "0"]).status.code(), Some(2));
    let o = cbfl(&["sweep", "--param", "lambda", "--from", "200", "--to", "100", "--step", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty range"));
}

#[test]
fn invalid_sweep_point_fails_before_running() {
    let o = cbfl(&["sweep", "--param", "lambda", "--from", "100", "--to", "300", "--step", "100", "--reps", "5"]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("lambda=300"), "{}", stderr(&o));
}

#[test]
fn sweep_has_one_row_per_point() {
    let o = cbfl(&["sweep", "--param", "f", "--from", "1", "--to", "3", "--step", "1", "--reps", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("f,"));
    assert!(rows[3].starts_with("3,"));
}

#[test]
fn degenerate_optimal_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n4.cfg", "n_block=4\n");
    let o = cbfl(&["optimal-lambda", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degenerate denominator"));
}

#[test]
fn infinite_epsilon_stops_after_one_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eps.cfg", "epsilon=inf\n");
    let o = cbfl(&["fl-run", "--config", &cfg, "--samples", "50", "--test-samples", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(stderr(&o).contains("stop_reason=converged cycles=1"));
}

#[test]
fn synthetic_file_feeds_fl_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("samples.txt");
    let data = data.to_str().unwrap();
    assert!(cbfl(&["synth", "--out", data, "--samples", "400", "--dim", "4"]).status.success());
    assert_eq!(std::fs::read_to_string(data).unwrap().lines().count(), 400);
    let o = cbfl(&["fl-run", "--data", data, "--max-cycles", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("cycle,weight_change,accuracy"));
    assert!(stderr(&o).contains("stop_reason="));
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.csv");
    let o = cbfl(&["model", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&cbfl(&["model"])));
}

#[test]
fn simulate_reports_na_for_one_replication() {
    let o = cbfl(&["simulate", "--reps", "1", "--seed", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("config_id,component,mean,std_err,analytic,rel_error,replications\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("NA")));
}
