use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tsarf_core::report::{ModelId, RunReport};

fn tsarf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsarf"))
        .args(args)
        .env_remove("TSARF_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_line_csv(path: &Path, n: usize) {
    let mut s = String::from("time,count\n");
    for i in 1..=n {
        s.push_str(&format!("{},{}\n", i, 1 + 2 * i));
    }
    fs::write(path, s).unwrap();
}

fn simulate(dir: &Path, name: &str, seed: &str) -> String {
    let out = dir.join(name);
    let o = tsarf(&[
        "simulate", "--kind", "go", "--a", "100", "--b", "0.01", "--horizon", "500", "--seed", seed, "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("events: "));
    out.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.txt", "7");
    let b = simulate(dir.path(), "b.txt", "7");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = simulate(dir.path(), "c.txt", "8");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn simulated_file_feeds_compare() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "sim.txt", "7");
    let report = dir.path().join("report.json");
    let curves = dir.path().join("curves.csv");
    let o = tsarf(&[
        "compare", "--input", &input, "--output", report.to_str().unwrap(), "--curves", curves.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let table = stdout(&o);
    let labels: Vec<&str> = table.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(labels, vec!["TSARF", "DSS", "GO", "Weibull"]);
    assert!(table.starts_with("Model\tPMSE\tPRR\tPP\n"));

    let parsed: RunReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.seed, Some(7));
    assert_eq!(parsed.metrics_table(), table);

    let csv = fs::read_to_string(&curves).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,actual,partition,tsarf,go,dss,weibull");
    assert_eq!(csv.lines().count(), parsed.dataset.n + 1);
}

#[test]
fn compare_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate(dir.path(), "sim.txt", "11");
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for r in [&r1, &r2] {
        assert!(tsarf(&["compare", "--input", &input, "--output", r.to_str().unwrap()]).status.success());
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
}

#[test]
fn exact_line_csv_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    write_line_csv(&input, 60);
    let report = dir.path().join("r.json");
    let o = tsarf(&[
        "compare", "--input", input.to_str().unwrap(), "--models", "tsarf", "--output", report.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let parsed: RunReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.pmse_of(ModelId::Tsarf).unwrap() < 1e-9);
}

#[test]
fn fit_single_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    write_line_csv(&input, 60);
    let o = tsarf(&["fit", "--input", input.to_str().unwrap(), "--model", "tsarf", "--ma", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("k=5 d=2 predicted line"));
}

#[test]
fn exit_codes() {
    let missing = tsarf(&["compare", "--input", "/nonexistent/file.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/file.txt"));

    assert_eq!(tsarf(&["compare"]).status.code(), Some(1));
    assert_eq!(tsarf(&["bogus"]).status.code(), Some(1));
    assert_eq!(tsarf(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    write_line_csv(&input, 30);
    let p = input.to_str().unwrap();
    assert_eq!(tsarf(&["compare", "--input", p, "--ma", "x"]).status.code(), Some(1));
    assert_eq!(tsarf(&["compare", "--input", p, "--models", "arima"]).status.code(), Some(1));
    assert_eq!(tsarf(&["compare", "--input", p, "--test-len", "0"]).status.code(), Some(1));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1.0\n-3.0\n").unwrap();
    let o = tsarf(&["compare", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let out = dir.path().join("x.txt");
    let o = tsarf(&["simulate", "--a", "-1", "--b", "1", "--horizon", "5", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn model_failure_writes_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    write_line_csv(&input, 12);
    let report = dir.path().join("r.json");
    let o = tsarf(&[
        "compare", "--input", input.to_str().unwrap(), "--test-len", "6", "--window-size", "4", "--models",
        "tsarf,go", "--output", report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let parsed: RunReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.outcome(ModelId::Tsarf).unwrap().error.is_some());
    assert!(stdout(&o).contains("TSARF\tfailed"));
}

#[test]
fn window_and_ma_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "alpha.txt", "3");
    let b = dir.path().join("beta.csv");
    write_line_csv(&b, 60);
    let o = tsarf(&["sweep", "--input", &a, "--input", b.to_str().unwrap(), "--parameter", "window", "--values", "4..12"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "size,alpha,beta");
    assert_eq!(lines.len(), 10);

    let o = tsarf(&["sweep", "--input", &a, "--parameter", "ma", "--values", "1..6"]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().next().unwrap(), "length,alpha");
    assert_eq!(csv.lines().count(), 7);

    let o = tsarf(&["sweep", "--input", b.to_str().unwrap(), "--parameter", "window", "--values", "5,40"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().last().unwrap().ends_with(",ERR"));
}

#[test]
fn output_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    write_line_csv(&input, 40);
    let o = Command::new(env!("CARGO_BIN_EXE_tsarf"))
        .args(["compare", "--input", input.to_str().unwrap(), "--models", "tsarf", "--output", "nested/r.json"])
        .env("TSARF_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("nested/r.json").exists());
}
