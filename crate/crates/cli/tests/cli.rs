use std::path::PathBuf;
use std::process::{Command, Output};

use alpir_cli::commands::{BOUNDS_FIELDS, CHECK_FIELDS, PATH_FIELDS, SIMULATE_FIELDS};

fn alpir(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_alpir"));
    cmd.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ALPIR_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run alpir")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("alpir-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json_keys(line: &str) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    let mut keys: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    keys
}

fn sorted(fields: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

#[test]
fn bounds_row_for_the_high_eps_example() {
    let o = alpir(
        &["bounds", "--n", "2", "--k", "2", "--eps", "10", "--delta", "0.4"],
        &[],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), BOUNDS_FIELDS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let d_upper: f64 = row[5].parse().unwrap();
    assert!((d_upper - (1.0 + 1.0 / (10f64.exp() + 1.0))).abs() < 1e-12);
}

#[test]
fn json_lines_match_published_fields() {
    let o = alpir(
        &[
            "bounds",
            "--n",
            "1,2",
            "--k",
            "3",
            "--delta",
            "2.5",
            "--format",
            "json-lines",
        ],
        &[],
    );
    assert!(o.status.success());
    for line in stdout(&o).lines() {
        assert_eq!(json_keys(line), sorted(BOUNDS_FIELDS));
    }
    let o = alpir(&["sweep", "--preset", "path-trace", "--format", "json-lines"], &[]);
    assert_eq!(json_keys(stdout(&o).lines().next().unwrap()), sorted(PATH_FIELDS));
    let o = alpir(&["simulate", "--trials", "1000", "--format", "json-lines"], &[]);
    assert_eq!(json_keys(stdout(&o).trim()), sorted(SIMULATE_FIELDS));
    let o = alpir(&["verify", "--format", "json-lines"], &[]);
    assert_eq!(json_keys(stdout(&o).lines().next().unwrap()), sorted(CHECK_FIELDS));
}

#[test]
fn single_database_rows() {
    let o = alpir(&["bounds", "--n", "1", "--k", "3", "--delta", "1.5"], &[]);
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().ends_with(",Infeasible"));
    let o = alpir(&["verify", "--n", "1", "--k", "3", "--delta", "2"], &[]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("proposition_n1_point,true,K=3 delta=2: cost 3"));
    let o = alpir(&["simulate", "--n", "1", "--trials", "1000"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--trials", "5000", "--seed", "3"];
    let a = alpir(&args, &[]);
    let b = alpir(&args, &[]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let tcp = alpir(
        &["simulate", "--trials", "5000", "--seed", "3", "--transport", "tcp"],
        &[],
    );
    assert_eq!(a.stdout, tcp.stdout);
}

#[test]
fn spir_point_simulates_to_two() {
    let o = alpir(
        &[
            "simulate", "--n", "2", "--k", "2", "--l", "4", "--eps", "0", "--delta", "0", "--trials", "10000",
        ],
        &[],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let mean: f64 = row[SIMULATE_FIELDS.iter().position(|f| *f == "mean_cost").unwrap()]
        .parse()
        .unwrap();
    assert_eq!(mean, 2.0);
}

#[test]
fn session_records_file() {
    let path = scratch("records.csv");
    let o = alpir(
        &["simulate", "--trials", "1000", "--records", path.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "session_id,desired,class,bits,leaked_bits");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert!(
            matches!((f[2], f[3], f[4]), ("low", "4", "0") | ("high", "6", "2")),
            "{r}"
        );
    }
}

#[test]
fn verify_passes_and_detects_a_short_key() {
    let o = alpir(&["verify"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = alpir(&["verify", "--inject-short-key"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("db_leakage_at_point,false"));
}

#[test]
fn environment_and_config_file() {
    let cfg = scratch("point.conf");
    std::fs::write(&cfg, "# Figure 2 corner\nn=2\nk=2\neps=0\ndelta=0\nformat=json-lines\n").unwrap();
    let o = alpir(&["bounds", "--config", cfg.to_str().unwrap()], &[]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["d_upper"], 2.0);

    // environment beats the file, the command line beats both
    let o = alpir(&["bounds", "--config", cfg.to_str().unwrap()], &[("ALPIR_N", "3")]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["n"], 3);
    let o = alpir(
        &["bounds", "--config", cfg.to_str().unwrap(), "--n", "5"],
        &[("ALPIR_N", "3")],
    );
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["n"], 5);

    let o = alpir(&["bounds", "--eps-grid", "0:1:0.5"], &[("ALPIR_FORMAT", "csv")]);
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn output_file_and_errors() {
    let out = scratch("sweep.csv");
    let o = alpir(
        &["sweep", "--preset", "cost-vs-eps", "--out", out.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 101);

    assert_eq!(alpir(&["bounds", "--eps-grid", "1:0:0.1"], &[]).status.code(), Some(2));
    assert_eq!(
        alpir(&["bounds", "--eps", "1", "--eps-grid", "0:1:0.1"], &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(alpir(&["simulate", "--trials", "10"], &[]).status.code(), Some(2));
    assert_eq!(alpir(&["bounds", "--n", "2", "--k", "1"], &[]).status.code(), Some(2));
}
