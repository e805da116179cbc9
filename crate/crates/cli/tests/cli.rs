use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_priorconflict"));
    c.env_remove("PRIORCONFLICT_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn normal_check_matches_closed_form() {
    let o = run(&["check", "normal", "--mu0", "0", "--tau0sq", "1", "--sigmasq", "1", "--y", "2.5", "--draws", "100000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["p_value"].as_f64().unwrap();
    assert!((p - 0.0771).abs() <= 0.004, "{p}");
    assert_eq!(v["n_draws"], 100000);
    assert!(stderr(&o).contains("normal check"));
}

#[test]
fn config_file_matches_flags_and_flags_override() {
    let cfg = configs_dir().join("example1.conf");
    let a = run(&["--config", cfg.to_str().unwrap(), "check", "normal", "--draws", "2000"]);
    let b = run(&["check", "normal", "--y", "2.5", "--draws", "2000"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let c = run(&["--config", cfg.to_str().unwrap(), "check", "normal", "--draws", "2000", "--y", "0.1"]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn seed_and_workers_control_output() {
    let args = ["lasso", "means-power", "--q-grid", "0.5,1", "--reps", "40", "--draws", "1000", "--seed", "5"];
    let a = run(&args);
    let b = bin().args(args).env("PRIORCONFLICT_WORKERS", "2").output().unwrap();
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stderr(&b).contains("workers 2"));
    let mut other = args.to_vec();
    let last = other.len() - 1;
    other[last] = "6";
    assert_ne!(stdout(&a), stdout(&run(&other)));
    let bad = bin().args(args).env("PRIORCONFLICT_WORKERS", "lots").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("workers"));
}

#[test]
fn csv_headers_are_stable() {
    let o = run(&["lasso", "means-power", "--q-grid", "1", "--reps", "20", "--draws", "500"]);
    assert_eq!(stdout(&o).lines().next(), Some("q,power_kurtosis,power_score,n,p,m,tau,n_reps,seed"));
    let o = run(&["lasso", "reg-power", "--n", "20", "--p", "5", "--q-grid", "1", "--reps", "10", "--draws", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("q,power_kurtosis,power_score,n,p,m,tau,n_reps,seed"));
    let o = run(&["lasso", "means-crit", "--statistic", "score", "--draws", "10000"]);
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("statistic,n,m,tau,lower,upper,n_draws,seed"));
    assert_eq!(s.lines().count(), 2);
    let o = run(&["check", "binomial", "--n", "10", "--y", "3", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().next(), Some("label,statistic_obs,p_value,p_upper,p_lower,tail,n_draws,seed"));
    let o = run(&["quantum", "power", "--grid", "0.5,0.6", "--reps", "10", "--draws", "200", "--radial", "16", "--angular", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "# check=increasing");
    assert_eq!(lines[1], "gamma,power,n_reps,alpha,seed");
    assert_eq!(lines[4], "# check=decreasing");
    assert_eq!(lines[5], "gamma,power,n_reps,alpha,seed");
}

#[test]
fn bundled_experiment_config_runs() {
    let cfg = configs_dir().join("quantum-experiment.conf");
    let o = run(&["--config", cfg.to_str().unwrap(), "quantum", "physical", "--draws", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tail"], "upper");
    let (u, l) = (v["p_upper"].as_f64().unwrap(), v["p_lower"].as_f64().unwrap());
    assert!(u > 0.0 && u <= 1.0 && l > 0.0 && l <= 1.0);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = run(&["check", "nig", "--y", "0.3,1.2,-0.4", "--out", path.to_str().unwrap(), "--draws", "500"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["p_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn validation_failures_exit_two_and_name_the_field() {
    let cases: &[(&[&str], &str)] = &[
        (&["check", "normal", "--y", "1", "--draws", "10"], "draws"),
        (&["check", "normal", "--y", "1", "--alpha", "1.5"], "alpha"),
        (&["check", "normal"], "y"),
        (&["check", "normal", "--y", "1", "--tau0sq", "-1"], "tau"),
        (&["check", "binomial", "--n", "3", "--y", "5"], "y"),
        (&["quantum", "physical", "--y", "1,2"], "y"),
        (&["quantum", "physical", "--y", "1,2,3", "--gamma", "0.5", "--cos-sq", "0.2"], "gamma"),
        (&["check", "normal", "--y", "1", "--out", "/nonexistent-dir-xyz/a.json"], "out"),
        (&["check", "normal", "--y", "1", "--config", "/nonexistent-dir-xyz/a.conf"], "config"),
    ];
    for (args, field) in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        let last = err.lines().last().unwrap_or("");
        assert!(last.contains(field), "{args:?}: {err}");
    }
    let o = run(&["check", "normal", "--y", "1", "--unknown-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_or_unknown_config_entries_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    for (text, field) in [
        ("[check.normal]\ny = 1\ntypo = 2\n", "typo"),
        ("[check.normal]\ny = abc\n", "y"),
        ("[check.normal\ny = 1\n", "section"),
        ("mystery = 1\n[check.normal]\ny = 1\n", "mystery"),
    ] {
        let p = write("c.conf", text);
        let o = run(&["--config", p.to_str().unwrap(), "check", "normal", "--draws", "200"]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{text}: {}", stderr(&o));
    }
}

#[test]
fn numerical_failure_exits_one_with_seed_context() {
    let o = run(&["quantum", "physical", "--y", "1,1,1", "--cos-sq", "0.999", "--prior-alpha", "50", "--draws", "200", "--seed", "77"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed 77"));
}

#[test]
fn reproduce_targets_describe_themselves() {
    for t in ["example1", "fig1", "crit", "fig2", "fig3", "fig4", "power-flat", "quantum-experiment"] {
        let o = run(&["reproduce", t, "--describe"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("Expected"), "{t}");
    }
}

#[test]
fn reproduce_fig1_quantiles() {
    let o = run(&["reproduce", "fig1", "--draws", "100000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let mut lines = s.lines();
    let meta = lines.next().unwrap().trim_start_matches("# ");
    let get = |k: &str| -> f64 {
        meta.split(',').find_map(|kv| kv.strip_prefix(&format!("{k}="))).unwrap().parse().unwrap()
    };
    assert!((get("q025") - 0.408).abs() <= 0.02, "{meta}");
    assert!((get("q975") - 1.117).abs() <= 0.02, "{meta}");
    assert_eq!(lines.next(), Some("bin_left,bin_right,density"));
    let area: f64 = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1] - f[0]) * f[2]
        })
        .sum();
    assert!((area - 1.0).abs() < 1e-9);
}

#[test]
fn reproduce_example1_and_experiment() {
    let o = run(&["reproduce", "example1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["p_value"].as_f64().unwrap() - 0.0771).abs() <= 0.004);
    let a = run(&["reproduce", "quantum-experiment", "--draws", "20000", "--format", "csv"]);
    let b = run(&["reproduce", "quantum-experiment", "--draws", "20000", "--format", "csv"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let s = stdout(&a);
    let rows: Vec<Vec<&str>> = s.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][0], "ideal_trine");
    assert_eq!(rows[1][0], "matched");
    assert!(rows[0][2].parse::<f64>().unwrap() <= 5e-4);
}
