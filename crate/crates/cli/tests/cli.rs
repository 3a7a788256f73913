use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn klest(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klest"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch klest")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn divergence_prints_twelve_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", "[0.5, 0.5]");
    write(dir.path(), "q.txt", "0.25\n0.75\n");
    let o = klest(&["divergence", "--p", "p.json", "--q", "q.txt", "--measure", "kl"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0.143841036226\n");

    let o = klest(&["divergence", "--p", "p.json", "--q", "q.txt", "--measure", "chain"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn divergence_infinite_is_inf() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", "[0.5, 0.5]");
    write(dir.path(), "q.json", "[1, 0]");
    let o = klest(&["divergence", "--p", "p.json", "--q", "q.json", "--measure", "kl"], dir.path());
    assert_eq!(stdout(&o), "inf\n");
    let o = klest(&["divergence", "--p", "p.json", "--q", "q.json", "--measure", "rkl"], dir.path());
    assert_eq!(stdout(&o), "0.693147180560\n");
}

#[test]
fn estimate_writes_distribution_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.txt", "1\n2\n1\n1\n");
    let o = klest(
        &["estimate", "--data", "data.txt", "--estimator", "laplace", "--out", "p.txt"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vals: Vec<f64> = fs::read_to_string(dir.path().join("p.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(vals, vec![4.0 / 6.0, 2.0 / 6.0]);

    let o = klest(
        &["estimate", "--data", "data.txt", "--estimator", "kt", "--k", "4", "--out", "p4.txt"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("p4.txt")).unwrap().lines().count(), 4);
}

#[test]
fn bad_estimator_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.txt", "1\n2\n");
    let o = klest(
        &["estimate", "--data", "data.txt", "--estimator", "addgamma:-1", "--out", "p.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = klest(&["estimate", "--data", "missing.txt", "--estimator", "mle", "--out", "p.txt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn attack_reports_instance_and_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o = klest(
        &["attack", "--estimator", "mle", "--K", "10", "--n", "100", "--delta", "0.1", "--trials", "5000", "--seed", "4"],
        dir.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["instance"]["bound"], "inf");
    assert_eq!(v["instance"]["attacked_index"], 1);
    let inf = v["infinite_frequency"].as_f64().unwrap();
    assert!(inf > 0.1 && (inf - v["exceedance_frequency"].as_f64().unwrap()).abs() < 1e-15);

    let o = klest(&["attack", "--estimator", "laplace", "--K", "10", "--n", "2", "--delta", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

const GRID: &str = r#"{"estimators": ["mle", "laplace", "otb:0.1"], "K": [3, 6], "ns": [30, 60],
                      "delta": 0.1, "trials": 400, "seed": 17, "pstar": ["uniform", "heavy-atom"]}"#;

#[test]
fn simulate_and_sweep_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "grid.json", GRID);
    let a = klest(&["simulate", "--config", "grid.json"], dir.path());
    let b = klest(&["simulate", "--config", "grid.json"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert!(csv.starts_with(
        "estimator,K,n,delta,trials,seed,quantile,mean_kl,frac_infinite,rate_K_over_n,rate_logKlog1d_over_n\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2 * 2);

    for out in ["s1.csv", "s2.csv"] {
        let o = klest(&["sweep", "--config", "grid.json", "--out", out], dir.path());
        assert!(o.status.success());
    }
    let s1 = fs::read(dir.path().join("s1.csv")).unwrap();
    assert_eq!(s1, fs::read(dir.path().join("s2.csv")).unwrap());
    assert_eq!(s1, a.stdout);
}

#[test]
fn simulate_gate_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.json", r#"{"estimator": "laplace", "K": 10, "n": 1000, "delta": 0.1, "trials": 500, "seed": 1}"#);
    let o = klest(&["simulate", "--config", "ok.json", "--gate"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // The gate checks a proven bound, so no configuration is known to trip exit code 3.

    write(dir.path(), "unknown.json", r#"{"estimator": "mle", "n": 10, "delta": 0.1, "trials": 5, "seed": 1, "oops": 1}"#);
    let o = klest(&["simulate", "--config", "unknown.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    write(dir.path(), "bad_delta.json", r#"{"estimator": "mle", "n": 10, "delta": 1.5, "trials": 5, "seed": 1}"#);
    let o = klest(&["sweep", "--config", "bad_delta.json", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn pstar_file_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    write(&dir.path().join("cfg"), "p.txt", "0.2\n0.3\n0.5\n");
    write(
        &dir.path().join("cfg"),
        "grid.json",
        r#"{"estimator": "kt", "n": 50, "delta": 0.2, "trials": 100, "seed": 2, "pstar": "file:p.txt"}"#,
    );
    let o = klest(&["simulate", "--config", "cfg/grid.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("kt,3,50,"));
}

#[test]
fn diagnose_ratios_and_exact_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", "[0.3, 0.7]");
    let o = klest(
        &["diagnose-ratios", "--pstar", "p.json", "--n", "40", "--delta", "0.1", "--trials", "200", "--seed", "3"],
        dir.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["worst_ratio"].as_array().unwrap().len(), 2);
    assert!(v["violation_fraction"].as_f64().unwrap() <= v["allowed_fraction"].as_f64().unwrap());

    let o = klest(
        &["diagnose-ratios", "--pstar", "p.json", "--n", "3", "--delta", "0.1", "--trials", "10"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = klest(&["exact", "--estimator", "mle", "--pstar", "p.json", "--n", "10", "--delta", "0.1"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcomes"], 11);
    let total: f64 = v["distribution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["prob"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);

    let o = klest(&["exact", "--estimator", "otb:0.1", "--pstar", "p.json", "--n", "30", "--delta", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
