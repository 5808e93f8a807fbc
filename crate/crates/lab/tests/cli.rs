use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyperlab(kind: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hyperlab"))
        .arg(kind)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn result(report: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in report"))
        .to_string()
}

#[test]
fn hyperbolic_d_est_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab("estimate-d", "metric = hyperbolic\nn = 100\n", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(result(&report, "status"), "pass");
    assert!(result(&report, "D_est").parse::<f64>().unwrap() <= 1e-5);
    for key in ["schema_version", "seed", "c_F", "D_est_source"] {
        result(&report, key);
    }
    assert!(report.contains("\n[config]\nkind = estimate-d\nmetric = hyperbolic\nseed = 0\n"));
    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.starts_with("# schema_version = 1\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 101);
    assert!(dir.path().join("out/figure.svg").exists());
    assert!(dir.path().join("out/paths/argmax.csv").exists());
}

#[test]
fn randers_fields_are_unique() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab("uniqueness", "metric = randers:0.2\nxi = 0.7\n", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(report.contains("second_vs_central = "));
    assert_eq!(result(&report, "status"), "pass");
}

#[test]
fn measurements_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab("recurrent", "horizon = 100\n", dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("recurrent measured"));
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "metric = bump:0.5:0.8\nn = 3\nmax_separation = 4\nexpect_max = 1e-9\nd_samples = 0\nd_est = 0.4\n";
    let out = hyperlab("estimate-d", cfg, dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(result(&report, "status"), "fail");
}

#[test]
fn config_errors_exit_one_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab("width", "fan = 8\n\nwidht = 3\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("widht"), "{err}");

    let out = hyperlab("width", "kind = periodic\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hyperlab("width", "fan = many\n", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hyperlab("sideways", "", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_figure_window_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyperlab("recurrent", "horizon = 20\nview_radius = 0\n", dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("figure"));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 5\nseed = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hyperlab"))
        .args(["estimate-d", "--seed", "9", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("o/report.txt")).unwrap();
    assert_eq!(result(&report, "seed"), "9");
}
