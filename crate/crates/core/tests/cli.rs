use std::process::{Command, Output};

fn kendall(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kendall")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn scalar(args: &[&str]) -> f64 {
    let o = kendall(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o).trim().parse().expect("one number")
}

#[test]
fn cdf_prints_the_dirac_value() {
    let o = kendall(&["cdf", "--dist", "dirac", "--alpha", "1", "--n", "2", "--t", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.75");
}

#[test]
fn fdd_prints_eight_ninths() {
    let v = scalar(&["fdd", "--dist", "dirac", "--alpha", "1", "--epochs", "1,2", "--thresholds", "2,3"]);
    assert!((v - 8.0 / 9.0).abs() < 1e-15, "{v}");
    let dp =
        scalar(&["fdd", "--dist", "dirac", "--alpha", "1", "--epochs", "1,2", "--thresholds", "2,3", "--method", "dp"]);
    assert!((dp - v).abs() < 1e-15);
}

#[test]
fn fdd_json_fields() {
    let o =
        kendall(&["--json", "fdd", "--dist", "uniform", "--alpha", "1", "--epochs", "1,3", "--thresholds", "0.5,2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let obj = v.as_object().unwrap();
    let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["k", "terms_evaluated", "value"]);
    assert_eq!(obj["k"], 2);
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let args = ["sample", "--dist", "uniform", "--alpha", "1", "--n", "5", "--paths", "3", "--seed", "7"];
    let (a, b) = (kendall(&args), kendall(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\"seed\":7"), "seed echoed: {text}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn sample_depends_on_seed() {
    let base = ["sample", "--dist", "gamma", "--alpha", "1", "--n", "3", "--paths", "50"];
    let a = kendall(&[&base[..], &["--seed", "1"]].concat());
    let b = kendall(&[&base[..], &["--seed", "2"]].concat());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn tail_and_kernel_values() {
    let o = kendall(&["--json", "tail", "--dist", "dirac", "--alpha", "1", "--n", "2", "--x", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["tail"], 0.25);
    assert_eq!(v["regime"]["regime"], "second_term_dominates");
    let k = scalar(&["kernel", "--dist", "dirac", "--alpha", "1", "--x", "1", "--n", "1", "--t", "2"]);
    assert!((k - 0.75).abs() < 1e-15);
    let m = scalar(&["kernel", "--dist", "dirac", "--alpha", "1", "--x", "1", "--n", "1", "--t", "2", "--moment"]);
    assert!((m - 1.0).abs() < 1e-12);
}

#[test]
fn stable_cdf_matches_closed_form() {
    let v = scalar(&["cdf", "--dist", "stable", "--alpha", "1", "--m", "1", "--n", "1", "--t", "1"]);
    assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn dist_file_with_cdf_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("u.csv"), "x,F\n0,0\n1,1\n").unwrap();
    let spec = dir.path().join("u.json");
    std::fs::write(&spec, r#"{"family":"generic","table":"u.csv","alpha":1.0}"#).unwrap();
    let v = scalar(&["cdf", "--dist-file", spec.to_str().unwrap(), "--n", "2", "--t", "2"]);
    assert!((v - 0.9375).abs() < 1e-8, "{v}");
}

#[test]
fn norming_closed_form() {
    let o = kendall(&["--json", "norming", "--dist", "uniform", "--alpha", "2", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // finite α-moment: a_n = n^{1/α}
    assert_eq!(v["rows"][0]["a_n"], 10.0);
}

#[test]
fn usage_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["cdf", "--dist", "nope", "--alpha", "1", "--n", "2", "--t", "2"],
        &["fdd", "--dist", "dirac", "--alpha", "1", "--epochs", "2,1", "--thresholds", "2,3"],
        &["fdd", "--dist", "dirac", "--alpha", "1", "--epochs", "1,2", "--thresholds", "3,2"],
        &["cdf", "--dist", "pareto-mix", "--p", "1.5", "--alpha", "1", "--n", "2", "--t", "2"],
        &["cdf", "--dist", "dirac", "--alpha", "-1", "--n", "2", "--t", "2"],
        &["validate", "--suite", "bogus"],
    ];
    for args in cases {
        let o = kendall(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn enumeration_guard_is_a_usage_error() {
    let epochs: Vec<String> = (1..=30).map(|i| i.to_string()).collect();
    let xs: Vec<String> = (1..=30).map(|i| i.to_string()).collect();
    let o = kendall(&[
        "fdd",
        "--dist",
        "dirac",
        "--alpha",
        "1",
        "--epochs",
        &epochs.join(","),
        "--thresholds",
        &xs.join(","),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let dp = kendall(&[
        "fdd",
        "--dist",
        "dirac",
        "--alpha",
        "1",
        "--epochs",
        &epochs.join(","),
        "--thresholds",
        &xs.join(","),
        "--method",
        "dp",
    ]);
    assert_eq!(dp.status.code(), Some(0));
}

#[test]
fn quick_validation_of_one_suite_passes_and_echoes_seed() {
    let o = kendall(&["--json", "--seed", "3", "validate", "--suite", "transforms", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["pass"], true);
    assert!(v["cases"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
