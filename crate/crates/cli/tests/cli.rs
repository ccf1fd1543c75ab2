use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn rbw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rbw-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

#[test]
fn simulate_is_byte_stable() {
    let args = [
        "simulate",
        "--type",
        "A2",
        "--p",
        "0.3",
        "--b",
        "0.3,0.95394",
        "--steps",
        "200",
        "--seed",
        "42",
    ];
    let a = rbw(&args);
    let b = rbw(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,t,eps,label,x_1,x_2"));
    assert_eq!(lines.count(), 200);
    let other = rbw(&[
        "simulate",
        "--type",
        "A2",
        "--p",
        "0.3",
        "--b",
        "0.3,0.95394",
        "--steps",
        "200",
        "--seed",
        "43",
    ]);
    assert_ne!(other.stdout, b.stdout);
}

#[test]
fn simulate_modes_and_sidecar() {
    for mode in ["continuous", "refraction"] {
        let out = rbw(&["simulate", "--preset", "g2", "--mode", mode, "--time", "30"]);
        assert!(out.status.success(), "{mode}");
        assert!(String::from_utf8(out.stdout)
            .unwrap()
            .starts_with("n,t,eps,label,x_1,x_2\n"));
    }
    let path = scratch("walk.csv");
    let out = rbw(&[
        "simulate",
        "--preset",
        "a2-irrational",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let side: Value = serde_json::from_str(
        &std::fs::read_to_string(path.with_extension("csv.config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(side["crossings"], 200);
    assert_eq!(side["config"]["b_coroot"][0], "-sqrt(2)");
}

#[test]
fn exit_codes_and_error_reports() {
    let degenerate = rbw(&["simulate", "--type", "A2", "--p", "0.3", "--b", "1,0"]);
    assert_eq!(degenerate.status.code(), Some(2));
    let e = error_json(&degenerate);
    assert_eq!(e["error"], "DegenerateDirection");
    assert!(e["hint"].as_str().unwrap().contains("--jitter"));
    // the hinted remedy works
    let jittered = rbw(&[
        "simulate", "--type", "A2", "--p", "0.3", "--b", "1,0", "--jitter", "7",
    ]);
    assert!(jittered.status.success());

    for args in [
        &["sigma", "--type", "A2", "--p", "1.5"][..],
        &["simulate", "--type", "Q7", "--p", "0.3", "--b", "1"],
        &["simulate", "--type", "A3", "--p", "0.3", "--b", "1,2"],
        &["simulate", "--b", "1,sqrt(-2)"],
        &["simulate", "--preset", "nope"],
        &["simulate", "--no-such-flag"],
        &["verify-all", "--only", "99"],
    ] {
        let out = rbw(args);
        assert_eq!(out.status.code(), Some(4), "{args:?}");
        assert_eq!(error_json(&out)["exit_code"], 4);
    }
    // no enumerated group: the series estimator cannot run
    let e7 = rbw(&[
        "mixing",
        "--type",
        "E7",
        "--p",
        "0.3",
        "--b",
        "1,2,3,4,5,6,sqrt(2)",
        "--runs",
        "10",
    ]);
    assert_eq!(e7.status.code(), Some(3));
}

#[test]
fn a1_sigma_report() {
    let out = rbw(&[
        "sigma", "--preset", "a1-p0.3", "--steps", "2000", "--runs", "4000", "--labels", "10000",
    ]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["experiment"], "sigma");
    assert_eq!(r["type"], "A1");
    assert_eq!(r["p"], 0.3);
    let s = r["sigma2"].as_f64().unwrap();
    let se = r["sigma2_se"].as_f64().unwrap();
    assert!((s - 7.0 / 3.0).abs() <= 4.0 * se, "{s} ± {se}");
    assert!((r["sigma2_series"].as_f64().unwrap() - 7.0 / 3.0).abs() < 1e-3);
}

#[test]
fn config_echo_reruns_identically() {
    let first = scratch("mixing.json");
    let csv = scratch("mixing.csv");
    let out = rbw(&[
        "mixing",
        "--preset",
        "g2",
        "--runs",
        "2000",
        "--n-max",
        "12",
        "--seed",
        "5",
        "--out",
        first.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    for key in [
        "experiment",
        "type",
        "p",
        "n",
        "tv",
        "c_hat",
        "c_certified",
        "M",
    ] {
        assert!(!report[key].is_null(), "missing {key}");
    }
    assert_eq!(report["n"].as_array().unwrap().len(), 13);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 14);

    let cfg = scratch("echo.json");
    std::fs::write(&cfg, report["config"].to_string()).unwrap();
    let second = scratch("mixing2.json");
    let out = rbw(&[
        "mixing",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut again: Value =
        serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    // the rerun names no preset; everything else matches
    assert_eq!(again["preset"], Value::Null);
    again["preset"] = report["preset"].clone();
    assert_eq!(again, report);

    std::fs::write(&cfg, r#"{"p": 0.3, "typo": 1}"#).unwrap();
    assert_eq!(
        rbw(&["mixing", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn results_do_not_depend_on_threads() {
    let run = |t: &str| {
        rbw(&[
            "moments",
            "--steps",
            "300",
            "--runs",
            "500",
            "--max-order",
            "3",
            "--threads",
            t,
        ])
        .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("3"));
}

#[test]
fn verify_all_reports_and_detects_corruption() {
    let clean = rbw(&["verify-all", "--only", "3,7"]);
    assert!(clean.status.success());
    let text = String::from_utf8(clean.stdout).unwrap();
    assert!(text.contains("criterion  3 PASS") && text.contains("criterion  7 PASS"));
    assert!(text.contains("criteria run: 3, 7"));

    let flipped = rbw(&["verify-all", "--only", "2,3", "--inject-sign-flip", "0"]);
    assert_ne!(flipped.status.code(), Some(0));
    let text = String::from_utf8(flipped.stdout.clone()).unwrap();
    assert!(text.contains("criterion  2 FAIL"));
    // stops at the first failure
    assert!(text.contains("criteria run: 2\n"));
    assert!(error_json(&flipped)["message"]
        .as_str()
        .unwrap()
        .contains("criterion 2"));
}

#[test]
fn verify_flag_runs_the_matching_criteria() {
    let out = rbw(&["freq", "--steps", "1000", "--verify"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("criterion  7 PASS"));
}
