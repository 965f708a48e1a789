use std::process::{Command, Output};

use serde_json::Value;

fn qbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbc")).args(args).env_remove("QBC_DIM_CAP").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = qbc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

/// Report bytes with the timestamp line removed.
fn without_timestamp(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn keys(v: &Value) -> Vec<&str> {
    let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    k.sort_unstable();
    k
}

#[test]
fn pair_attack_example_accepts_every_session() {
    let r = json(&[
        "attack",
        "--scheme",
        "bb84",
        "--s",
        "4",
        "--attack",
        "bb84-epr",
        "--chosen-bit",
        "1",
        "--trials",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(r["attack"]["acceptCount1"], 1000);
    assert_eq!(r["attack"]["acceptCount0"], 0);
    assert_eq!(r["derived"]["exactAcceptProb"], 1.0);
}

#[test]
fn naive_example_matches_three_quarters_squared() {
    let r = json(&["attack", "--scheme", "bb84", "--s", "2", "--attack", "naive", "--trials", "100000", "--seed", "7"]);
    let rate = r["empirical"]["acceptRate"].as_f64().unwrap();
    let se = (0.5625f64 * 0.4375 / 100_000.0).sqrt();
    assert!((rate - 0.5625).abs() <= 3.0 * se, "rate {rate}");
    assert_eq!(r["derived"]["exactAcceptProb"], 0.5625);
    assert_eq!(r["derived"]["heuristicAcceptProb"], 0.5);
    assert_eq!(r["config"]["bobMode"], "measure-at-commit");
}

#[test]
fn zero_tilt_reduces_to_the_ideal_attack() {
    let r = json(&[
        "attack",
        "--scheme",
        "tilted-pair",
        "--epsilon",
        "0",
        "--attack",
        "nonideal-uhlmann",
        "--chosen-bit",
        "1",
        "--trials",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(r["attack"]["acceptCount1"], 1000);
    assert_eq!(r["derived"]["fidelity"], 1.0);
}

#[test]
fn report_schema_is_fixed() {
    let r = json(&["attack", "--scheme", "tilted-pair", "--epsilon", "0.2", "--trials", "10"]);
    assert_eq!(keys(&r), ["attack", "checks", "config", "derived", "empirical", "scheme", "timestamp"]);
    assert_eq!(
        keys(&r["config"]),
        [
            "attack",
            "bobMode",
            "chosenBit",
            "command",
            "epsilon",
            "format",
            "grid",
            "pairConvention",
            "s",
            "scheme",
            "seed",
            "trials"
        ]
    );
    assert_eq!(
        keys(&r["derived"]),
        ["delta", "distinguishingProbability", "exactAcceptProb", "fidelity", "heuristicAcceptProb", "traceDistance"]
    );
    assert_eq!(
        keys(&r["attack"]),
        [
            "acceptCount0",
            "acceptCount1",
            "attackKind",
            "exactAcceptProb",
            "fidelityBound",
            "schemeLabel",
            "seed",
            "trials"
        ]
    );
    let f = r["derived"]["fidelity"].as_f64().unwrap();
    assert!((f - 0.2f64.cos()).abs() < 1e-9);
    assert!((r["derived"]["delta"].as_f64().unwrap() - (1.0 - 0.2f64.cos())).abs() < 1e-9);
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let runs: [&[&str]; 4] = [
        &["attack", "--attack", "naive", "--s", "3", "--trials", "20000", "--seed", "11"],
        &["attack", "--scheme", "random", "--seed", "12", "--trials", "5000"],
        &["demo-ideal", "--s", "2", "--trials", "3000", "--seed", "13"],
        &[
            "sweep",
            "--scheme",
            "tilted-pair",
            "--grid",
            "0.3,0.1",
            "--trials",
            "4000",
            "--seed",
            "14",
            "--format",
            "json",
        ],
    ];
    for args in runs {
        let base = qbc(&[args, &["--threads", "1"]].concat());
        assert!(base.status.success());
        for threads in ["2", "8"] {
            let other = qbc(&[args, &["--threads", threads]].concat());
            assert_eq!(without_timestamp(&base.stdout), without_timestamp(&other.stdout), "{args:?} threads {threads}");
        }
    }
    let sweep = ["sweep", "--scheme", "bb84", "--attack", "naive", "--grid", "1,2", "--trials", "3000", "--seed", "5"];
    let a = qbc(&[&sweep[..], &["--threads", "1"]].concat());
    let b = qbc(&[&sweep[..], &["--threads", "5"]].concat());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn naive_sweep_exact_column_is_three_quarters_power() {
    let out = qbc(&[
        "sweep",
        "--scheme",
        "bb84",
        "--attack",
        "naive",
        "--grid",
        "6,1,2,3,4,5",
        "--trials",
        "2000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["scheme", "parameter", "fidelity", "delta", "exactAcceptProb", "empiricalAcceptRate", "trials", "seed"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for (k, row) in rows.iter().enumerate() {
        let s: f64 = row[1].parse().unwrap();
        assert_eq!(s, (k + 1) as f64);
        let exact: f64 = row[4].parse().unwrap();
        assert!((exact - 0.75f64.powf(s)).abs() < 5e-7);
    }
}

#[test]
fn tilted_sweep_is_sorted_with_closed_form_fidelity() {
    let out = qbc(&[
        "sweep",
        "--scheme",
        "tilted-pair",
        "--grid",
        "0.5,0.01,0.2,0.05,0.1",
        "--trials",
        "1000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let params: Vec<(f64, f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[1].parse().unwrap(), r[2].parse().unwrap(), r[4].parse().unwrap())
        })
        .collect();
    let eps: Vec<f64> = params.iter().map(|p| p.0).collect();
    assert_eq!(eps, [0.01, 0.05, 0.1, 0.2, 0.5]);
    for (e, f, exact) in params {
        assert!((f - e.cos()).abs() < 1e-9);
        assert!(exact >= f * f - 1e-9);
    }
}

#[test]
fn config_errors_exit_with_two() {
    let cases: [&[&str]; 9] = [
        &["sweep", "--scheme", "tilted-pair", "--grid", ""],
        &["sweep", "--scheme", "tilted-pair"],
        &["attack", "--s", "11"],
        &["attack", "--trials", "0"],
        &["attack", "--scheme", "tilted-pair", "--epsilon", "0.9"],
        &["attack", "--scheme", "tilted-pair", "--attack", "ideal-epr", "--epsilon", "0.1"],
        &["attack", "--attack", "teleport"],
        &["attack", "--chosen-bit", "2"],
        &["attack", "--scheme", "random", "--bob-mode", "measure-at-commit"],
    ];
    for args in cases {
        let out = qbc(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn dimension_cap_exits_with_three() {
    let out = Command::new(env!("CARGO_BIN_EXE_qbc"))
        .args(["attack", "--s", "3", "--trials", "1"])
        .env("QBC_DIM_CAP", "16")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"scheme": "tilted-pair", "epsilon": 0.05, "trials": 200, "seed": 9, "attack": "naive"}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let out =
        qbc(&["attack", "--config", config.to_str().unwrap(), "--seed", "10", "--output", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["config"]["epsilon"], 0.05);
    assert_eq!(r["config"]["attack"], "naive");
    assert_eq!(r["config"]["seed"], 10);
    assert_eq!(r["attack"]["trials"], 200);

    std::fs::write(&config, r#"{"scheme": "tilted-pair", "photons": 3}"#).unwrap();
    assert_eq!(qbc(&["attack", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_math_reports_passing_checks() {
    for scheme in ["bb84", "tilted-pair", "random"] {
        let r = json(&["verify-math", "--scheme", scheme, "--s", "3"]);
        let checks = r["checks"].as_array().unwrap();
        assert!(checks.len() >= 10);
        assert!(checks.iter().all(|c| c["passed"] == true), "{scheme}: {checks:?}");
        assert!(r["attack"].is_null());
    }
}

#[test]
fn demo_ideal_builds_the_unitary_and_cheats() {
    let r = json(&["demo-ideal", "--s", "3", "--trials", "500", "--seed", "1"]);
    assert_eq!(r["attack"]["attackKind"], "ideal-epr");
    assert_eq!(r["attack"]["acceptCount1"], 500);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["traceDistance", "cheatUnitaryDeviation", "cheatUnitaryMapping"]);
    assert_eq!(qbc(&["demo-ideal", "--scheme", "tilted-pair", "--epsilon", "0.1"]).status.code(), Some(2));
}
