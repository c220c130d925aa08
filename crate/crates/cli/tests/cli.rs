use std::path::Path;
use std::process::{Command, Output};

fn georel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_georel")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a small synthetic dataset and returns its target context.
fn synth(dir: &Path, seed: &str) -> String {
    let out = georel(&["--log", "quiet", "synth", "--seed", seed, "--users", "150", "--out-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["events.csv", "contexts.json", "partonomy.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    stdout(&out).trim().to_owned()
}

fn path(dir: &Path, f: &str) -> String {
    dir.join(f).to_str().unwrap().to_owned()
}

#[test]
fn evaluate_is_reproducible_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "3");
    let (ev, cx, pt) = (path(dir.path(), "events.csv"), path(dir.path(), "contexts.json"), path(dir.path(), "partonomy.json"));
    let run = || {
        let out = georel(&[
            "--log", "quiet", "evaluate", "--events", &ev, "--contexts", &cx, "--partonomy", &pt,
            "--context", &target, "--scenario", "some", "--scheme", "mp,cf,tl", "--splits", "2",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        stdout(&out)
    };
    let first = run();
    assert_eq!(first, run());
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "scheme,scenario,split,precision_at_n,recall_at_n");
    // two splits plus mean and std for each of three schemes
    assert_eq!(lines.len(), 1 + 3 * 4);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[1], "leave-some-out");
        for x in &cols[3..] {
            let v: f64 = x.parse().unwrap();
            assert!(v >= 0.0);
        }
    }
}

#[test]
fn evaluate_writes_to_a_file_and_warns_about_forced_splits() {
    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "4");
    let report = path(dir.path(), "report.csv");
    let out = georel(&[
        "evaluate", "--events", &path(dir.path(), "events.csv"), "--contexts", &path(dir.path(), "contexts.json"),
        "--context", &target, "--scenario", "all", "--scheme", "mp", "--splits", "5", "--out", &report,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    assert!(stderr(&out).contains("using 1"), "{}", stderr(&out));
    let csv = std::fs::read_to_string(report).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("mp,leave-all-out,0,"));
}

#[test]
fn recommend_prints_a_ranked_list() {
    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "5");
    let user = std::fs::read_to_string(dir.path().join("events.csv"))
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .to_owned();
    let out = georel(&[
        "--log", "quiet", "recommend", "--events", &path(dir.path(), "events.csv"), "--contexts",
        &path(dir.path(), "contexts.json"), "--user", &user, "--context", &target, "--n", "5", "--scheme", "mp",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["user"], user.as_str());
    assert_eq!(doc["context"], target.as_str());
    assert_eq!(doc["scheme"], "mp");
    let items = doc["items"].as_array().unwrap();
    assert!(!items.is_empty() && items.len() <= 5);
    let scores: Vec<f64> = items.iter().map(|x| x["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|p| p[0] >= p[1]));
}

#[test]
fn cluster_reports_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "6");
    let out_file = path(dir.path(), "clusters.json");
    let out = georel(&[
        "--log", "quiet", "cluster", "--events", &path(dir.path(), "events.csv"), "--contexts",
        &path(dir.path(), "contexts.json"), "--context", &target, "--radius-km", "0.5", "--min-points", "3",
        "--out", &out_file,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_file).unwrap()).unwrap();
    assert_eq!(doc["radius_km"], 0.5);
    assert_eq!(doc["min_points"], 3);
    let clusters = doc["clusters"].as_array().unwrap();
    assert!(!clusters.is_empty());
    let sized: u64 = clusters.iter().map(|c| c["size"].as_u64().unwrap()).sum();
    assert_eq!(sized as usize, doc["assignment"].as_object().unwrap().len());
}

#[test]
fn missing_input_is_a_data_error() {
    let out = georel(&[
        "recommend", "--events", "/nonexistent/events.csv", "--contexts", "/nonexistent/contexts.json",
        "--user", "u", "--context", "g",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(georel(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(georel(&["evaluate"]).status.code(), Some(1));
    assert_eq!(georel(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "7");
    let out = georel(&[
        "evaluate", "--events", &path(dir.path(), "events.csv"), "--contexts", &path(dir.path(), "contexts.json"),
        "--context", &target, "--scenario", "some", "--scheme", "tl",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("partonomy"), "{}", stderr(&out));

    let out = georel(&[
        "evaluate", "--events", &path(dir.path(), "events.csv"), "--contexts", &path(dir.path(), "contexts.json"),
        "--context", "atlantis", "--scenario", "some", "--scheme", "mp",
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("atlantis"), "{}", stderr(&out));
}
