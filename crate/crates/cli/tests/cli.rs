use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ilfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilfs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Top-level keys in the order they appear in the text.
fn top_level_keys(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.strip_prefix("  \""))
        .filter_map(|l| l.split_once('"').map(|(k, _)| k.to_string()))
        .collect()
}

fn synth(dir: &Path, seed: &str) -> (String, String) {
    let csv = path(dir, &format!("data{seed}.csv"));
    let truth = path(dir, &format!("truth{seed}.json"));
    let out = ilfs(&["synth", "--seed", seed, "--samples", "120", "--noise", "15", "--output", &csv, "--truth", &truth]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (csv, truth)
}

#[test]
fn rank_writes_index_aligned_json() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, truth) = synth(dir.path(), "1");
    let json_path = path(dir.path(), "ranking.json");
    let out = ilfs(&["rank", "--input", &csv, "--label", "label", "--output", &json_path]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n=20 m=120 K=2"), "{stderr}");
    assert!(stderr.contains("converged="));

    let text = fs::read_to_string(&json_path).unwrap();
    assert_eq!(top_level_keys(&text), ["order", "scores", "r", "spectral_radius", "params"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let order: Vec<usize> = serde_json::from_value(v["order"].clone()).unwrap();
    let scores: Vec<f64> = serde_json::from_value(v["scores"].clone()).unwrap();
    assert_eq!(order.len(), 20);
    assert_eq!(scores.len(), 20);
    for w in order.windows(2) {
        assert!(scores[w[0]] >= scores[w[1]]);
    }
    assert_eq!(v["params"]["bins"], 6);
    assert_eq!(v["params"]["phi_mode"], "prose");
    assert_eq!(v["params"]["damping"], 0.9);

    let truth: Value = serde_json::from_str(&fs::read_to_string(truth).unwrap()).unwrap();
    let mut informative: Vec<usize> = serde_json::from_value(truth["informative"].clone()).unwrap();
    let mut top: Vec<usize> = order[..5].to_vec();
    informative.sort();
    top.sort();
    assert_eq!(top, informative);
}

#[test]
fn rank_to_stdout_and_top_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "2");
    let out = ilfs(&["rank", "--input", &csv, "--label", "label", "--top", "10"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["order"].as_array().unwrap().len(), 10);
    assert_eq!(v["scores"].as_array().unwrap().len(), 20);
    assert_eq!(v["params"]["top_k"], 10);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "3");
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    for target in [&a, &b] {
        assert!(ilfs(&["rank", "--input", &csv, "--label", "label", "--output", target]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn scores_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "4");
    let out = ilfs(&["rank", "--input", &csv, "--label", "label"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for s in v["scores"].as_array().unwrap() {
        let x = s.as_f64().unwrap();
        assert_eq!(serde_json::to_string(&x).unwrap().parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

#[test]
fn missing_label_column_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "5");
    let out = ilfs(&["rank", "--input", &csv, "--label", "class"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:MissingColumn:"), "{stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1);
}

#[test]
fn unreadable_input_exits_one() {
    let out = ilfs(&["rank", "--input", "/nonexistent/data.csv", "--label", "label"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:Io:"));
}

#[test]
fn parse_error_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "bad.csv");
    fs::write(&csv, "x,y,label\n1,2,a\n3,zz,b\n").unwrap();
    let out = ilfs(&["rank", "--input", &csv, "--label", "label"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:ParseError:"));
    assert!(stderr.contains("row 3") && stderr.contains("'y'"), "{stderr}");
}

#[test]
fn invalid_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "6");
    for extra in [["--bins", "1"], ["--damping", "1.0"], ["--damping", "0"], ["--phi-mode", "other"], ["--em-tol", "0"]] {
        let mut args = vec!["rank", "--input", &csv, "--label", "label"];
        args.extend_from_slice(&extra);
        assert_eq!(ilfs(&args).status.code(), Some(2), "{extra:?}");
    }
    assert_eq!(ilfs(&["rank"]).status.code(), Some(2));
    assert_eq!(ilfs(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = synth(dir.path(), "7");
    let model = path(dir.path(), "model.json");
    let graph = path(dir.path(), "graph.csv");
    let out = ilfs(&[
        "rank", "--input", &csv, "--label", "label", "--phi-mode", "literal", "--bins", "8", "--zero-diagonal",
        "--dump-model", &model, "--dump-graph", &graph,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&model).unwrap();
    assert_eq!(top_level_keys(&text), ["p_z", "p_t_given_z", "p_z_given_f", "trace", "iterations", "converged"]);
    let m: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(m["p_t_given_z"].as_array().unwrap().len(), 8);
    assert_eq!(m["p_z_given_f"].as_array().unwrap().len(), 20);
    let trace: Vec<f64> = serde_json::from_value(m["trace"].clone()).unwrap();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));

    let text = fs::read_to_string(&graph).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[0].starts_with("f0,f1"));
    let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(first.len(), 20);
    assert_eq!(first[0], 0.0);
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (csv_a, truth_a) = synth(dir.path(), "11");
    let copy_csv = path(dir.path(), "copy.csv");
    let copy_truth = path(dir.path(), "copy.json");
    fs::copy(&csv_a, &copy_csv).unwrap();
    fs::copy(&truth_a, &copy_truth).unwrap();
    let (csv_b, truth_b) = synth(dir.path(), "11");
    assert_eq!(fs::read(&copy_csv).unwrap(), fs::read(&csv_b).unwrap());
    assert_eq!(fs::read(&copy_truth).unwrap(), fs::read(&truth_b).unwrap());
}

#[test]
fn synth_rejects_bad_separation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "x.csv");
    let truth = path(dir.path(), "x.json");
    for sep in ["0", "-2"] {
        let out = ilfs(&["synth", "--separation", sep, "--output", &csv, "--truth", &truth]);
        assert_eq!(out.status.code(), Some(2));
    }
    assert!(!Path::new(&csv).exists());
}

#[test]
fn synth_defaults_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "d.csv");
    let truth = path(dir.path(), "t.json");
    let out = ilfs(&["synth", "--output", &csv, "--truth", &truth]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 51);
    let t: Value = serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    assert_eq!(t["informative"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_passes_and_reports_deviations() {
    let out = ilfs(&["verify", "--trials", "10", "--seed", "3"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, name) in lines.iter().zip(["paths", "series", "markov"]) {
        assert!(line.starts_with(name) && line.ends_with("ok"), "{line}");
        let dev: f64 = line
            .split_whitespace()
            .find_map(|w| w.strip_prefix("max_deviation="))
            .unwrap()
            .parse()
            .unwrap();
        assert!(dev < 1e-8);
    }
}

#[test]
fn verify_rejects_zero_trials() {
    assert_eq!(ilfs(&["verify", "--trials", "0"]).status.code(), Some(2));
}
