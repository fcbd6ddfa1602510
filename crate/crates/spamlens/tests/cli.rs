//! End-to-end runs of the `spamlens` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spamlens");

fn spamlens(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SPAMLENS_NLU_URL")
        .env_remove("SPAMLENS_20NG_DIR")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    let out = spamlens(args);
    out.status.code().expect("exited normally")
}

fn ok(args: &[&str]) {
    let out = spamlens(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every file under `dir` except run manifests, which record wall time.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            if !rel.starts_with("run-") {
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline(dir: &Path, threads: &str) {
    let d = dir.to_str().unwrap();
    ok(&["synth", "--n", "200", "--seed", "7", "--output", d, "--threads", threads]);
    for cmd in [
        vec!["tag"],
        vec!["features"],
        vec!["select"],
        vec!["train", "--algo", "random_forest"],
        vec!["evaluate"],
        vec!["rank"],
        vec!["report"],
    ] {
        let mut args = cmd.clone();
        args.extend(["--input", d, "--seed", "7", "--threads", threads]);
        ok(&args);
    }
}

#[test]
fn smoke_path_produces_reports() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline(tmp.path(), "2");
    for f in [
        "metrics.csv",
        "roc.csv",
        "ranking.csv",
        "apk.csv",
        "features.csv",
        "model.json",
        "metrics.svg",
        "roc.svg",
        "apk.svg",
        "importance.svg",
        "run-evaluate.json",
    ] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
    let header = fs::read_to_string(tmp.path().join("features.csv")).unwrap();
    let header = header.lines().next().unwrap();
    let expected: Vec<String> = std::iter::once("user_id".to_string())
        .chain((1..=18).map(|i| format!("x{i}")))
        .chain(std::iter::once("label".to_string()))
        .collect();
    assert_eq!(header, expected.join(","));
    let model = fs::read_to_string(tmp.path().join("model.json")).unwrap();
    assert!(model.contains("\"model_format_version\""));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run-train.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["duration_ms"].is_u64());
    assert!(manifest["outputs"].as_array().unwrap().len() >= 3);
}

#[test]
fn reruns_and_thread_counts_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "8");
    pipeline(c.path(), "1");
    let (sa, sb, sc) = (snapshot(a.path()), snapshot(b.path()), snapshot(c.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in &sa {
        assert!(bytes == &sb[name], "{name} differs between 1 and 8 threads");
        assert!(bytes == &sc[name], "{name} differs between reruns");
    }
}

#[test]
fn commands_do_not_touch_their_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    ok(&["synth", "--n", "120", "--seed", "3", "--output", d]);
    let corpus: BTreeMap<_, _> = snapshot(tmp.path());
    ok(&["tag", "--input", d]);
    ok(&["features", "--input", d]);
    let after = snapshot(tmp.path());
    for (name, bytes) in &corpus {
        assert!(bytes == &after[name], "{name} was modified");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    ok(&["synth", "--n", "60", "--seed", "1", "--output", d]);
    ok(&["tag", "--input", d]);
    ok(&["features", "--input", d]);
    assert_eq!(code(&["train", "--algo", "bogus", "--input", d]), 1);
    assert_eq!(code(&["train", "--hp", "no_such_key=1", "--input", d]), 1);
    assert_eq!(code(&["nonsense"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["ingest", "--input", d]), 1, "in-place ingest is refused");

    let missing = tmp.path().join("absent");
    let out = spamlens(&["features", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent"));

    let bad = tempfile::tempdir().unwrap();
    fs::write(bad.path().join("features.csv"), "user_id,x1\nu1,3\n").unwrap();
    let out = spamlens(&["train", "--input", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("features.csv"));

    assert_eq!(code(&["report", "--input", bad.path().to_str().unwrap()]), 2);
    assert_eq!(code(&["train-topics", "--input", missing.to_str().unwrap()]), 2);
}

#[test]
fn ingest_cleans_into_a_new_directory() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    let s = src.path().to_str().unwrap();
    ok(&["synth", "--n", "40", "--seed", "2", "--output", s]);
    let mut tweets = fs::read_to_string(src.path().join("tweets.jsonl")).unwrap();
    let first = tweets.lines().next().unwrap().to_string();
    // same user and text under a new id: a duplicate that cleansing removes
    let dup = first.replacen("\"tweet_id\":\"", "\"tweet_id\":\"dup", 1);
    tweets.push_str(&dup);
    tweets.push('\n');
    fs::write(src.path().join("tweets.jsonl"), &tweets).unwrap();
    ok(&["ingest", "--input", s, "--output", dst.path().to_str().unwrap()]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dst.path().join("ingest_report.json")).unwrap()).unwrap();
    assert_eq!(report["cleanse"]["duplicate_tweets"], 1);
    let cleaned = fs::read_to_string(dst.path().join("tweets.jsonl")).unwrap();
    assert_eq!(cleaned.lines().count(), tweets.lines().count() - 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, format!("# smoke\noutput = {d}\nseed = 11\nn = 50\n")).unwrap();
    ok(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "12"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run-synth.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 12);
    assert_eq!(manifest["config"]["n"], "50");
    let users = fs::read_to_string(tmp.path().join("users.jsonl")).unwrap();
    assert_eq!(users.lines().count(), 50);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&["synth", "--config", cfg.to_str().unwrap(), "--output", d]), 1);
}

#[test]
fn newsgroup_model_trains_from_synthesized_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    ok(&["synth", "--n", "30", "--seed", "4", "--output", d]);
    let root = tmp.path().join("20news-bydate");
    ok(&["train-topics", "--input", root.to_str().unwrap(), "--output", d, "--algo", "mnb"]);
    let eval = fs::read_to_string(tmp.path().join("topic_eval.csv")).unwrap();
    assert!(eval.starts_with("algorithm,train_docs,test_docs,train_accuracy,test_accuracy\nmultinomial_nb,"));
    ok(&["tag", "--input", d]);
    let manifest = fs::read_to_string(tmp.path().join("run-tag.json")).unwrap();
    assert!(manifest.contains("topic_model.json"));
}

#[test]
fn evaluate_compares_several_algorithms() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    ok(&["synth", "--n", "150", "--seed", "5", "--output", d]);
    ok(&["tag", "--input", d]);
    ok(&["features", "--input", d]);
    ok(&["evaluate", "--input", d, "--algo", "gaussian_nb,decision_tree", "--k", "5"]);
    let metrics = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    for m in ["gaussian_nb", "decision_tree"] {
        assert_eq!(metrics.lines().filter(|l| l.starts_with(&format!("{m},"))).count(), 5 + 2);
    }
    assert!(!tmp.path().join("roc.csv").exists(), "no split, no held-out ROC");
}
