mod common;

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_profile-forge"))
        .args(args)
        .env_remove("PROFILE_FORGE_PORT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn snapshot_args() -> Vec<String> {
    common::snapshot_dirs().iter().flat_map(|d| ["--snapshot".to_string(), path(d).to_string()]).collect()
}

#[test]
fn profile_twice_matches_goldens() {
    let fx = common::fixtures();
    let config = fx.join("config.toml");
    let target = fx.join("snapshots/elena-marchetti");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for out in [a.path(), b.path()] {
        ok(&["--config", path(&config), "profile", "--target", path(&target), "--out", path(out)]);
    }
    for file in ["elena-marchetti.graph.json", "elena-marchetti.manifest.json"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(file)).unwrap());
        assert_eq!(x, std::fs::read(fx.join("golden/graphs").join(file)).unwrap(), "{file}");
    }
    assert!(a.path().join("elena-marchetti.timings.json").exists());
}

#[test]
fn retraining_reproduces_committed_models() {
    let fx = common::fixtures();
    let dir = tempfile::tempdir().unwrap();
    let config = fx.join("config.toml");
    let snaps = snapshot_args();
    let snaps: Vec<&str> = snaps.iter().map(String::as_str).collect();
    for (verb, file) in [("train-relevance", "relevance.json"), ("train-relations", "relations.json")] {
        let out = dir.path().join(file);
        let mut args = vec!["--config", path(&config), verb, "--out", path(&out)];
        args.extend(&snaps);
        ok(&args);
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fx.join("models").join(file)).unwrap(), "{file}");
    }
}

#[test]
fn classify_extract_and_eval() {
    let fx = common::fixtures();
    let config = fx.join("config.toml");
    let target = fx.join("snapshots/elena-marchetti");
    let tsv = ok(&["--config", path(&config), "classify", "--snapshot", path(&target)]);
    assert_eq!(tsv.lines().next(), Some("page_id\tlabel\tscore\tprovenance"));
    assert_eq!(tsv.lines().filter(|l| l.contains("\trelevant\t")).count(), 5);

    let novelty = ok(&["--config", path(&config), "extract", "--snapshot", path(&target), "--novelty"]);
    let v: serde_json::Value = serde_json::from_str(&novelty).unwrap();
    assert_eq!(v["overall"]["total_entities"], 10);
    assert_eq!(v["overall"]["not_on_homepage"], 7);
    assert_eq!(v["overall"]["not_on_homepage_but_on_wikipedia"], 3);

    let snaps = snapshot_args();
    let mut args = vec!["--config", path(&config), "eval", "--folds", "3"];
    args.extend(snaps.iter().map(String::as_str));
    let report = ok(&args);
    assert!(report.lines().any(|l| l.starts_with("macro")), "{report}");
}

#[test]
fn synth_then_scale_up() {
    let dir = tempfile::tempdir().unwrap();
    let (labeled, unlabeled) = (dir.path().join("labeled"), dir.path().join("unlabeled"));
    ok(&["--seed", "3", "synth", "relevance", "--out", path(&labeled), "--count", "2"]);
    ok(&["--seed", "4", "synth", "relevance", "--out", path(&unlabeled), "--count", "2", "--no-labels"]);
    let seed_model = dir.path().join("seed.json");
    let (l1, l2) = (labeled.join("entity-01"), labeled.join("entity-02"));
    ok(&["train-relevance", "--snapshot", path(&l1), "--snapshot", path(&l2), "--learner", "naive_bayes", "--out", path(&seed_model)]);
    let scaled = dir.path().join("scaled.json");
    let report = ok(&[
        "scale-up", "--model", path(&seed_model), "--labeled", path(&l1), "--labeled", path(&l2),
        "--unlabeled", path(&unlabeled.join("entity-01")), "--unlabeled", path(&unlabeled.join("entity-02")),
        "--learner", "naive_bayes", "--out", path(&scaled),
    ]);
    assert!(report.contains("assigned_relevant\t"));
    assert!(scaled.exists());
}

#[test]
fn errors_exit_nonzero() {
    let out = cli(&["--config", "/nonexistent/config.toml", "profile", "--target", "."]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!cli(&["classify", "--snapshot", "."]).status.success());
    assert!(!cli(&["train-relevance", "--snapshot", "/nonexistent", "--out", "/tmp/x.json"]).status.success());
}
