use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bihyper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bihyper"))
        .args(args)
        .env("BIHYPER_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = bihyper(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn failure_line(out: &Output) -> String {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    stderr.lines().find(|l| l.starts_with("error kind=")).unwrap_or_default().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fixture_train_score_eval_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (data, run) = (dir.path().join("data"), dir.path().join("run"));
    let start = Instant::now();
    ok(&["fixture", "--out", p(&data)]);
    ok(&["train", "--dataset", p(&data), "--name", "FIXTURE", "--mode", "do2hsc", "--out", p(&run)]);
    ok(&["score", "--out", p(&run)]);
    ok(&["eval", "--out", p(&run)]);
    assert!(start.elapsed() < Duration::from_secs(60));

    for f in [
        "checkpoint.json",
        "metadata.json",
        "loss.csv",
        "loss.csv.meta.json",
        "split.json",
        "scores.csv",
        "scores.csv.meta.json",
        "eval.json",
        "histogram.csv",
        "histogram.csv.meta.json",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let ckpt: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("checkpoint.json")).unwrap()).unwrap();
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("eval.json")).unwrap()).unwrap();
    assert_eq!(ckpt["stamp"], eval["stamp"]);
    let auc = eval["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let loss = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,phase,loss,"));
    assert!(loss.lines().count() > 500);
}

#[test]
fn simulate_writes_a_six_by_five_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--dims",
        "1,10,50,100,200,500",
        "--quantiles",
        "0.01,0.25,0.5,0.75,0.99",
        "--out",
        p(dir.path()),
    ]);
    let table = fs::read_to_string(dir.path().join("quantiles.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.len() == 6));
    let median_100: f64 = rows[4][3].parse().unwrap();
    assert!((median_100 - 9.9662).abs() / 9.9662 < 0.03);
    assert!(dir.path().join("mixture.json").is_file());
}

#[test]
fn rerun_from_config_file_gives_identical_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["fixture", "--out", p(&data)]);
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        serde_json::json!({
            "dataset": data,
            "name": "FIXTURE",
            "mode": "dohsc",
            "normal_class": 0,
            "train": { "train_epochs": 30, "seed": 5 }
        })
        .to_string(),
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let run = dir.path().join(format!("run{i}"));
        for args in [
            vec!["train", "--config", p(&config), "--out", p(&run)],
            vec!["score", "--out", p(&run)],
        ] {
            let out = Command::new(env!("CARGO_BIN_EXE_bihyper"))
                .args(&args)
                .env("BIHYPER_THREADS", threads)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        }
        outputs.push((fs::read(run.join("scores.csv")).unwrap(), fs::read(run.join("checkpoint.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn flags_override_config_and_preset_pins_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["fixture", "--out", p(&data)]);
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"name": "FIXTURE", "train": {"nu": 0.2, "lambda": 3.0, "train_epochs": 7}}"#).unwrap();
    let run = dir.path().join("run");
    ok(&[
        "train", "--config", p(&config), "--dataset", p(&data), "--paper-defaults", "--epochs", "3", "--out", p(&run),
    ]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["nu"], 0.01);
    assert_eq!(meta["config"]["lambda"], 10.0);
    assert_eq!(meta["config"]["train_epochs"], 3);
}

#[test]
fn eval_refuses_scores_from_another_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["fixture", "--out", p(&data)]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (run, seed) in [(&a, "1"), (&b, "2")] {
        ok(&["train", "--dataset", p(&data), "--name", "FIXTURE", "--epochs", "5", "--seed", seed, "--out", p(run)]);
        ok(&["score", "--out", p(run)]);
    }
    fs::copy(b.join("scores.csv"), a.join("scores.csv")).unwrap();
    fs::copy(b.join("scores.csv.meta.json"), a.join("scores.csv.meta.json")).unwrap();
    let line = failure_line(&bihyper(&["eval", "--out", p(&a)]));
    assert!(line.starts_with("error kind=run_mismatch msg="), "{line}");
    assert!(!a.join("eval.json").exists());
}

#[test]
fn failures_are_reported_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let line = failure_line(&bihyper(&["train", "--dataset", p(&missing), "--name", "X", "--out", p(dir.path())]));
    assert!(line.starts_with("error kind=ingest"), "{line}");

    let out = bihyper(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(failure_line(&out).starts_with("error kind=usage"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let line = failure_line(&bihyper(&["train", "--config", p(&bad), "--out", p(dir.path())]));
    assert!(line.starts_with("error kind=ingest"), "{line}");

    let data = dir.path().join("data");
    ok(&["fixture", "--out", p(&data)]);
    let line = failure_line(&bihyper(&[
        "train", "--dataset", p(&data), "--name", "FIXTURE", "--orthogonality", "penalty", "--out", p(dir.path()),
    ]));
    assert!(line.starts_with("error kind=not_implemented"), "{line}");
}

#[test]
fn tabular_mode_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blobs.csv");
    let mut text = String::from("x,y,label\n");
    // normals on a small ring, anomalies far away
    for i in 0..80 {
        let a = i as f64 * 0.7;
        text.push_str(&format!("{},{},0\n", a.cos() * (1.0 + (i % 5) as f64 * 0.1), a.sin()));
    }
    for i in 0..20 {
        text.push_str(&format!("{},{},1\n", 6.0 + i as f64 * 0.1, -5.0));
    }
    fs::write(&csv, text).unwrap();
    let run = dir.path().join("run");
    ok(&["train", "--dataset", p(&csv), "--mode", "tabular-dohsc", "--epochs", "50", "--out", p(&run)]);
    ok(&["score", "--out", p(&run)]);
    ok(&["eval", "--out", p(&run)]);
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("eval.json")).unwrap()).unwrap();
    assert!(eval["auc"].as_f64().unwrap() > 0.9, "{eval}");
}
