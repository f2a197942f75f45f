//! End-to-end runs of the `infostat` binary on the bundled synthetic corpus.

use std::path::Path;
use std::process::{Command, Output};

use infostat::predictions::load_predictions;
use infostat::run::verify_run;

fn infostat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infostat"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = infostat(args);
    assert!(
        out.status.success(),
        "infostat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        r#"
output_dir = "runs"

[corpus]
train = "synthetic.jsonl"

[backend]
kind = "reference"

[mention]
epochs = 100
learning_rate = 0.01
max_steps = 200

[is]
epochs = 100
learning_rate = 0.01
max_steps = 300

[eval]
folds = 2
"#,
    )
    .unwrap();
    config
}

#[test]
fn train_predict_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let corpus = dir.join("synthetic.jsonl");
    ok(&["synthetic", "--out", p(&corpus)]);
    let stats = ok(&["stats", p(&corpus)]);
    assert!(stats.contains("total                         36"), "{stats}");

    let config = write_config(dir);
    let trained = ok(&["train", "mention", "--config", p(&config)]);
    assert!(trained.contains("200 steps"), "{trained}");
    ok(&["train", "is", "--config", p(&config)]);
    let mention_run = dir.join("runs/mention");
    let is_run = dir.join("runs/is");
    let manifest = verify_run(&mention_run).unwrap();
    assert_eq!(manifest.seeds.train, 42);
    assert_eq!(manifest.train_documents.len(), 4);
    let snapshot = std::fs::read_to_string(mention_run.join("config.toml")).unwrap();
    assert!(snapshot.contains("max_steps = 200"));

    // Gold mentions: one record per gold mention.
    let gold_pred = dir.join("gold.jsonl");
    ok(&[
        "predict", "--corpus", p(&corpus), "--is-model", p(&is_run), "--gold-mentions", "--out",
        p(&gold_pred),
    ]);
    assert_eq!(load_predictions(&gold_pred).unwrap().len(), 36);
    let report = ok(&[
        "evaluate", "--gold", p(&corpus), "--predictions", p(&gold_pred), "--mode", "gold-mentions",
        "--confusion", "--out", p(&dir.join("eval-gold")),
    ]);
    assert!(report.contains("accuracy"), "{report}");
    assert!(dir.join("eval-gold/report.json").exists());

    // End to end with a length cap.
    let e2e = dir.join("e2e.jsonl");
    ok(&[
        "predict", "--corpus", p(&corpus), "--mention-model", p(&mention_run), "--is-model",
        p(&is_run), "--e2e", "--test-max-len", "2", "--out", p(&e2e),
    ]);
    let records = load_predictions(&e2e).unwrap();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.end + 1 - r.start <= 2));
    assert!(records.iter().all(|r| r.score_mention.is_some() && r.is.is_some()));
    let report = ok(&[
        "evaluate", "--gold", p(&corpus), "--predictions", p(&e2e), "--mode", "e2e", "--buckets",
    ]);
    assert!(report.contains("overall") && report.contains("Freq"), "{report}");

    // Identical systems are indistinguishable.
    let sig = ok(&[
        "significance", "--gold", p(&corpus), "--pred-a", p(&e2e), "--pred-b", p(&e2e), "--metric",
        "is-f1", "-n", "1000",
    ]);
    assert!(sig.contains("p = 1.000000"), "{sig}");

    // Bridging on the synthetic corpus: gold anaphors exist, report is written.
    let bridging = dir.join("bridging");
    ok(&[
        "bridging", "--kind", "bashi", "--corpus", p(&corpus), "--mention-model", p(&mention_run),
        "--is-model", p(&is_run), "--out", p(&bridging),
    ]);
    assert!(bridging.join("report.json").exists());
}

#[test]
fn gold_predictions_evaluate_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c.jsonl");
    ok(&["synthetic", "--out", p(&corpus)]);
    // Gold mentions written as a prediction file.
    let c = infostat::canonical::load_canonical(&corpus).unwrap();
    let records: Vec<_> = c
        .documents
        .iter()
        .flat_map(|d| {
            d.gold_mentions
                .iter()
                .map(|m| infostat::predictions::PredictionRecord::new(d, m, None).unwrap())
        })
        .collect();
    let pred = tmp.path().join("p.jsonl");
    infostat::predictions::save_predictions(&records, &pred).unwrap();
    for mode in ["gold-mentions", "e2e"] {
        let out = tmp.path().join(mode);
        ok(&[
            "evaluate", "--gold", p(&corpus), "--predictions", p(&pred), "--mode", mode, "--out",
            p(&out),
        ]);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["mention"]["f1"], 1.0);
        let key = if mode == "e2e" { "/overall/f1" } else { "/accuracy" };
        assert_eq!(json.pointer(key).unwrap(), 1.0);
    }
}

#[test]
fn failures_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    // Usage error.
    assert_eq!(infostat(&["train"]).status.code(), Some(1));
    // Missing corpus named in config: config error with the field name.
    let config = write_config(tmp.path());
    let out = infostat(&["train", "mention", "--config", p(&config)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus.train"));
    // Invalid value: config error naming the field.
    std::fs::write(tmp.path().join("synthetic.jsonl"), "").unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[corpus]\ntrain = \"synthetic.jsonl\"\n[is]\nlearning_rate = -1.0\n").unwrap();
    let out = infostat(&["train", "is", "--config", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("is.learning_rate"));
    // Malformed data.
    let broken = tmp.path().join("broken.jsonl");
    std::fs::write(&broken, "{\"doc_id\": 3}\n").unwrap();
    let out = infostat(&["stats", p(&broken)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // Converting from a missing directory.
    let out = infostat(&["convert", "scicorp", "--input", "/nonexistent", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conversion_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("scicorp");
    std::fs::create_dir_all(&root).unwrap();
    std::fs::write(root.join("p1.conll"), "We\nfit\nthe\nmodel\n.\n\nThe\nobjective\nfell\n.\n").unwrap();
    std::fs::write(root.join("p1.anaphors.tsv"), "a1\t1\t0\t1\tdefinite\tThe objective\n").unwrap();
    let out = tmp.path().join("sci.jsonl");
    let summary = ok(&["convert", "scicorp", "--input", p(&root), "--out", p(&out)]);
    assert!(summary.contains("mediated/bridging"), "{summary}");
    let first = std::fs::read(&out).unwrap();
    ok(&["convert", "scicorp", "--input", p(&root), "--out", p(&out)]);
    assert_eq!(first, std::fs::read(&out).unwrap());
}
