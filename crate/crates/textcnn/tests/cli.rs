use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use textcnn::formats::tables;
use textcnn::pipeline::{AnalysisSummary, REPORT_FILES};

const BIN: &str = env!("CARGO_BIN_EXE_textcnn");

fn textcnn(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = textcnn(args);
    assert!(
        out.status.success(),
        "textcnn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit status is nonzero and stderr is one `error:` line.
fn fails(args: &[&str]) -> String {
    let out = textcnn(args);
    assert!(!out.status.success(), "textcnn {args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with("error: "), "{err}");
    err
}

fn write_config(dir: &Path, corpus: &str, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"seed = 3
out_dir = "out"
{corpus}
[model]
feature_maps = 64
epochs = 2
batch_size = 32
{extra}
[analysis]
top_k = 4
"#
    );
    fs::write(&path, text).unwrap();
    path
}

fn synthetic_config(dir: &Path) -> PathBuf {
    let corpus = r#"
[dataset]
kind = "synthetic-questions"
train = 240
test = 60

[embeddings]
format = "random"
dim = 12
"#;
    write_config(dir, corpus, "")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_analyze_and_plot_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let out = dir.path().join("out");

    let stdout = ok(&["train", "--config", s(&cfg)]);
    assert!(stdout.contains("test accuracy"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2, "header plus one row per epoch");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let last_acc: f64 = metrics.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(manifest["test_accuracy"].as_f64().unwrap(), last_acc);
    assert_eq!(manifest["seed"], 3);

    let ckpt_before = fs::read(out.join("model.ckpt")).unwrap();
    ok(&["analyze", "--config", s(&cfg)]);
    assert_eq!(fs::read(out.join("model.ckpt")).unwrap(), ckpt_before, "analyze leaves the checkpoint alone");
    for f in REPORT_FILES {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let classes = tables::parse_class_table_csv(&fs::read_to_string(out.join("class_table.csv")).unwrap()).unwrap();
    assert_eq!(classes.rows.len(), 7);
    assert_eq!(classes.groups.len(), 6);
    assert!((0..6).all(|g| classes.column_total(g) == 64));

    // The export alone reproduces the analysis.
    let copy = dir.path().join("copy.tsv");
    fs::copy(out.join("activations.tsv"), &copy).unwrap();
    fs::remove_file(out.join("model.ckpt")).unwrap();
    let again = dir.path().join("again");
    ok(&["analyze", "--config", s(&cfg), "--activations", s(&copy), "--out", s(&again)]);
    for f in REPORT_FILES {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }

    let plots = dir.path().join("plots");
    let printed = ok(&["plot", "--activations", s(&copy), "--kernels", "2-4/#3", "2-4/#7", "--out", s(&plots)]);
    let svg_path = plots.join("graph_2-4-3_2-4-7.svg");
    assert!(printed.contains("graph_2-4-3_2-4-7.svg"));
    let svg = fs::read_to_string(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let r = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("r"))
        .and_then(|n| n.text())
        .unwrap();
    if r != "r=undefined" {
        let v = r.strip_prefix("r=").unwrap();
        assert!(v.parse::<f64>().unwrap().abs() <= 1.0);
        assert_eq!(v.split_once('.').unwrap().1.len(), 5, "{r}");
    }

    ok(&["plot", "--activations", s(&copy), "--kernels", "2-4/#3", "2-4/#7", "--out", s(&again)]);
    assert_eq!(svg, fs::read_to_string(again.join("graph_2-4-3_2-4-7.svg")).unwrap());

    let err = fails(&["plot", "--activations", s(&copy), "--kernels", "1-3/#0", "2-3/#0", "--out", s(&plots)]);
    assert!(err.contains("different groups"), "{err}");
    assert!(err.contains("n-gram length"), "{err}");
    let err = fails(&["plot", "--activations", s(&copy), "--kernels", "1-3/#99", "1-3/#0"]);
    assert!(err.contains("1-3/#99"), "{err}");
}

#[test]
fn summary_matches_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let out = dir.path().join("out");
    ok(&["train", "--config", s(&cfg)]);
    ok(&["analyze", "--config", s(&cfg)]);
    let summary: AnalysisSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let pairs = tables::parse_pair_table_csv(&fs::read_to_string(out.join("pairs.csv")).unwrap()).unwrap();
    assert!(pairs.is_monotone());
    for l in &summary.layers {
        assert_eq!(l.pairs, vec![pairs.layer_sum(l.layer, 0), pairs.layer_sum(l.layer, 1)]);
        assert_eq!(l.classes.iter().sum::<usize>(), 3 * 64);
    }
    let bridges = tables::parse_bridge_list_csv(&fs::read_to_string(out.join("bridges.csv")).unwrap()).unwrap();
    assert!(bridges.iter().all(|(_, b)| b.satisfies(0.1, 0.4)));
    let top = tables::parse_top_ngrams_csv(&fs::read_to_string(out.join("top_ngrams.csv")).unwrap()).unwrap();
    assert_eq!(top.len(), 384 * 4);
}

#[test]
fn probe_export_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    ok(&["train", "--config", s(&cfg), "--out", s(&dir.path().join("m"))]);
    let ckpt = dir.path().join("m/model.ckpt");
    let stdout = ok(&["probe-export", "--config", s(&cfg), "--checkpoint", s(&ckpt)]);
    assert!(stdout.contains("activations.tsv"));
    let text = fs::read_to_string(dir.path().join("out/activations.tsv")).unwrap();
    let mut groups = 0;
    let mut lines = text.lines().skip(3).peekable();
    while let Some(header) = lines.next() {
        let fields: Vec<&str> = header.split('\t').collect();
        let probes: usize = fields[4].strip_prefix("probes=").unwrap().parse().unwrap();
        lines.next();
        let rows: Vec<&str> = (0..probes).map(|_| lines.next().unwrap()).collect();
        let n: usize = fields[2].strip_prefix("ngram=").unwrap().parse().unwrap();
        let unique: std::collections::HashSet<Vec<&str>> =
            rows.iter().map(|r| r.split('\t').skip(1).take(n).collect()).collect();
        assert_eq!(unique.len(), probes, "every row is a distinct n-gram");
        groups += 1;
        assert!(lines.peek().is_none_or(|l| l.starts_with("group\t")));
    }
    assert_eq!(groups, 6);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        ok(&["train", "--config", s(&cfg), "--out", s(o)]);
        ok(&["analyze", "--config", s(&cfg), "--out", s(o)]);
    }
    for f in ["model.ckpt", "metrics.csv", "manifest.json"].into_iter().chain(REPORT_FILES) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    ok(&["train", "--config", s(&cfg), "--out", s(&c), "--seed", "4"]);
    assert_ne!(fs::read(a.join("model.ckpt")).unwrap(), fs::read(c.join("model.ckpt")).unwrap());
}

#[test]
fn file_inputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let stdout = ok(&["gen-synthetic", "--out", s(&data), "--train", "200", "--test", "50", "--dim", "10"]);
    assert_eq!(stdout.lines().count(), 3);
    let corpus = r#"
[dataset]
kind = "trec"
train = "data/train.label"
test = "data/test.label"

[embeddings]
format = "word2vec-text"
path = "data/embeddings.txt"
"#;
    let cfg = write_config(dir.path(), corpus, "");
    ok(&["train", "--config", s(&cfg)]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["dataset"]["train"], 200);
    assert_eq!(manifest["dataset"]["test"], 50);
    assert_eq!(manifest["embeddings"]["dim"], 10);

    // Missing inputs fail before any training output appears.
    fs::remove_file(data.join("embeddings.txt")).unwrap();
    let err = fails(&["train", "--config", s(&cfg), "--out", s(&dir.path().join("never"))]);
    assert!(err.contains("embeddings.txt"), "{err}");
    assert!(!dir.path().join("never").exists());

    let err = fails(&["analyze", "--config", s(&cfg), "--out", s(&dir.path().join("empty"))]);
    assert!(err.contains("model.ckpt"), "{err}");

    let bad = write_config(dir.path(), corpus, "[probe]\nsplit = \"train\"\n[graph]\nlimit = 0\n");
    let err = fails(&["train", "--config", s(&bad)]);
    assert!(err.contains("graph.limit"), "{err}");
    let err = fails(&["train", "--config", s(&dir.path().join("nope.toml"))]);
    assert!(err.contains("nope.toml"), "{err}");
    fs::write(data.join("train.label"), "BOGUS:x what is it\n").unwrap();
    let cfg = write_config(
        dir.path(),
        &corpus.replace("word2vec-text\"\npath = \"data/embeddings.txt\"", "random\"\ndim = 4"),
        "",
    );
    let err = fails(&["train", "--config", s(&cfg)]);
    assert!(err.contains("train.label:1:"), "{err}");
}

#[test]
fn corrupt_checkpoint_is_a_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    ok(&["train", "--config", s(&cfg)]);
    let ckpt = dir.path().join("out/model.ckpt");
    let mut bytes = fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    fs::write(&ckpt, bytes).unwrap();
    let err = fails(&["probe-export", "--config", s(&cfg)]);
    assert!(err.contains("checksum mismatch"), "{err}");
}
