mod common;

use std::path::Path;

use common::*;

#[test]
fn distill_writes_the_mean_vector() {
    let dir = tempfile::tempdir().unwrap();
    let ceb = dir.path().join("batch.ceb");
    std::fs::write(
        &ceb,
        "CEB 1 3\nhate\t1 2 3\nlove\t0.5 -0.25 1\nhate\t2 4 0\nhate\t3 0 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = sbe(&["distill", path_str(&ceb), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 words, dim 3"), "{}", stdout(&o));
    let golden = "hate 2 2 2\nlove 0.5 -0.25 1\n";
    assert_eq!(
        std::fs::read_to_string(out.join("embeddings.txt")).unwrap(),
        golden
    );
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn distill_rejects_empty_and_mismatched_batches() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.ceb");
    std::fs::write(&empty, "CEB 1 4\n").unwrap();
    let o = sbe(&[
        "distill",
        path_str(&empty),
        "--out",
        path_str(&dir.path().join("a")),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no occurrences"), "{}", stderr(&o));

    let bad = dir.path().join("bad.ceb");
    std::fs::write(&bad, "CEB 1 3\nhate\t1 2 3\nlove\t1 2\n").unwrap();
    let o = sbe(&[
        "distill",
        path_str(&bad),
        "--out",
        path_str(&dir.path().join("b")),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

fn balance_value(out: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix("balance = "))
        .expect("balance line")
        .parse()
        .unwrap()
}

#[test]
fn balance_of_balanced_and_single_class_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 10, 10, 1);
    let o = sbe(&["balance", path_str(&corpus)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(balance_value(&stdout(&o)), 1.0);

    let one = dir.path().join("one.csv");
    std::fs::write(&one, "comment;isHate\nyou are great;0\nnice song;0.1\n").unwrap();
    let o = sbe(&["balance", path_str(&one)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 2 classes"), "{}", stderr(&o));
}

#[test]
fn balance_honours_delimiter_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    std::fs::write(
        &path,
        "isHate\tcomment\n0.3\tfoo bar\n0.6\tbaz\n0.9\tqux\n0.0\tquux\n",
    )
    .unwrap();
    let o = sbe(&["balance", path_str(&path), "--delimiter", "tab"]);
    assert!(
        stdout(&o).contains("hate = 2"),
        "{}{}",
        stdout(&o),
        stderr(&o)
    );
    let o = sbe(&[
        "balance",
        path_str(&path),
        "--delimiter",
        "tab",
        "--label-threshold",
        "0.25",
    ]);
    assert!(stdout(&o).contains("hate = 3"), "{}", stdout(&o));
}

fn kfold_args<'a>(corpus: &'a str, table: &'a str, out: &'a str, arch: &'a str) -> Vec<&'a str> {
    vec![
        "kfold",
        corpus,
        "--table",
        table,
        "--arch",
        arch,
        "--folds",
        "2",
        "--epochs",
        "3",
        "--max-len",
        "8",
        "--hidden",
        "8",
        "--conv-filters",
        "8",
        "--out",
        out,
        "--seed",
        "3",
    ]
}

#[test]
fn kfold_writes_the_documented_layout_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 20, 20, 2);
    let table = write_table(dir.path(), "table.txt", 6, 2);
    let (c, t) = (path_str(&corpus), path_str(&table));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = sbe(&kfold_args(c, t, path_str(&a), "lstm"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("LSTM + static BE (micro)"),
        "{}",
        stdout(&o)
    );
    for f in [
        "manifest.toml",
        "resolved-config",
        "folds.csv",
        "aggregate-metrics",
        "report.md",
        "report.csv",
        "fold-0/checkpoint",
        "fold-0/metrics",
        "fold-1/checkpoint",
        "fold-1/metrics",
    ] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    let o = sbe(&kfold_args(c, t, path_str(&b), "lstm"));
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "aggregate-metrics"), read(&b, "aggregate-metrics"));
    assert_eq!(read(&a, "fold-1/checkpoint"), read(&b, "fold-1/checkpoint"));
    assert_eq!(read(&a, "report.csv"), read(&b, "report.csv"));

    // resolved-config replays the run
    let c2 = dir.path().join("c");
    let o = sbe(&[
        "kfold",
        c,
        "--table",
        t,
        "--config",
        path_str(&a.join("resolved-config")),
        "--folds",
        "2",
        "--seed",
        "3",
        "--out",
        path_str(&c2),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        read(&a, "aggregate-metrics"),
        read(&c2, "aggregate-metrics")
    );
}

#[test]
fn kfold_rejects_unknown_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 4, 4, 3);
    let table = write_table(dir.path(), "table.txt", 4, 3);
    let out = dir.path().join("out");
    let o = sbe(&kfold_args(
        path_str(&corpus),
        path_str(&table),
        path_str(&out),
        "transformer",
    ));
    assert!(!o.status.success());
    let err = stderr(&o);
    for name in [
        "cnn_attention",
        "cnn_lstm",
        "lstm",
        "bilstm",
        "bilstm_attention",
        "gru",
    ] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn concat_needs_two_tables() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 10, 10, 4);
    let t1 = write_table(dir.path(), "ft.txt", 3, 4);
    let t2 = write_table(dir.path(), "gv.txt", 2, 5);
    let out = dir.path().join("m");
    let o = sbe(&[
        "build-matrix",
        path_str(&corpus),
        "--table",
        path_str(&t1),
        "--table",
        path_str(&t2),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dim 5"), "{}", stdout(&o));
    assert!(out.join("matrix.bin").is_file() && out.join("vocab.tsv").is_file());

    let mut args = kfold_args(path_str(&corpus), path_str(&t1), path_str(&out), "gru");
    args.extend(["--embedding-source", "concat"]);
    let o = sbe(&args);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("concat"), "{}", stderr(&o));
}

#[test]
fn train_writes_checkpoint_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 15, 15, 5);
    let table = write_table(dir.path(), "table.txt", 5, 5);
    let out = dir.path().join("t");
    let o = sbe(&[
        "train",
        path_str(&corpus),
        "--table",
        path_str(&table),
        "--arch",
        "cnn_attention",
        "--epochs",
        "4",
        "--max-len",
        "8",
        "--conv-filters",
        "6",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "manifest.toml",
        "resolved-config",
        "checkpoint",
        "train-record",
        "vocab.tsv",
        "matrix.bin",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let record: toml::Table = std::fs::read_to_string(out.join("train-record"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(record["stopped_epoch"].as_integer(), Some(4));
}

#[test]
fn report_bolds_maxima_and_pairs_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_fixture_run(
        &dir.path().join("a"),
        "BiLSTM + FT + GV",
        "bilstm",
        "concat",
        [76.85, 77.45, 77.99, 77.10, 79.66],
    );
    let b = write_fixture_run(
        &dir.path().join("b"),
        "BiLSTM + static BE",
        "bilstm",
        "static_be",
        [79.71, 80.15, 80.37, 79.76, 83.03],
    );
    let out = dir.path().join("r");
    let o = sbe(&[
        "report",
        path_str(&a),
        path_str(&b),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(
        md.contains(
            "| BiLSTM + static BE | **79.71** | **80.15** | **80.37** | **79.76** | **83.03** |"
        ),
        "{md}"
    );
    assert!(md.contains("| BiLSTM + FT + GV | 76.85 |"), "{md}");
    assert!(md.contains("+2.86"), "{md}");
    assert!(out.join("report.csv").is_file());
}

#[test]
fn report_rejects_other_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_fixture_run(&dir.path().join("a"), "x", "lstm", "static_be", [1.0; 5]);
    let b = write_fixture_run(&dir.path().join("b"), "y", "lstm", "concat", [1.0; 5]);
    let path = b.join("aggregate-metrics");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("sbe-metrics/1", "sbe-metrics/2");
    std::fs::write(&path, text).unwrap();
    let o = sbe(&[
        "report",
        path_str(&a),
        path_str(&b),
        "--out",
        path_str(&dir.path().join("r")),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("schema"), "{}", stderr(&o));
}

#[test]
fn report_reproduces_published_average_increases() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<String> = PUBLISHED_ROWS
        .iter()
        .enumerate()
        .map(|(i, (label, arch, emb, v))| {
            let d = write_fixture_run(&dir.path().join(format!("run{i}")), label, arch, emb, *v);
            d.to_str().unwrap().to_owned()
        })
        .collect();
    let out = dir.path().join("r");
    let mut args: Vec<&str> = vec!["report"];
    args.extend(runs.iter().map(String::as_str));
    args.extend(["--out", path_str(&out)]);
    let o = sbe(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let avg = csv
        .lines()
        .find(|l| l.starts_with("average,"))
        .expect("average row");
    let v: Vec<f64> = avg.split(',').skip(4).map(|x| x.parse().unwrap()).collect();
    // f1, accuracy, precision, recall, specificity
    for (got, want) in v.iter().zip([3.56, 3.39, 3.40, 3.55, 2.37]) {
        assert!((got - want).abs() <= 0.01 + 1e-9, "{avg}");
    }
    assert_eq!(csv.lines().filter(|l| l.starts_with("delta,")).count(), 5);
}

#[test]
fn gradcheck_passes_every_architecture() {
    let o = sbe(&["gradcheck"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 6);
    let o = sbe(&["gradcheck", "--length", "1"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn gradcheck_catches_a_corrupted_gradient() {
    let o = sbe(&[
        "gradcheck",
        "--arch",
        "bilstm_attention",
        "--corrupt",
        "0.01",
    ]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("FAIL"), "{}", stdout(&o));
}
