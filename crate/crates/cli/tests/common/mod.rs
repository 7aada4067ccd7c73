#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::RngExt;
use sbe_core::seed;

pub fn sbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbe"))
        .args(args)
        .output()
        .expect("sbe binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

const HATE: [&str; 8] = [
    "hate",
    "kill",
    "scum",
    "vermin",
    "disgusting",
    "filth",
    "destroy",
    "deport",
];
const NEUTRAL: [&str; 8] = [
    "love", "music", "great", "video", "thanks", "friend", "nice", "song",
];
const COMMON: [&str; 7] = ["the", "a", "is", "this", "you", "they", "are"];

/// `;`-separated corpus with vote-fraction labels: `hate` rows score ≥ 0.5.
pub fn write_corpus(dir: &Path, hate: usize, non_hate: usize, seed: u64) -> PathBuf {
    let mut rng = seed::rng(seed);
    let mut rows: Vec<(bool, usize)> = (0..hate)
        .map(|i| (true, i))
        .chain((0..non_hate).map(|i| (false, i)))
        .collect();
    rows.shuffle(&mut rng);
    let mut text = String::from("comment;isHate\n");
    for (is_hate, _) in rows {
        let pool = if is_hate { &HATE } else { &NEUTRAL };
        let mut words: Vec<&str> = pool.sample(&mut rng, 3).copied().collect();
        words.extend(COMMON.sample(&mut rng, 2));
        words.shuffle(&mut rng);
        let score = if is_hate {
            *[0.5, 0.8, 1.0].choose(&mut rng).unwrap()
        } else {
            *[0.0, 0.2, 0.4].choose(&mut rng).unwrap()
        };
        text.push_str(&format!("{};{score}\n", words.join(" ")));
    }
    let path = dir.join("corpus.csv");
    std::fs::write(&path, text).unwrap();
    path
}

/// Word-vector table over the fixture vocabulary (`name` lets tests create
/// several).
pub fn write_table(dir: &Path, name: &str, dim: usize, seed: u64) -> PathBuf {
    let mut rng = seed::rng(seed);
    let mut text = String::new();
    for w in HATE.iter().chain(&NEUTRAL).chain(&COMMON) {
        let v: Vec<String> = (0..dim)
            .map(|_| format!("{:.4}", rng.random_range(-1.0..1.0)))
            .collect();
        text.push_str(&format!("{w} {}\n", v.join(" ")));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Published comparison rows: (label, architecture, embedding, [F1, accuracy, precision,
/// recall, specificity]).
pub const PUBLISHED_ROWS: [(&str, &str, &str, [f64; 5]); 11] = [
    (
        "CNN + Attention + FT + GV",
        "cnn_attention",
        "concat",
        [74.41, 75.15, 74.92, 74.35, 80.35],
    ),
    (
        "CNN + Attention + static BE",
        "cnn_attention",
        "static_be",
        [77.52, 77.96, 77.89, 77.69, 79.62],
    ),
    (
        "CNN + LSTM + GV",
        "cnn_lstm",
        "word_vectors",
        [72.13, 72.94, 73.47, 72.4, 76.65],
    ),
    (
        "CNN + LSTM + static BE",
        "cnn_lstm",
        "static_be",
        [76.04, 76.66, 77.20, 76.18, 79.43],
    ),
    (
        "LSTM + FT + GV",
        "lstm",
        "concat",
        [72.85, 73.43, 73.37, 72.97, 76.44],
    ),
    (
        "LSTM + static BE",
        "lstm",
        "static_be",
        [79.08, 79.36, 79.38, 79.37, 79.49],
    ),
    (
        "BiLSTM + FT + GV",
        "bilstm",
        "concat",
        [76.85, 77.45, 77.99, 77.10, 79.66],
    ),
    (
        "BiLSTM + static BE",
        "bilstm",
        "static_be",
        [79.71, 80.15, 80.37, 79.76, 83.03],
    ),
    (
        "BiLSTM + Attention + FT",
        "bilstm_attention",
        "word_vectors",
        [76.80, 77.34, 77.76, 77.00, 79.63],
    ),
    (
        "BiLSTM + Attention + static BE",
        "bilstm_attention",
        "static_be",
        [78.52, 79.16, 79.67, 78.58, 83.00],
    ),
    (
        "GRU + static BE",
        "gru",
        "static_be",
        [77.91, 78.36, 78.59, 78.18, 79.47],
    ),
];

/// A run directory holding only an `aggregate-metrics` file with published
/// percentages; the confusion counts were not published and are left zero.
pub fn write_fixture_run(
    dir: &Path,
    label: &str,
    arch: &str,
    embedding: &str,
    v: [f64; 5],
) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let metrics = format!(
        "f1 = {:.6}\naccuracy = {:.6}\nprecision = {:.6}\nrecall = {:.6}\nspecificity = {:.6}\n",
        v[0], v[1], v[2], v[3], v[4]
    );
    let text = format!(
        "schema = \"sbe-metrics/1\"\nscope = \"aggregate\"\nlabel = \"{label}\"\narchitecture = \"{arch}\"\nembedding_source = \"{embedding}\"\nfolds = 10\nheadline = \"micro\"\n\n[confusion]\ntp = 0\ntn = 0\nfp = 0\nfn = 0\n\n[micro]\n{metrics}\n[macro]\n{metrics}"
    );
    std::fs::write(dir.join("aggregate-metrics"), text).unwrap();
    dir.to_owned()
}
