//! One line per acceptance criterion. Gating criteria fail the test; the
//! target band needs real contextual-embedding data and is informational.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::RngExt;

use common::*;
use sbe_core::corpus::stratified_folds;
use sbe_core::distill::{
    greedy_longest_prefix, oov_embedding, ContextualAccumulator, StaticEmbeddingTable,
};
use sbe_core::engine::{attention, AttentionParams, GradCheckOptions, Tensor};
use sbe_core::evaluate::{
    accuracy, auto_pairs, comparison_report, f1_counts, metrics, train, ConfusionMatrix,
    MetricKind, Metrics, RunRow, TrainConfig,
};
use sbe_core::models::{grad_check_model, Architecture, Classifier, EmbeddingSource, ModelConfig};
use sbe_core::seed;
use sbe_core::synthetic::{separable_corpus, SyntheticSpec};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Runs a criterion, prints its line, and reports whether it passed.
fn criterion(name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= b);
    let passed = o.passed && in_budget;
    let budget_note = budget.map_or(String::new(), |b| format!(", budget {b:?}"));
    // Straight to stdout so the line shows even when libtest captures output.
    let _ = writeln!(
        std::io::stdout(),
        "[{}] {name}: {} ({elapsed:.2?}{budget_note})",
        if passed { "PASS" } else { "FAIL" },
        o.detail
    );
    passed
}

fn balance_criterion() -> Outcome {
    // The ETHOS binary file is not redistributed here; this corpus has the
    // same 433 hate / 565 non-hate split.
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 433, 565, 7);
    let o = sbe(&["balance", path_str(&corpus)]);
    if !o.status.success() {
        return outcome(false, format!("exit {:?}: {}", o.status.code(), stderr(&o)));
    }
    let out = stdout(&o);
    let value: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("balance = "))
        .unwrap()
        .parse()
        .unwrap();
    let counts_ok = out.contains("hate = 433") && out.contains("non-hate = 565");
    outcome(
        counts_ok && (value - 0.986).abs() <= 1e-3,
        format!("433/565 prints balance {value:.4}, expected 0.986 ± 0.001"),
    )
}

fn oracle_percent(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 * 100.0 / den as f64)
    }
}

fn metric_oracle_criterion() -> Outcome {
    let mut rng = seed::rng(2024);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..300);
        let bias: f64 = rng.random();
        let labels: Vec<u8> = (0..n)
            .map(|_| u8::from(rng.random::<f64>() < bias))
            .collect();
        let preds: Vec<u8> = (0..n)
            .map(|_| u8::from(rng.random::<f64>() < 0.5))
            .collect();
        let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for i in 0..n {
            if preds[i] == 1 && labels[i] == 1 {
                tp += 1;
            } else if preds[i] == 0 && labels[i] == 0 {
                tn += 1;
            } else if preds[i] == 1 {
                fp += 1;
            } else {
                fn_ += 1;
            }
        }
        let cm = ConfusionMatrix::from_pairs(&preds, &labels).unwrap();
        if cm != ConfusionMatrix::new(tp, tn, fp, fn_) {
            return outcome(
                false,
                format!("case {case}: counts {cm:?} vs recount ({tp}, {tn}, {fp}, {fn_})"),
            );
        }
        let m = metrics(&cm).unwrap();
        let p = oracle_percent(tp, tp + fp);
        let r = oracle_percent(tp, tp + fn_);
        let f1 = match (p, r) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        let expected = [
            (m.accuracy, oracle_percent(tp + tn, n as u64)),
            (m.precision, p),
            (m.recall, r),
            (m.f1, f1),
            (m.specificity, oracle_percent(tn, tn + fp)),
        ];
        for (got, want) in expected {
            match (got, want) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => {
                    return outcome(
                        false,
                        format!("case {case}: definedness differs ({got:?} vs {want:?})"),
                    )
                }
            }
        }
        if let (Some(a), Some(b)) = (m.f1, f1_counts(&cm)) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("1000 cases, counts exact, max formula deviation {worst:.1e} (≤ 1e-12)"),
    )
}

fn gradient_criterion() -> Outcome {
    let spec = SyntheticSpec {
        examples: 0,
        vocab: 12,
        dim: 6,
        max_len: 6,
        min_len: 1,
    };
    let (_, matrix) = separable_corpus(&spec, 5);
    let tokens = [3, 9, 2, 13, 7, 4];
    let mut lines = Vec::new();
    let mut ok = true;
    for arch in Architecture::ALL {
        let config = ModelConfig {
            max_len: 6,
            hidden: 8,
            conv_filters: 8,
            trainable_embeddings: true,
            ..ModelConfig::reference(arch)
        };
        let mut model = Classifier::build(&config, &matrix).unwrap();
        let r =
            grad_check_model(&mut model, &tokens, 1, 1e-4, GradCheckOptions::default()).unwrap();
        ok &= r.passed();
        lines.push(format!("{arch} {:.1e}", r.max_rel_error));
    }
    outcome(
        ok,
        format!("T=6, H=8, max relative error ≤ 1e-4: {}", lines.join(", ")),
    )
}

fn distillation_criterion() -> Outcome {
    let mut rng = seed::rng(77);
    let dim = 16;
    let mut raw: Vec<(String, Vec<Vec<f64>>)> = (0..100)
        .map(|i| {
            let count = rng.random_range(1..=25);
            let occ = (0..count)
                .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect();
            (format!("w{i}"), occ)
        })
        .collect();
    let mut stream: Vec<(usize, usize)> = raw
        .iter()
        .enumerate()
        .flat_map(|(w, (_, occ))| (0..occ.len()).map(move |k| (w, k)))
        .collect();
    stream.shuffle(&mut rng);
    let mut acc = ContextualAccumulator::new(dim);
    for &(w, k) in &stream {
        acc.accumulate(&raw[w].0, &raw[w].1[k]).unwrap();
    }
    let table = acc.finalize().unwrap();
    let mut worst = 0.0f64;
    for (word, occ) in &mut raw {
        let got = table.get(word).unwrap();
        for j in 0..dim {
            let mean = occ.iter().map(|v| v[j]).sum::<f64>() / occ.len() as f64;
            worst = worst.max((got[j] - mean).abs());
        }
    }

    let mut sub = StaticEmbeddingTable::new(4);
    for (w, v) in [
        ("hate", [1.0, 0.0, 0.0, 0.0]),
        ("hat", [3.0, 3.0, 3.0, 3.0]),
        ("ful", [0.0, 2.0, 0.0, 0.0]),
        ("ness", [0.0, 0.0, 4.0, 0.0]),
        ("un", [2.0, 2.0, 2.0, 2.0]),
        ("kind", [0.0, 0.0, 0.0, 8.0]),
        ("e", [1.0, 1.0, 1.0, 1.0]),
        ("s", [-1.0, 0.0, 1.0, 0.0]),
    ] {
        sub.insert(w.to_owned(), v.to_vec()).unwrap();
    }
    let fixtures: [(&str, [f64; 4]); 10] = [
        ("hateful", [0.5, 1.0, 0.0, 0.0]),
        ("unkind", [1.0, 1.0, 1.0, 5.0]),
        ("unkindness", [2.0 / 3.0, 2.0 / 3.0, 2.0, 10.0 / 3.0]),
        ("hates", [0.0, 0.0, 0.5, 0.0]),
        ("hatex", [1.0, 0.0, 0.0, 0.0]),
        ("xhate", [1.0, 0.0, 0.0, 0.0]),
        ("hatful", [1.5, 2.5, 1.5, 1.5]),
        ("kinds", [-0.5, 0.0, 0.5, 4.0]),
        ("ee", [1.0, 1.0, 1.0, 1.0]),
        ("unhateful", [1.0, 4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]),
    ];
    let split = greedy_longest_prefix(&sub);
    let mut oov_worst = 0.0f64;
    for (word, want) in fixtures {
        let (got, _) = oov_embedding(word, &sub, &split, 0);
        for (g, w) in got.iter().zip(want) {
            oov_worst = oov_worst.max((g - w).abs());
        }
    }
    outcome(
        worst <= 1e-12 && oov_worst <= 1e-12,
        format!("100 words: max |mean error| {worst:.1e}; 10 subword fixtures: max error {oov_worst:.1e}"),
    )
}

fn random_tensor(rng: &mut seed::Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

fn attention_criterion() -> Outcome {
    let mut rng = seed::rng(31);
    let (mut sum_err, mut uniform_err, mut hull_violations) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..100 {
        let t = rng.random_range(1..=12);
        let h = rng.random_range(1..=8);
        let a = rng.random_range(1..=8);
        let states = random_tensor(&mut rng, t, h, 2.0);
        let params = AttentionParams {
            w: random_tensor(&mut rng, h, a, 1.5),
            b: random_tensor(&mut rng, 1, a, 0.5),
            v: random_tensor(&mut rng, a, 1, 1.5),
        };
        let s = attention(&states, &params).unwrap();
        sum_err = sum_err.max((s.weights.iter().sum::<f64>() - 1.0).abs());
        for j in 0..h {
            let col: Vec<f64> = (0..t).map(|r| states.get(r, j)).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if s.context[j] < lo - 1e-12 || s.context[j] > hi + 1e-12 {
                hull_violations += 1;
            }
        }
        // v = 0 makes every score equal.
        let flat = AttentionParams {
            v: Tensor::zeros(a, 1),
            ..params
        };
        let u = attention(&states, &flat).unwrap();
        for j in 0..h {
            let mean = (0..t).map(|r| states.get(r, j)).sum::<f64>() / t as f64;
            uniform_err = uniform_err.max((u.context[j] - mean).abs());
        }
    }
    outcome(
        sum_err <= 1e-9 && uniform_err <= 1e-9 && hull_violations == 0,
        format!(
            "100 instances: |Σα − 1| ≤ {sum_err:.1e}, uniform-case error {uniform_err:.1e}, {hull_violations} hull violations"
        ),
    )
}

fn stratification_criterion() -> Outcome {
    let mut rng = seed::rng(404);
    for case in 0..200 {
        let k = rng.random_range(2..=10);
        let ones = rng.random_range(k..=k * 15);
        let zeros = rng.random_range(k..=k * 15);
        let mut labels: Vec<u8> = std::iter::repeat_n(1, ones)
            .chain(std::iter::repeat_n(0, zeros))
            .collect();
        labels.shuffle(&mut rng);
        let plan = stratified_folds(&labels, k, case as u64).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for f in 0..k {
            let test = plan.test_indices(f);
            for &i in &test {
                seen[i] += 1;
            }
            for (class, total) in [(1u8, ones), (0u8, zeros)] {
                let c = test.iter().filter(|&&i| labels[i] == class).count() as f64;
                let share = total as f64 / k as f64;
                if (c - share).abs() > 1.0 {
                    return outcome(
                        false,
                        format!("case {case}: fold {f} has {c} of class {class}, share {share:.2}"),
                    );
                }
            }
        }
        if seen.iter().any(|&s| s != 1) {
            return outcome(
                false,
                format!("case {case}: folds do not partition the index set"),
            );
        }
    }
    outcome(
        true,
        "200 label multisets: per-fold class counts within ±1 of share, folds partition",
    )
}

fn learnability_criterion() -> Outcome {
    let (data, matrix) = separable_corpus(&SyntheticSpec::default(), 2025);
    let schedule = TrainConfig {
        max_epochs: 50,
        patience: 50,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for arch in Architecture::ALL {
        let config = ModelConfig {
            max_len: 12,
            hidden: 8,
            conv_filters: 8,
            ..ModelConfig::reference(arch)
        };
        let run = || {
            let mut model = Classifier::build(&config, &matrix).unwrap();
            let record = train(&mut model, &data, &data[..40], &schedule).unwrap();
            (accuracy(&model, &data).unwrap(), record)
        };
        let (acc, first) = run();
        let (acc2, second) = run();
        let deterministic = first == second && acc == acc2;
        ok &= acc >= 0.95 && deterministic;
        lines.push(format!(
            "{arch} {:.1}%{}",
            100.0 * acc,
            if deterministic {
                ""
            } else {
                " (nondeterministic)"
            }
        ));
    }
    outcome(
        ok,
        format!(
            "200 examples, ≤ 50 epochs, ≥ 95% training accuracy: {}",
            lines.join(", ")
        ),
    )
}

fn determinism_criterion() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 20, 20, 11);
    let table = write_table(dir.path(), "table.txt", 6, 11);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = sbe(&[
            "kfold",
            path_str(&corpus),
            "--table",
            path_str(&table),
            "--arch",
            "bilstm_attention",
            "--folds",
            "2",
            "--epochs",
            "3",
            "--max-len",
            "8",
            "--hidden",
            "6",
            "--jobs",
            "2",
            "--seed",
            "42",
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("aggregate-metrics")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    outcome(
        a == b,
        format!(
            "two identical `kfold` runs: aggregate-metrics {}",
            if a == b { "byte-identical" } else { "differ" }
        ),
    )
}

fn report_criterion() -> Outcome {
    let rows: Vec<RunRow> = PUBLISHED_ROWS
        .iter()
        .map(|(label, arch, emb, v)| {
            let mut metrics = Metrics::default();
            for (k, x) in MetricKind::ALL.iter().zip(v) {
                metrics.set(*k, Some(*x));
            }
            RunRow {
                label: (*label).to_owned(),
                architecture: (*arch).to_owned(),
                embedding: emb.parse::<EmbeddingSource>().unwrap(),
                metrics,
            }
        })
        .collect();
    let pairs = auto_pairs(&rows);
    let report = comparison_report(&rows, &pairs);
    let avg = report.average.expect("pairs");
    let targets = [
        (MetricKind::F1, 3.56),
        (MetricKind::Accuracy, 3.39),
        (MetricKind::Precision, 3.40),
        (MetricKind::Recall, 3.55),
    ];
    let ok = pairs.len() == 5
        && targets
            .iter()
            .all(|&(k, want)| avg.get(k).is_some_and(|v| (v - want).abs() <= 0.01 + 1e-12));
    let shown: Vec<String> = MetricKind::ALL
        .iter()
        .map(|&k| format!("{k} {:+.3}", avg.get(k).unwrap()))
        .collect();
    outcome(
        ok,
        format!(
            "{} pairs, average increases {} (targets 3.56/3.39/3.40/3.55 ± 0.01)",
            pairs.len(),
            shown.join(", ")
        ),
    )
}

#[test]
fn acceptance() {
    let _ = writeln!(std::io::stdout());
    let results = [
        criterion("balance", Some(Duration::from_secs(1)), balance_criterion),
        criterion(
            "metric oracle",
            Some(Duration::from_secs(10)),
            metric_oracle_criterion,
        ),
        criterion(
            "gradient suite",
            Some(Duration::from_secs(120)),
            gradient_criterion,
        ),
        criterion(
            "distillation oracle",
            Some(Duration::from_secs(5)),
            distillation_criterion,
        ),
        criterion("attention properties", None, attention_criterion),
        criterion("stratification", None, stratification_criterion),
        criterion(
            "learnability smoke",
            Some(Duration::from_secs(300)),
            learnability_criterion,
        ),
        criterion("determinism", None, determinism_criterion),
        criterion("report math", None, report_criterion),
    ];
    let _ = writeln!(
        std::io::stdout(),
        "[INFO] target band (not gating): needs contextual embeddings extracted from the full ETHOS corpus; run `sbe kfold` with --arch bilstm on a distilled table and compare F1/specificity with 79.71/83.03 ± 6"
    );
    let failed = results.iter().filter(|p| !**p).count();
    assert_eq!(
        failed, 0,
        "{failed} acceptance criteria failed; see the lines above"
    );
}
