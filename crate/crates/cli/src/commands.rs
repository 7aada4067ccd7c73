use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};

use sbe_core::corpus::{
    self, balance as balance_of, build_vocabulary, encode, stratified_holdout, EncodedExample,
    LabeledExample, Vocabulary,
};
use sbe_core::distill::{self, concat_tables, load_word_vectors, read_ceb, EmbeddingMatrix};
use sbe_core::engine::GradCheckOptions;
use sbe_core::evaluate::{
    accuracy, auto_pairs, comparison_report, format_aggregate_metrics, format_fold_metrics,
    read_run_metrics, run_kfold, train as train_model, MetricKind, Metrics, RunMeta, RunRow,
    TrainConfig,
};
use sbe_core::models::{grad_check_model, Architecture, Classifier, EmbeddingSource, ModelConfig};
use sbe_core::seed::derive_seed;
use sbe_core::synthetic::{separable_corpus, SyntheticSpec};

use crate::args::{
    BalanceArgs, BuildMatrixArgs, CorpusArgs, DistillArgs, GradcheckArgs, KfoldArgs, ModelArgs,
    ReportArgs, TrainArgs,
};
use crate::manifest::RunManifest;

pub const RESOLVED_CONFIG: &str = "resolved-config";
pub const AGGREGATE_METRICS: &str = "aggregate-metrics";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_corpus(a: &CorpusArgs) -> Result<Vec<LabeledExample>> {
    let examples = corpus::load_corpus(&a.corpus, a.delimiter, a.label_threshold)?;
    if examples.is_empty() {
        bail!("{}: no examples", a.corpus.display());
    }
    Ok(examples)
}

fn corpus_manifest(m: RunManifest, a: &CorpusArgs) -> RunManifest {
    m.input(&a.corpus)
        .arg("delimiter", (a.delimiter as char).to_string())
        .arg("label_threshold", a.label_threshold)
}

pub fn distill(a: &DistillArgs) -> Result<bool> {
    RunManifest::new("distill", &a.out).input(&a.ceb).write()?;
    let file = File::open(&a.ceb).with_context(|| format!("opening {}", a.ceb.display()))?;
    let (acc, summary) = read_ceb(BufReader::new(file), &a.ceb)?;
    let table = acc.finalize()?;
    let path = a.out.join("embeddings.txt");
    table.write(&path)?;
    println!(
        "{} words, dim {}, {} occurrences -> {}",
        summary.words,
        summary.dim,
        summary.occurrences,
        path.display()
    );
    Ok(true)
}

struct Prepared {
    examples: Vec<LabeledExample>,
    vocab: Vocabulary,
    matrix: EmbeddingMatrix,
}

fn prepare(corpus: &CorpusArgs, tables: &[std::path::PathBuf], seed: u64) -> Result<Prepared> {
    let examples = load_corpus(corpus)?;
    let vocab = build_vocabulary(&examples)?;
    let table = match tables {
        [one] => load_word_vectors(one, None)?.0,
        [first, second] => concat_tables(
            &load_word_vectors(first, None)?.0,
            &load_word_vectors(second, None)?.0,
        ),
        _ => bail!("expected one or two --table files, got {}", tables.len()),
    };
    let (matrix, coverage) = distill::build_matrix(&vocab, &table, seed)?;
    println!(
        "vocabulary {} words, dim {}: {} found, {} from subwords, {} random",
        vocab.len(),
        matrix.dim(),
        coverage.found,
        coverage.oov_resolved,
        coverage.fallback
    );
    Ok(Prepared {
        examples,
        vocab,
        matrix,
    })
}

pub fn build_matrix(a: &BuildMatrixArgs) -> Result<bool> {
    let mut m = corpus_manifest(RunManifest::new("build-matrix", &a.out), &a.corpus).seed(a.seed);
    for t in &a.tables {
        m = m.input(t);
    }
    m.write()?;
    let p = prepare(&a.corpus, &a.tables, a.seed)?;
    p.vocab.write(&a.out.join("vocab.tsv"))?;
    p.matrix.write(&a.out.join("matrix.bin"))?;
    Ok(true)
}

pub fn balance(a: &BalanceArgs) -> Result<bool> {
    let examples = load_corpus(&a.corpus)?;
    let [non_hate, hate] = corpus::class_counts(&examples);
    // Only observed classes count: a one-class file has no defined balance.
    let present: Vec<u64> = [non_hate, hate].into_iter().filter(|&c| c > 0).collect();
    let report = balance_of(&present)?;
    println!("non-hate = {non_hate}");
    println!("hate = {hate}");
    println!("n = {}", report.n);
    println!("entropy = {:.6}", report.entropy);
    println!("balance = {:.4}", report.balance);
    Ok(true)
}

struct Resolved {
    model: ModelConfig,
    schedule: TrainConfig,
    label: String,
}

fn resolve(a: &ModelArgs) -> Result<Resolved> {
    let mut base: Option<(ModelConfig, toml::Table)> = None;
    if let Some(path) = &a.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing {}", path.display()))?;
        let training = match table.remove("training") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => bail!("{}: [training] must be a table", path.display()),
            None => toml::Table::new(),
        };
        let model = ModelConfig::from_toml(&toml::to_string(&table)?)
            .with_context(|| format!("in {}", path.display()))?;
        base = Some((model, training));
    }
    let arch = match (&a.arch, &base) {
        (Some(name), _) => name.parse::<Architecture>()?,
        (None, Some((c, _))) => c.architecture,
        (None, None) => bail!(
            "--arch is required (valid names: {})",
            Architecture::valid_names()
        ),
    };
    let (mut model, training) = match base {
        Some((c, t)) if c.architecture == arch => (c, t),
        Some((c, t)) => (
            ModelConfig {
                architecture: arch,
                hidden: arch.reference_hidden(),
                ..c
            },
            t,
        ),
        None => (ModelConfig::reference(arch), toml::Table::new()),
    };

    model.embedding_source = match (&a.embedding_source, a.config.is_some()) {
        (Some(s), _) => s.parse()?,
        (None, true) => model.embedding_source,
        (None, false) if a.tables.len() == 2 => EmbeddingSource::Concat,
        (None, false) => EmbeddingSource::StaticBe,
    };
    match (model.embedding_source, a.tables.len()) {
        (EmbeddingSource::Concat, 2)
        | (EmbeddingSource::StaticBe | EmbeddingSource::WordVectors, 1) => {}
        (s, n) => bail!(
            "embedding source `{}` does not fit {n} --table file(s)",
            s.name()
        ),
    }
    if let Some(v) = a.max_len {
        model.max_len = v;
    }
    if let Some(v) = a.hidden {
        model.hidden = v;
    }
    if let Some(v) = a.conv_filters {
        model.conv_filters = v;
    }
    if let Some(v) = a.conv_width {
        model.conv_width = v;
    }
    if let Some(v) = a.pool_size {
        model.pool_size = v;
    }
    if a.attention_units.is_some() {
        model.attention_units = a.attention_units;
    }
    if let Some(v) = a.dropout {
        model.dropout = v;
    }
    model.trainable_embeddings |= a.trainable_embeddings;
    model.seed = a.seed;
    model.validate()?;

    let int = |key: &str| -> Result<Option<usize>> {
        training
            .get(key)
            .map(|v| {
                v.as_integer()
                    .and_then(|i| usize::try_from(i).ok())
                    .with_context(|| format!("[training] {key} must be a non-negative integer"))
            })
            .transpose()
    };
    let float = |key: &str| -> Result<Option<f64>> {
        training
            .get(key)
            .map(|v| {
                v.as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .with_context(|| format!("[training] {key} must be a number"))
            })
            .transpose()
    };
    let d = TrainConfig::default();
    let mut schedule = TrainConfig {
        max_epochs: a.epochs.or(int("max_epochs")?).unwrap_or(d.max_epochs),
        batch_size: a.batch_size.or(int("batch_size")?).unwrap_or(d.batch_size),
        patience: a.patience.or(int("patience")?).unwrap_or(d.patience),
        min_delta: a.min_delta.or(float("min_delta")?).unwrap_or(d.min_delta),
        seed: a.seed,
        ..d
    };
    schedule.adam.lr = a.lr.or(float("learning_rate")?).unwrap_or(d.adam.lr);
    schedule.validate()?;

    let label = a.label.clone().unwrap_or_else(|| {
        format!(
            "{} + {}",
            arch.display_name(),
            model.embedding_source.display_name()
        )
    });
    Ok(Resolved {
        model,
        schedule,
        label,
    })
}

fn resolved_config_text(r: &Resolved) -> String {
    let s = &r.schedule;
    format!(
        "{}\n[training]\nmax_epochs = {}\nbatch_size = {}\npatience = {}\nmin_delta = {:e}\nlearning_rate = {:e}\n",
        r.model.to_toml(),
        s.max_epochs,
        s.batch_size,
        s.patience,
        s.min_delta,
        s.adam.lr
    )
}

fn model_manifest(name: &'static str, a: &ModelArgs, r: &Resolved) -> Result<RunManifest> {
    let mut m = corpus_manifest(RunManifest::new(name, &a.out), &a.corpus)
        .seed(a.seed)
        .arg("label", r.label.clone());
    for t in &a.tables {
        m = m.input(t);
    }
    if let Some(c) = &a.config {
        m = m.arg("config", c.display().to_string());
    }
    m.config(&resolved_config_text(r))
}

fn encode_all(p: &Prepared, max_len: usize) -> Vec<EncodedExample> {
    p.examples
        .iter()
        .map(|e| encode(e, &p.vocab, max_len))
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<bool> {
    let a = &a.model;
    let r = resolve(a)?;
    model_manifest("train", a, &r)?.write()?;
    write(&a.out.join(RESOLVED_CONFIG), resolved_config_text(&r))?;

    let p = prepare(&a.corpus, &a.tables, a.seed)?;
    let data = encode_all(&p, r.model.max_len);
    let labels: Vec<u8> = data.iter().map(|e| e.label).collect();
    let (keep, hold) = stratified_holdout(
        &labels,
        sbe_core::evaluate::VALIDATION_FRACTION,
        derive_seed(a.seed, "validation"),
    );
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    let (train_set, validation_set) = (pick(&keep), pick(&hold));

    let model_config = ModelConfig {
        seed: derive_seed(a.seed, "model"),
        ..r.model.clone()
    };
    let schedule = TrainConfig {
        seed: derive_seed(a.seed, "train"),
        ..r.schedule.clone()
    };
    let mut model = Classifier::build(&model_config, &p.matrix)?;
    let record = train_model(&mut model, &train_set, &validation_set, &schedule)?;
    let train_acc = accuracy(&model, &train_set)?;
    let val_acc = accuracy(&model, &validation_set)?;

    write(&a.out.join("checkpoint"), &record.checkpoint)?;
    p.vocab.write(&a.out.join("vocab.tsv"))?;
    p.matrix.write(&a.out.join("matrix.bin"))?;
    let losses = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.9}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    write(
        &a.out.join("train-record"),
        format!(
            "stopped_epoch = {}\nbest_epoch = {}\nbest_validation_loss = {:.9}\ntrain_accuracy = {:.6}\nvalidation_accuracy = {:.6}\ntrain_losses = [{}]\nvalidation_losses = [{}]\n",
            record.stopped_epoch,
            record.best_epoch,
            record.best_validation_loss,
            100.0 * train_acc,
            100.0 * val_acc,
            losses(&record.train_losses),
            losses(&record.validation_losses),
        ),
    )?;
    println!(
        "{}: {} epochs, best epoch {} (validation loss {:.4}), train accuracy {:.2}, validation accuracy {:.2}",
        r.label,
        record.stopped_epoch,
        record.best_epoch,
        record.best_validation_loss,
        100.0 * train_acc,
        100.0 * val_acc
    );
    Ok(true)
}

fn metrics_row(label: &str, m: &Metrics) -> String {
    let mut s = label.to_owned();
    for k in MetricKind::ALL {
        let _ = write!(
            s,
            "  {} {}",
            k.title(),
            m.get(k).map_or("n/a".into(), |v| format!("{v:.2}"))
        );
    }
    s
}

pub fn kfold(a: &KfoldArgs) -> Result<bool> {
    let m = &a.model;
    let r = resolve(m)?;
    model_manifest("kfold", m, &r)?
        .arg("folds", a.folds as i64)
        .arg("jobs", a.jobs as i64)
        .write()?;
    write(&m.out.join(RESOLVED_CONFIG), resolved_config_text(&r))?;

    let p = prepare(&m.corpus, &m.tables, m.seed)?;
    let data = encode_all(&p, r.model.max_len);
    let run = run_kfold(
        &data,
        &p.matrix,
        &r.model,
        &r.schedule,
        a.folds,
        m.seed,
        a.jobs,
    )?;

    run.plan.write(&m.out.join("folds.csv"))?;
    for (fold, fm) in run.folds.iter().zip(&run.report.per_fold) {
        let dir = m.out.join(format!("fold-{}", fold.split.fold));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        if let Some(record) = &fold.record {
            write(&dir.join("checkpoint"), &record.checkpoint)?;
        }
        write(
            &dir.join("metrics"),
            format_fold_metrics(fm, fold.record.as_ref()),
        )?;
    }
    let meta = RunMeta {
        label: r.label.clone(),
        architecture: r.model.architecture.name().to_owned(),
        embedding_source: r.model.embedding_source,
        folds: a.folds,
    };
    write(
        &m.out.join(AGGREGATE_METRICS),
        format_aggregate_metrics(&meta, &run.report),
    )?;

    let row = RunRow {
        label: r.label.clone(),
        architecture: meta.architecture.clone(),
        embedding: meta.embedding_source,
        metrics: run.report.micro,
    };
    let report = comparison_report(&[row], &[]);
    let mut md = format!(
        "## {} ({}-fold, micro-averaged)\n\n{}",
        r.label, a.folds, report.markdown
    );
    md.push_str("\n### Folds\n\n| Fold |");
    for k in MetricKind::ALL {
        let _ = write!(md, " {} |", k.title());
    }
    md.push_str(" TP | TN | FP | FN |\n|---|");
    md.push_str(&"---:|".repeat(MetricKind::ALL.len() + 4));
    md.push('\n');
    let cell = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.2}"));
    for f in &run.report.per_fold {
        let _ = write!(md, "| {} |", f.fold);
        for k in MetricKind::ALL {
            let _ = write!(md, " {} |", cell(f.metrics.get(k)));
        }
        let c = f.confusion;
        let _ = writeln!(md, " {} | {} | {} | {} |", c.tp, c.tn, c.fp, c.fn_);
    }
    md.push_str("| macro mean |");
    for k in MetricKind::ALL {
        let _ = write!(md, " {} |", cell(run.report.macro_.get(k)));
    }
    let c = run.report.confusion;
    let _ = writeln!(md, " {} | {} | {} | {} |", c.tp, c.tn, c.fp, c.fn_);
    write(&m.out.join("report.md"), md)?;
    write(&m.out.join("report.csv"), report.csv)?;

    println!(
        "{}",
        metrics_row(&format!("{} (micro)", r.label), &run.report.micro)
    );
    println!(
        "{}",
        metrics_row(&format!("{} (macro)", r.label), &run.report.macro_)
    );
    Ok(true)
}

pub fn report(a: &ReportArgs) -> Result<bool> {
    let mut m = RunManifest::new("report", &a.out).arg("aggregate", a.aggregate.clone());
    for r in &a.runs {
        m = m.input(r);
    }
    m.write()?;
    let rows = a
        .runs
        .iter()
        .map(|dir| {
            let run = read_run_metrics(&dir.join(AGGREGATE_METRICS))?;
            Ok(RunRow {
                label: run.meta.label,
                architecture: run.meta.architecture,
                embedding: run.meta.embedding_source,
                metrics: if a.aggregate == "macro" {
                    run.macro_
                } else {
                    run.micro
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = comparison_report(&rows, &auto_pairs(&rows));
    write(&a.out.join("report.md"), &report.markdown)?;
    write(&a.out.join("report.csv"), &report.csv)?;
    print!("{}", report.markdown);
    Ok(true)
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<bool> {
    let archs: Vec<Architecture> = if a.arch == "all" {
        Architecture::ALL.to_vec()
    } else {
        vec![a.arch.parse()?]
    };
    if a.length == 0 {
        bail!("--length must be at least 1");
    }
    let spec = SyntheticSpec {
        examples: 0,
        vocab: 10,
        dim: 5,
        max_len: a.length,
        min_len: 1,
    };
    let (_, matrix) = separable_corpus(&spec, a.seed);
    let tokens: Vec<usize> = (0..a.length)
        .map(|i| 2 + (i * 7 + a.seed as usize) % spec.vocab)
        .collect();
    let options = GradCheckOptions {
        step: 0.0,
        corrupt: a.corrupt,
    };
    let mut all_passed = true;
    for arch in archs {
        let config = ModelConfig {
            max_len: a.length,
            seed: a.seed,
            ..ModelConfig::tiny(arch)
        };
        let mut model = Classifier::build(&config, &matrix)?;
        let report = grad_check_model(&mut model, &tokens, 1, a.tolerance, options)?;
        all_passed &= report.passed();
        println!(
            "{:<17} max relative error {:.3e} at {} over {} entries: {}",
            arch.name(),
            report.max_rel_error,
            report.worst_param,
            report.checked,
            if report.passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(all_passed)
}
