//! Text metrics files written into run directories.
//!
//! Both kinds are TOML with fixed-decimal numbers: percentages to 6
//! decimals, losses to 9. Undefined metrics are omitted rather than
//! written as 0.
//!
//! ```text
//! schema = "sbe-metrics/1"
//! scope = "aggregate"          # or "fold"
//! label = "BiLSTM + static BE"
//! architecture = "bilstm"
//! embedding_source = "static_be"
//! folds = 10
//! headline = "micro"
//!
//! [confusion]
//! tp = 350
//! ...
//!
//! [micro]                      # [metrics] in a fold file
//! f1 = 79.710000
//! ...
//!
//! [macro]
//! ...
//! ```

use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::EmbeddingSource;

use super::metrics::{ConfusionMatrix, FoldMetrics, MetricKind, Metrics, MetricsReport};
use super::train::TrainRecord;

pub const METRICS_SCHEMA: &str = "sbe-metrics/1";

#[derive(Clone, Debug, PartialEq)]
pub struct RunMeta {
    pub label: String,
    pub architecture: String,
    pub embedding_source: EmbeddingSource,
    pub folds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub meta: RunMeta,
    pub confusion: ConfusionMatrix,
    pub micro: Metrics,
    pub macro_: Metrics,
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn write_confusion(out: &mut String, cm: &ConfusionMatrix) {
    let _ = write!(
        out,
        "\n[confusion]\ntp = {}\ntn = {}\nfp = {}\nfn = {}\n",
        cm.tp, cm.tn, cm.fp, cm.fn_
    );
}

fn write_metrics(out: &mut String, section: &str, m: &Metrics) {
    let _ = writeln!(out, "\n[{section}]");
    for k in MetricKind::ALL {
        if let Some(v) = m.get(k) {
            let _ = writeln!(out, "{} = {v:.6}", k.key());
        }
    }
}

pub fn format_fold_metrics(fold: &FoldMetrics, record: Option<&TrainRecord>) -> String {
    let mut out = format!(
        "schema = {}\nscope = \"fold\"\nfold = {}\n",
        quoted(METRICS_SCHEMA),
        fold.fold
    );
    if let Some(r) = record {
        let _ = write!(
            out,
            "stopped_epoch = {}\nbest_epoch = {}\nbest_validation_loss = {:.9}\n",
            r.stopped_epoch, r.best_epoch, r.best_validation_loss
        );
    }
    write_confusion(&mut out, &fold.confusion);
    write_metrics(&mut out, "metrics", &fold.metrics);
    out
}

pub fn format_aggregate_metrics(meta: &RunMeta, report: &MetricsReport) -> String {
    let mut out = format!(
        "schema = {}\nscope = \"aggregate\"\nlabel = {}\narchitecture = {}\nembedding_source = {}\nfolds = {}\nheadline = \"micro\"\n",
        quoted(METRICS_SCHEMA),
        quoted(&meta.label),
        quoted(&meta.architecture),
        quoted(meta.embedding_source.name()),
        meta.folds,
    );
    write_confusion(&mut out, &report.confusion);
    write_metrics(&mut out, "micro", &report.micro);
    write_metrics(&mut out, "macro", &report.macro_);
    out
}

fn bad(detail: impl std::fmt::Display) -> Error {
    Error::Format(format!("metrics file: {detail}"))
}

fn string<'t>(t: &'t toml::Table, key: &str) -> Result<&'t str> {
    t.get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| bad(format!("missing string `{key}`")))
}

fn count(t: &toml::Table, key: &str) -> Result<u64> {
    t.get(key)
        .and_then(|v| v.as_integer())
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| bad(format!("missing count `{key}`")))
}

fn section<'t>(t: &'t toml::Table, key: &str) -> Result<&'t toml::Table> {
    t.get(key)
        .and_then(|v| v.as_table())
        .ok_or_else(|| bad(format!("missing section [{key}]")))
}

fn read_metrics(t: &toml::Table, key: &str) -> Result<Metrics> {
    let s = section(t, key)?;
    let mut m = Metrics::default();
    for k in MetricKind::ALL {
        if let Some(v) = s.get(k.key()) {
            let v = v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| bad(format!("[{key}] {k} is not a number")))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(bad(format!("[{key}] {k} = {v} outside [0, 100]")));
            }
            m.set(k, Some(v));
        }
    }
    if let Some(extra) = s
        .keys()
        .find(|x| !MetricKind::ALL.iter().any(|k| k.key() == *x))
    {
        return Err(bad(format!("[{key}] has unknown metric `{extra}`")));
    }
    Ok(m)
}

/// Parses an aggregate metrics file, rejecting any other schema.
pub fn parse_run_metrics(text: &str) -> Result<RunMetrics> {
    let t: toml::Table = text.parse().map_err(bad)?;
    let schema = string(&t, "schema")?;
    if schema != METRICS_SCHEMA {
        return Err(bad(format!(
            "schema `{schema}`, expected `{METRICS_SCHEMA}`"
        )));
    }
    if string(&t, "scope")? != "aggregate" {
        return Err(bad("not an aggregate metrics file"));
    }
    let c = section(&t, "confusion")?;
    Ok(RunMetrics {
        meta: RunMeta {
            label: string(&t, "label")?.to_owned(),
            architecture: string(&t, "architecture")?.to_owned(),
            embedding_source: string(&t, "embedding_source")?.parse()?,
            folds: count(&t, "folds")? as usize,
        },
        confusion: ConfusionMatrix::new(
            count(c, "tp")?,
            count(c, "tn")?,
            count(c, "fp")?,
            count(c, "fn")?,
        ),
        micro: read_metrics(&t, "micro")?,
        macro_: read_metrics(&t, "macro")?,
    })
}

pub fn read_run_metrics(path: &Path) -> Result<RunMetrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_metrics(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
