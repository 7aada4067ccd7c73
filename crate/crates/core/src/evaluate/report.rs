use std::fmt::Write;

use crate::models::EmbeddingSource;

use super::metrics::{MetricKind, Metrics};

/// One row of a comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub label: String,
    /// Runs with the same architecture key can be paired.
    pub architecture: String,
    pub embedding: EmbeddingSource,
    pub metrics: Metrics,
}

/// `(baseline, candidate)` row indices; deltas are candidate − baseline.
pub type Pair = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct PairDelta {
    pub baseline: usize,
    pub candidate: usize,
    pub delta: Metrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<RunRow>,
    pub deltas: Vec<PairDelta>,
    /// Mean delta per metric over the pairs where it is defined.
    pub average: Option<Metrics>,
    pub markdown: String,
    pub csv: String,
}

/// Pairs every static-BE run with the first run of the same architecture
/// that uses another embedding.
pub fn auto_pairs(rows: &[RunRow]) -> Vec<Pair> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.embedding == EmbeddingSource::StaticBe)
        .filter_map(|(c, cand)| {
            rows.iter()
                .position(|b| {
                    b.architecture == cand.architecture && b.embedding != EmbeddingSource::StaticBe
                })
                .map(|b| (b, c))
        })
        .collect()
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.2}"))
}

fn signed2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:+.2}"))
}

fn csv_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.2}"))
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Renders a Table-2-style comparison: one row per run with column maxima
/// in bold, then per-pair differences and their average.
///
/// Values are percentages shown to two decimals; maxima and averages are
/// computed from the unrounded numbers.
pub fn comparison_report(rows: &[RunRow], pairs: &[Pair]) -> ComparisonReport {
    let deltas: Vec<PairDelta> = pairs
        .iter()
        .map(|&(b, c)| {
            let mut delta = Metrics::default();
            for k in MetricKind::ALL {
                let d = rows[c]
                    .metrics
                    .get(k)
                    .zip(rows[b].metrics.get(k))
                    .map(|(x, y)| x - y);
                delta.set(k, d);
            }
            PairDelta {
                baseline: b,
                candidate: c,
                delta,
            }
        })
        .collect();
    let average = (!deltas.is_empty()).then(|| {
        let mut avg = Metrics::default();
        for k in MetricKind::ALL {
            let v: Vec<f64> = deltas.iter().filter_map(|d| d.delta.get(k)).collect();
            avg.set(
                k,
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
            );
        }
        avg
    });

    let maxima: Vec<Option<f64>> = MetricKind::ALL
        .iter()
        .map(|&k| {
            rows.iter()
                .filter_map(|r| r.metrics.get(k))
                .reduce(f64::max)
        })
        .collect();

    let mut md = String::new();
    md.push_str("| Model |");
    for k in MetricKind::ALL {
        let _ = write!(md, " {} |", k.title());
    }
    md.push_str("\n|---|");
    md.push_str(&"---:|".repeat(MetricKind::ALL.len()));
    md.push('\n');
    for r in rows {
        let _ = write!(md, "| {} |", r.label);
        for (k, max) in MetricKind::ALL.iter().zip(&maxima) {
            let v = r.metrics.get(*k);
            if v.is_some() && v == *max {
                let _ = write!(md, " **{}** |", fmt2(v));
            } else {
                let _ = write!(md, " {} |", fmt2(v));
            }
        }
        md.push('\n');
    }
    md.push_str("\nBold values are the column maxima.\n\n### Paired differences\n\n");
    if deltas.is_empty() {
        md.push_str("No paired runs.\n");
    } else {
        md.push_str("| Candidate − baseline |");
        for k in MetricKind::ALL {
            let _ = write!(md, " {} |", k.title());
        }
        md.push_str("\n|---|");
        md.push_str(&"---:|".repeat(MetricKind::ALL.len()));
        md.push('\n');
        for d in &deltas {
            let _ = write!(
                md,
                "| {} − {} |",
                rows[d.candidate].label, rows[d.baseline].label
            );
            for k in MetricKind::ALL {
                let _ = write!(md, " {} |", signed2(d.delta.get(k)));
            }
            md.push('\n');
        }
        let avg = average.expect("pairs exist");
        md.push_str("| **Average increase** |");
        for k in MetricKind::ALL {
            let _ = write!(md, " {} |", signed2(avg.get(k)));
        }
        md.push('\n');
    }

    let mut csv = String::from("kind,label,architecture,embedding");
    for k in MetricKind::ALL {
        let _ = write!(csv, ",{}", k.key());
    }
    csv.push('\n');
    let mut line = |kind: &str, label: &str, arch: &str, emb: &str, m: &Metrics| {
        let _ = write!(csv, "{kind},{},{},{emb}", csv_text(label), csv_text(arch));
        for k in MetricKind::ALL {
            let _ = write!(csv, ",{}", csv_cell(m.get(k)));
        }
        csv.push('\n');
    };
    for r in rows {
        line(
            "run",
            &r.label,
            &r.architecture,
            r.embedding.name(),
            &r.metrics,
        );
    }
    for d in &deltas {
        let c = &rows[d.candidate];
        let label = format!("{} - {}", c.label, rows[d.baseline].label);
        line("delta", &label, &c.architecture, "", &d.delta);
    }
    if let Some(avg) = &average {
        line("average", "average increase", "", "", avg);
    }

    ComparisonReport {
        rows: rows.to_vec(),
        deltas,
        average,
        markdown: md,
        csv,
    }
}
