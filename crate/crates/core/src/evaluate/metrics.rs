use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    /// Counts (prediction, label) pairs; 1 is the positive (hate) class.
    pub fn from_pairs(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let mut cm = Self::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            cm.record(p, y)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, prediction: u8, label: u8) -> Result<()> {
        match (prediction, label) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (1, 0) => self.fp += 1,
            (0, 1) => self.fn_ += 1,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "non-binary pair (prediction {prediction}, label {label})"
                )))
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The matrix seen with both classes swapped.
    pub fn complement(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// The five percentages of one evaluation. A ratio with a zero
/// denominator is `None`, never 0 or 100.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    F1,
    Accuracy,
    Precision,
    Recall,
    Specificity,
}

impl MetricKind {
    /// Column order of the comparison table.
    pub const ALL: [MetricKind; 5] = [
        MetricKind::F1,
        MetricKind::Accuracy,
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::Specificity,
    ];

    pub fn key(self) -> &'static str {
        match self {
            MetricKind::F1 => "f1",
            MetricKind::Accuracy => "accuracy",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::Specificity => "specificity",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            MetricKind::F1 => "F1-Score",
            MetricKind::Accuracy => "Accuracy",
            MetricKind::Precision => "Precision",
            MetricKind::Recall => "Recall",
            MetricKind::Specificity => "Specificity",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Metrics {
    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::F1 => self.f1,
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Precision => self.precision,
            MetricKind::Recall => self.recall,
            MetricKind::Specificity => self.specificity,
        }
    }

    pub fn set(&mut self, kind: MetricKind, value: Option<f64>) {
        let slot = match kind {
            MetricKind::F1 => &mut self.f1,
            MetricKind::Accuracy => &mut self.accuracy,
            MetricKind::Precision => &mut self.precision,
            MetricKind::Recall => &mut self.recall,
            MetricKind::Specificity => &mut self.specificity,
        };
        *slot = value;
    }
}

fn percent(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Accuracy, precision, recall, F1 and specificity as percentages.
///
/// F1 is the harmonic mean of precision and recall; when both are 0 it is
/// 0 (the limit, and the value of `2tp / (2tp + fp + fn)`).
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::InvalidInput("confusion matrix is all zero".into()));
    }
    let precision = percent(cm.tp, cm.tp + cm.fp);
    let recall = percent(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(Metrics {
        accuracy: percent(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
        specificity: percent(cm.tn, cm.tn + cm.fp),
    })
}

/// `2tp / (2tp + fp + fn)` as a percentage.
pub fn f1_counts(cm: &ConfusionMatrix) -> Option<f64> {
    percent(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldMetrics {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Cross-validation summary. `micro` is computed once from the summed
/// confusion matrix and is the headline; `macro_` is the mean of each
/// metric over the folds where it is defined.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub micro: Metrics,
    pub macro_: Metrics,
    pub per_fold: Vec<FoldMetrics>,
}

impl MetricsReport {
    pub fn from_folds(confusions: &[ConfusionMatrix]) -> Result<Self> {
        if confusions.is_empty() {
            return Err(Error::InvalidInput("no folds to aggregate".into()));
        }
        let per_fold = confusions
            .iter()
            .enumerate()
            .map(|(fold, cm)| {
                Ok(FoldMetrics {
                    fold,
                    confusion: *cm,
                    metrics: metrics(cm)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let confusion: ConfusionMatrix = confusions.iter().copied().sum();
        let mut macro_ = Metrics::default();
        for kind in MetricKind::ALL {
            let values: Vec<f64> = per_fold
                .iter()
                .filter_map(|f| f.metrics.get(kind))
                .collect();
            let mean =
                (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            macro_.set(kind, mean);
        }
        Ok(Self {
            confusion,
            micro: metrics(&confusion)?,
            macro_,
            per_fold,
        })
    }
}
