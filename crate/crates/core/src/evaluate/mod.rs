//! Metrics, training with early stopping, the stratified k-fold protocol
//! and comparison reports.

mod files;
mod kfold;
mod metrics;
mod report;
mod train;

pub use files::{
    format_aggregate_metrics, format_fold_metrics, parse_run_metrics, read_run_metrics, RunMeta,
    RunMetrics, METRICS_SCHEMA,
};
pub use kfold::{
    fold_seed, run_kfold, run_kfold_with, FoldOutcome, FoldResult, FoldSplit, KFoldRun,
    VALIDATION_FRACTION,
};
pub use metrics::{
    f1_counts, metrics, ConfusionMatrix, FoldMetrics, MetricKind, Metrics, MetricsReport,
};
pub use report::{auto_pairs, comparison_report, ComparisonReport, Pair, PairDelta, RunRow};
pub use train::{accuracy, mean_loss, train, EarlyStopping, TrainConfig, TrainRecord, MIN_DELTA};
