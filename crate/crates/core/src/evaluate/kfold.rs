use rayon::prelude::*;

use crate::corpus::{stratified_folds, stratified_holdout, EncodedExample, FoldPlan};
use crate::distill::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::models::{Classifier, ModelConfig};
use crate::seed;

use super::metrics::{ConfusionMatrix, MetricsReport};
use super::train::{train, TrainConfig, TrainRecord};

/// Share of each fold's training portion held out for early stopping.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Index sets handed to a fold's model.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// What a fold's model produced: one prediction per test index, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub predictions: Vec<u8>,
    pub record: Option<TrainRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub split: FoldSplit,
    pub confusion: ConfusionMatrix,
    pub record: Option<TrainRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KFoldRun {
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    pub report: MetricsReport,
}

/// Per-fold seed derived from the global one.
pub fn fold_seed(seed: u64, fold: usize, purpose: &str) -> u64 {
    seed::derive_seed(seed, &format!("fold-{fold}/{purpose}"))
}

/// Stratified k-fold driver over any fold model. Up to `jobs` folds run at
/// once; results are assembled in fold order after all have finished.
pub fn run_kfold_with<F>(
    labels: &[u8],
    k: usize,
    seed: u64,
    jobs: usize,
    fit: F,
) -> Result<KFoldRun>
where
    F: Fn(&FoldSplit) -> Result<FoldOutcome> + Sync,
{
    let plan = stratified_folds(labels, k, seed)?;
    let splits = (0..k)
        .map(|fold| {
            let train_all = plan.train_indices(fold);
            let train_labels: Vec<u8> = train_all.iter().map(|&i| labels[i]).collect();
            let (keep, hold) = stratified_holdout(
                &train_labels,
                VALIDATION_FRACTION,
                fold_seed(seed, fold, "validation"),
            );
            Ok(FoldSplit {
                fold,
                train: keep.into_iter().map(|i| train_all[i]).collect(),
                validation: hold.into_iter().map(|i| train_all[i]).collect(),
                test: plan.test_indices(fold),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let outcomes = pool.install(|| splits.par_iter().map(&fit).collect::<Vec<_>>());

    let mut folds = Vec::with_capacity(k);
    for (split, outcome) in splits.into_iter().zip(outcomes) {
        let outcome = outcome?;
        let truth: Vec<u8> = split.test.iter().map(|&i| labels[i]).collect();
        if outcome.predictions.len() != truth.len() {
            return Err(Error::InvalidInput(format!(
                "fold {}: {} predictions for {} test examples",
                split.fold,
                outcome.predictions.len(),
                truth.len()
            )));
        }
        folds.push(FoldResult {
            confusion: ConfusionMatrix::from_pairs(&outcome.predictions, &truth)?,
            split,
            record: outcome.record,
        });
    }
    let confusions: Vec<ConfusionMatrix> = folds.iter().map(|f| f.confusion).collect();
    Ok(KFoldRun {
        plan,
        report: MetricsReport::from_folds(&confusions)?,
        folds,
    })
}

/// Trains a fresh classifier per fold and evaluates it on the held-out
/// fold. Model and training seeds are derived per fold from `seed`,
/// overriding `config.seed` and `schedule.seed`.
pub fn run_kfold(
    data: &[EncodedExample],
    matrix: &EmbeddingMatrix,
    config: &ModelConfig,
    schedule: &TrainConfig,
    k: usize,
    seed: u64,
    jobs: usize,
) -> Result<KFoldRun> {
    config.validate()?;
    schedule.validate()?;
    let labels: Vec<u8> = data.iter().map(|e| e.label).collect();
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    run_kfold_with(&labels, k, seed, jobs, |split| {
        let model_config = ModelConfig {
            seed: fold_seed(seed, split.fold, "model"),
            ..config.clone()
        };
        let schedule = TrainConfig {
            seed: fold_seed(seed, split.fold, "train"),
            ..schedule.clone()
        };
        let mut model = Classifier::build(&model_config, matrix)?;
        let record = train(
            &mut model,
            &pick(&split.train),
            &pick(&split.validation),
            &schedule,
        )?;
        let predictions = split
            .test
            .iter()
            .map(|&i| Ok(model.predict(&data[i])?.predicted_label))
            .collect::<Result<Vec<u8>>>()?;
        Ok(FoldOutcome {
            predictions,
            record: Some(record),
        })
    })
}
