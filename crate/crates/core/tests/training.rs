use sbe_core::corpus::EncodedExample;
use sbe_core::evaluate::{
    accuracy, mean_loss, run_kfold, run_kfold_with, train, ConfusionMatrix, FoldOutcome,
    MetricKind, TrainConfig,
};
use sbe_core::models::{read_checkpoint, Architecture, Checkpoint, Classifier, ModelConfig};
use sbe_core::synthetic::{separable_corpus, SyntheticSpec};

fn small_config(a: Architecture) -> ModelConfig {
    ModelConfig {
        max_len: 12,
        hidden: 8,
        conv_filters: 8,
        ..ModelConfig::reference(a)
    }
}

fn schedule(epochs: usize) -> TrainConfig {
    TrainConfig {
        max_epochs: epochs,
        patience: epochs,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn same_seed_same_record_and_checkpoint() {
    let spec = SyntheticSpec {
        examples: 48,
        ..SyntheticSpec::default()
    };
    let (data, matrix) = separable_corpus(&spec, 1);
    let (tr, va) = data.split_at(40);
    let run = || {
        let mut m = Classifier::build(&small_config(Architecture::CnnLstm), &matrix).unwrap();
        train(&mut m, tr, va, &schedule(4)).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert_eq!(a.stopped_epoch, 4);
    assert_eq!(a.train_losses.len(), 4);
}

#[test]
fn restored_parameters_reproduce_best_validation_loss() {
    let spec = SyntheticSpec {
        examples: 60,
        ..SyntheticSpec::default()
    };
    let (data, matrix) = separable_corpus(&spec, 2);
    let (tr, va) = data.split_at(50);
    let config = small_config(Architecture::Gru);
    let mut model = Classifier::build(&config, &matrix).unwrap();
    let record = train(
        &mut model,
        tr,
        va,
        &TrainConfig {
            patience: 2,
            ..schedule(30)
        },
    )
    .unwrap();
    assert!(record.best_epoch < record.stopped_epoch);
    let min = record
        .validation_losses
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert_eq!(
        record.best_validation_loss,
        record.validation_losses[record.best_epoch]
    );
    assert!(record.best_validation_loss <= min + 1e-5);
    assert!((mean_loss(&model, va).unwrap() - record.best_validation_loss).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint");
    std::fs::write(&path, &record.checkpoint).unwrap();
    let mut fresh = Classifier::build(&config, &matrix).unwrap();
    read_checkpoint(&path)
        .unwrap()
        .apply_to(fresh.store_mut())
        .unwrap();
    assert!((mean_loss(&fresh, va).unwrap() - record.best_validation_loss).abs() < 1e-9);
    assert_eq!(Checkpoint::from_bytes(&record.checkpoint).unwrap().seed, 5);
}

#[test]
fn empty_sets_are_rejected() {
    let (data, matrix) = separable_corpus(
        &SyntheticSpec {
            examples: 4,
            ..SyntheticSpec::default()
        },
        3,
    );
    let mut m = Classifier::build(&small_config(Architecture::Lstm), &matrix).unwrap();
    assert!(train(&mut m, &data, &[], &schedule(1)).is_err());
    assert!(train(&mut m, &[], &data, &schedule(1)).is_err());
}

#[test]
fn diverging_loss_names_the_epoch() {
    let (data, matrix) = separable_corpus(
        &SyntheticSpec {
            examples: 20,
            ..SyntheticSpec::default()
        },
        4,
    );
    let mut m = Classifier::build(&small_config(Architecture::Lstm), &matrix).unwrap();
    for (_, p) in m.store_mut().iter_mut() {
        if p.name == "output.bias" {
            p.value.fill(f64::NAN);
        }
    }
    let err = train(&mut m, &data[..16], &data[16..], &schedule(3)).unwrap_err();
    assert!(err.to_string().contains("epoch 1"), "{err}");
}

#[test]
fn stub_always_positive_counts_classes() {
    let labels = [1, 0, 1, 1, 0, 0, 1, 0];
    let run = run_kfold_with(&labels, 2, 7, 1, |split| {
        assert!(split
            .test
            .iter()
            .all(|i| !split.train.contains(i) && !split.validation.contains(i)));
        Ok(FoldOutcome {
            predictions: vec![1; split.test.len()],
            record: None,
        })
    })
    .unwrap();
    assert_eq!(run.report.confusion, ConfusionMatrix::new(4, 0, 4, 0));
    assert_eq!(run.folds.len(), 2);
}

#[test]
fn oracle_stub_scores_perfectly_and_micro_accuracy_is_exact() {
    let labels: Vec<u8> = (0..37).map(|i| u8::from(i % 3 == 0)).collect();
    let run = run_kfold_with(&labels, 4, 8, 3, |split| {
        Ok(FoldOutcome {
            predictions: split.test.iter().map(|&i| labels[i]).collect(),
            record: None,
        })
    })
    .unwrap();
    for k in MetricKind::ALL {
        assert_eq!(run.report.micro.get(k), Some(100.0));
    }
    let cm = run.report.confusion;
    assert_eq!(cm.total(), 37);

    // a stub that is wrong on every third test example
    let run = run_kfold_with(&labels, 4, 8, 2, |split| {
        let predictions = split
            .test
            .iter()
            .enumerate()
            .map(|(j, &i)| if j % 3 == 0 { 1 - labels[i] } else { labels[i] })
            .collect();
        Ok(FoldOutcome {
            predictions,
            record: None,
        })
    })
    .unwrap();
    let correct = run.report.confusion.tp + run.report.confusion.tn;
    assert_eq!(
        run.report.micro.accuracy,
        Some(100.0 * correct as f64 / 37.0)
    );
}

#[test]
fn kfold_is_deterministic_across_job_counts() {
    let spec = SyntheticSpec {
        examples: 40,
        ..SyntheticSpec::default()
    };
    let (data, matrix): (Vec<EncodedExample>, _) = separable_corpus(&spec, 9);
    let config = small_config(Architecture::Lstm);
    let a = run_kfold(&data, &matrix, &config, &schedule(2), 2, 11, 1).unwrap();
    let b = run_kfold(&data, &matrix, &config, &schedule(2), 2, 11, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.report.confusion.total(), 40);
    for f in &a.folds {
        let r = f.record.as_ref().unwrap();
        assert_eq!(r.stopped_epoch, 2);
    }
}

#[test]
fn every_architecture_learns_a_separable_corpus() {
    let (data, matrix) = separable_corpus(&SyntheticSpec::default(), 12);
    for a in Architecture::ALL {
        let mut model = Classifier::build(&small_config(a), &matrix).unwrap();
        let record = train(&mut model, &data, &data[..40], &schedule(50)).unwrap();
        let acc = accuracy(&model, &data).unwrap();
        assert!(
            acc >= 0.95,
            "{a}: accuracy {acc} after {} epochs",
            record.stopped_epoch
        );
    }
}
