use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::EncodedExample;
use crate::engine::{adam_step, AdamConfig, AdamState, Gradients, Mode};
use crate::error::{Error, Result};
use crate::models::{Checkpoint, Classifier};
use crate::seed;

pub const MIN_DELTA: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    /// A validation loss counts as an improvement only when it beats the
    /// best so far by more than this.
    pub min_delta: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 32,
            patience: 10,
            min_delta: MIN_DELTA,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::InvalidInput(
                "max_epochs, batch_size and patience must be positive".into(),
            ));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate {} must be positive",
                self.adam.lr
            )));
        }
        Ok(())
    }
}

/// Patience counter over a loss sequence.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    /// Records the loss of 0-based `epoch`; returns whether it improved.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if self.best_epoch.is_none() || loss < self.best - self.min_delta {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            true
        } else {
            self.wait += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.wait >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub train_losses: Vec<f64>,
    pub validation_losses: Vec<f64>,
    /// Number of epochs run.
    pub stopped_epoch: usize,
    /// 0-based index of the epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    /// Serialized best parameters (see [`Checkpoint`]).
    pub checkpoint: Vec<u8>,
}

pub fn mean_loss(model: &Classifier, data: &[EncodedExample]) -> Result<f64> {
    let losses = data
        .par_iter()
        .map(|ex| model.loss(ex, Mode::Eval, &mut seed::rng(0), None))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / data.len() as f64)
}

pub fn accuracy(model: &Classifier, data: &[EncodedExample]) -> Result<f64> {
    let correct = data
        .par_iter()
        .map(|ex| Ok(u64::from(model.predict(ex)?.predicted_label == ex.label)))
        .collect::<Result<Vec<u64>>>()?;
    Ok(correct.iter().sum::<u64>() as f64 / data.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy with early stopping on the
/// validation loss. The best-validation parameters are restored into
/// `model` before returning.
///
/// Per-example gradients may be computed on several threads but are summed
/// in batch order, and every dropout mask comes from a stream keyed by
/// (epoch, position), so the result does not depend on thread count.
pub fn train(
    model: &mut Classifier,
    train_set: &[EncodedExample],
    validation_set: &[EncodedExample],
    config: &TrainConfig,
) -> Result<TrainRecord> {
    config.validate()?;
    if train_set.is_empty() || validation_set.is_empty() {
        return Err(Error::InvalidInput(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut stopper = EarlyStopping::new(config.patience, config.min_delta);
    let mut adam = AdamState::new();
    let mut best = model.store().snapshot();
    let mut train_losses = Vec::new();
    let mut validation_losses = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut seed::rng_for(config.seed, &format!("shuffle/{epoch}")));
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let model_ref = &*model;
            let parts = batch
                .par_iter()
                .enumerate()
                .map(|(i, &idx)| {
                    let mut grads = Gradients::for_store(model_ref.store());
                    let tag = format!("dropout/{epoch}/{}", b * config.batch_size + i);
                    let mut rng = seed::rng_for(config.seed, &tag);
                    let loss =
                        model_ref.loss(&train_set[idx], Mode::Train, &mut rng, Some(&mut grads))?;
                    Ok((loss, grads))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = Gradients::for_store(model.store());
            for (loss, grads) in &parts {
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch: epoch + 1,
                        loss: *loss,
                    });
                }
                epoch_loss += loss;
                total.add(grads);
            }
            total.scale(1.0 / batch.len() as f64);
            adam_step(model.store_mut(), &total, &mut adam, &config.adam)?;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let validation_loss = mean_loss(model, validation_set)?;
        if !validation_loss.is_finite() || !train_loss.is_finite() {
            let loss = if validation_loss.is_finite() {
                train_loss
            } else {
                validation_loss
            };
            return Err(Error::Diverged {
                epoch: epoch + 1,
                loss,
            });
        }
        train_losses.push(train_loss);
        validation_losses.push(validation_loss);
        if stopper.observe(epoch, validation_loss) {
            best = model.store().snapshot();
        }
        if stopper.should_stop() {
            break;
        }
    }

    model.store_mut().restore(&best);
    Ok(TrainRecord {
        stopped_epoch: train_losses.len(),
        best_epoch: stopper.best_epoch().expect("at least one epoch ran"),
        best_validation_loss: stopper.best(),
        train_losses,
        validation_losses,
        checkpoint: Checkpoint::from_store(model.store(), config.seed).to_bytes(),
    })
}
