//! The six classifier architectures, each reading an embedding matrix and
//! emitting a hate probability.
//!
//! Reference layer stacks (every size overridable through [`ModelConfig`]):
//!
//! - `cnn_attention`: embedding → dropout(0.2) → conv1d(64, 3, relu) → attention → dense(1, sigmoid)
//! - `cnn_lstm`: embedding → dropout(0.2) → conv1d(64, 3, relu) → max_pool(2) → lstm(64) → dense(1, sigmoid)
//! - `lstm`: embedding → dropout(0.2) → lstm(128, last) → dense(1, sigmoid)
//! - `bilstm`: embedding → dropout(0.2) → bilstm(64, last states concatenated) → dense(1, sigmoid)
//! - `bilstm_attention`: embedding → dropout(0.2) → bilstm(64, all states) → attention → dense(1, sigmoid)
//! - `gru`: embedding → dropout(0.2) → gru(128, last) → dense(1, sigmoid)
//!
//! Models read only the non-padding prefix of an encoded example, so the
//! padding tail never reaches a recurrent state or a convolution window.

mod checkpoint;
mod config;

use crate::corpus::EncodedExample;
use crate::distill::EmbeddingMatrix;
use crate::engine::{
    grad_check_with, Activation, GradCheckOptions, GradCheckReport, Gradients, Layer, LayerSpec,
    Mode, Objective, ParamStore, Tape, Tensor,
};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointEntry};
pub use config::{Architecture, EmbeddingSource, ModelConfig};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub predicted_label: u8,
}

impl Prediction {
    pub fn from_probability(probability: f64) -> Self {
        Self {
            probability,
            predicted_label: u8::from(probability >= DECISION_THRESHOLD),
        }
    }
}

/// Layer stack after the embedding for an architecture.
pub fn reference_stack(config: &ModelConfig) -> Vec<LayerSpec> {
    let conv = LayerSpec::Conv1d {
        filters: config.conv_filters,
        width: config.conv_width,
        activation: Activation::Relu,
    };
    let out = LayerSpec::Dense {
        units: 1,
        activation: Activation::Sigmoid,
    };
    let h = config.hidden;
    let mut stack = vec![LayerSpec::Dropout {
        rate: config.dropout,
    }];
    let attention_after = |width: usize| LayerSpec::Attention {
        units: config.attention_units.unwrap_or(width),
    };
    match config.architecture {
        Architecture::CnnAttention => {
            stack.push(conv);
            stack.push(attention_after(config.conv_filters));
        }
        Architecture::CnnLstm => {
            stack.push(conv);
            stack.push(LayerSpec::MaxPool {
                size: config.pool_size,
            });
            stack.push(LayerSpec::Lstm {
                units: h,
                return_sequences: false,
            });
        }
        Architecture::Lstm => stack.push(LayerSpec::Lstm {
            units: h,
            return_sequences: false,
        }),
        Architecture::BiLstm => stack.push(LayerSpec::BiLstm {
            units: h,
            return_sequences: false,
        }),
        Architecture::BiLstmAttention => {
            stack.push(LayerSpec::BiLstm {
                units: h,
                return_sequences: true,
            });
            stack.push(attention_after(2 * h));
        }
        Architecture::Gru => stack.push(LayerSpec::Gru {
            units: h,
            return_sequences: false,
        }),
    }
    stack.push(out);
    stack
}

#[derive(Clone, Debug)]
pub struct Classifier {
    config: ModelConfig,
    store: ParamStore,
    embedding: Layer,
    layers: Vec<Layer>,
}

impl Classifier {
    pub fn build(config: &ModelConfig, matrix: &EmbeddingMatrix) -> Result<Self> {
        config.validate()?;
        if let Some(expected) = config.embedding_dim {
            if expected != matrix.dim() {
                return Err(Error::Dimension {
                    expected,
                    found: matrix.dim(),
                });
            }
        }
        let mut store = ParamStore::new();
        let table = Tensor::new(matrix.rows(), matrix.dim(), matrix.data().to_vec())?;
        let embedding =
            Layer::embedding("embedding", table, config.trainable_embeddings, &mut store)?;

        let mut rng = seed::rng_for(config.seed, "model-init");
        let mut width = matrix.dim();
        let mut layers = Vec::new();
        for spec in reference_stack(config) {
            let name = match &spec {
                LayerSpec::Dense { .. } => "output".to_owned(),
                other => other.kind().to_owned(),
            };
            let layer = Layer::build(name, spec, width, &mut store, &mut rng)?;
            width = layer.output_dim();
            layers.push(layer);
        }
        Ok(Self {
            config: config.clone(),
            store,
            embedding,
            layers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn embedding_layer(&self) -> &Layer {
        &self.embedding
    }

    /// Full layer sequence, embedding first.
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        std::iter::once(&self.embedding).chain(&self.layers)
    }

    pub fn trainable_parameter_count(&self) -> usize {
        self.store.trainable_count()
    }

    /// Probability node for a token-index sequence without padding.
    pub fn forward<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        tokens: &[usize],
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<crate::engine::Var> {
        let mut x = self.embedding.embed(tape, tokens)?;
        for layer in &self.layers {
            x = layer.forward(tape, x, mode, rng)?;
        }
        Ok(x)
    }

    fn check_length(&self, encoded: &EncodedExample) -> Result<()> {
        if encoded.indices.len() != self.config.max_len {
            return Err(Error::InvalidInput(format!(
                "encoded length {} does not match max_len {}",
                encoded.indices.len(),
                self.config.max_len
            )));
        }
        Ok(())
    }

    pub fn probability(&self, tokens: &[usize]) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let mut rng = seed::rng(0);
        let p = self.forward(&mut tape, tokens, Mode::Eval, &mut rng)?;
        Ok(tape.value(p).data()[0])
    }

    pub fn predict(&self, encoded: &EncodedExample) -> Result<Prediction> {
        self.check_length(encoded)?;
        Ok(Prediction::from_probability(
            self.probability(encoded.tokens())?,
        ))
    }

    /// Cross-entropy loss for one example; accumulates gradients when asked.
    pub fn loss(
        &self,
        encoded: &EncodedExample,
        mode: Mode,
        rng: &mut Rng,
        grads: Option<&mut Gradients>,
    ) -> Result<f64> {
        self.check_length(encoded)?;
        self.token_loss(encoded.tokens(), f64::from(encoded.label), mode, rng, grads)
    }

    fn token_loss(
        &self,
        tokens: &[usize],
        label: f64,
        mode: Mode,
        rng: &mut Rng,
        grads: Option<&mut Gradients>,
    ) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let p = self.forward(&mut tape, tokens, mode, rng)?;
        let loss = tape.bce(p, label)?;
        if let Some(g) = grads {
            tape.backward(loss, g)?;
        }
        Ok(tape.value(loss).data()[0])
    }
}

struct GradCheckTarget<'m> {
    model: &'m mut Classifier,
    tokens: &'m [usize],
    label: f64,
    seed: u64,
}

impl Objective for GradCheckTarget<'_> {
    fn store(&self) -> &ParamStore {
        &self.model.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.model.store
    }

    fn evaluate(&self, grads: Option<&mut Gradients>) -> Result<f64> {
        // Same dropout mask on every evaluation.
        let mut rng = seed::rng(self.seed);
        self.model
            .token_loss(self.tokens, self.label, Mode::Train, &mut rng, grads)
    }
}

/// Finite-difference check of every trainable parameter of `model` on one
/// token sequence, with dropout active under a fixed mask.
pub fn grad_check_model(
    model: &mut Classifier,
    tokens: &[usize],
    label: u8,
    tolerance: f64,
    options: GradCheckOptions,
) -> Result<GradCheckReport> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput(
            "gradient check needs a non-empty input".into(),
        ));
    }
    let seed = seed::derive_seed(model.config.seed, "gradcheck-dropout");
    let mut target = GradCheckTarget {
        model,
        tokens,
        label: f64::from(label),
        seed,
    };
    grad_check_with(&mut target, tolerance, options)
}
