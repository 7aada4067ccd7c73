//! Layer kinds and their forward passes.
//!
//! Shape rules (`T` = sequence length, `C` = input width):
//!
//! | kind              | input     | output                                |
//! |-------------------|-----------|---------------------------------------|
//! | embedding         | T indices | `T × dim`                             |
//! | dropout           | `T × C`   | `T × C`                               |
//! | conv1d            | `T × C`   | `T × filters` ("same" zero padding)   |
//! | max_pool(s)       | `T × C`   | `ceil(T / s) × C`                     |
//! | global_max_pool   | `T × C`   | `1 × C`                               |
//! | lstm / gru        | `T × C`   | `T × units`, or `1 × units` (last)    |
//! | bilstm            | `T × C`   | `T × 2·units`, or `1 × 2·units`       |
//! | attention         | `T × C`   | `1 × C`                               |
//! | dense             | `R × C`   | `R × units`                           |
//!
//! A zero-length sequence is legal everywhere: sequence outputs stay empty and
//! reductions (last state, global pool, attention) produce zeros.

use std::fmt;
use std::str::FromStr;

use rand::RngExt;

use super::attention::AttentionWeights;
use super::init::glorot_uniform;
use super::recurrent::{last_state, stack_states, GruCell, LstmCell};
use super::tape::{Tape, Var};
use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Softmax,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
            Activation::Identity => "identity",
        }
    }

    fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        Ok(match self {
            Activation::Sigmoid => tape.sigmoid(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
            Activation::Softmax => tape.softmax(x)?,
            Activation::Identity => x,
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::InvalidInput(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Embedding {
        rows: usize,
        dim: usize,
        trainable: bool,
    },
    Dropout {
        rate: f64,
    },
    Conv1d {
        filters: usize,
        width: usize,
        activation: Activation,
    },
    MaxPool {
        size: usize,
    },
    GlobalMaxPool,
    Lstm {
        units: usize,
        return_sequences: bool,
    },
    BiLstm {
        units: usize,
        return_sequences: bool,
    },
    Gru {
        units: usize,
        return_sequences: bool,
    },
    Attention {
        units: usize,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Embedding { .. } => "embedding",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::MaxPool { .. } => "max_pool",
            LayerSpec::GlobalMaxPool => "global_max_pool",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::BiLstm { .. } => "bilstm",
            LayerSpec::Gru { .. } => "gru",
            LayerSpec::Attention { .. } => "attention",
            LayerSpec::Dense { .. } => "dense",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, n: usize| {
            if n == 0 {
                Err(Error::InvalidInput(format!(
                    "{} {what} must be positive",
                    self.kind()
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            LayerSpec::Embedding { rows, dim, .. } => {
                positive("rows", rows)?;
                positive("dim", dim)
            }
            LayerSpec::Dropout { rate } => {
                if (0.0..1.0).contains(&rate) {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "dropout rate {rate} outside [0, 1)"
                    )))
                }
            }
            LayerSpec::Conv1d { filters, width, .. } => {
                positive("filters", filters)?;
                positive("width", width)
            }
            LayerSpec::MaxPool { size } => positive("size", size),
            LayerSpec::GlobalMaxPool => Ok(()),
            LayerSpec::Lstm { units, .. }
            | LayerSpec::BiLstm { units, .. }
            | LayerSpec::Gru { units, .. }
            | LayerSpec::Attention { units }
            | LayerSpec::Dense { units, .. } => positive("units", units),
        }
    }

    /// Width of the output rows for an input of width `input_dim`.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        match *self {
            LayerSpec::Embedding { dim, .. } => dim,
            LayerSpec::Dropout { .. }
            | LayerSpec::MaxPool { .. }
            | LayerSpec::GlobalMaxPool
            | LayerSpec::Attention { .. } => input_dim,
            LayerSpec::Conv1d { filters, .. } => filters,
            LayerSpec::Lstm { units, .. } | LayerSpec::Gru { units, .. } => units,
            LayerSpec::BiLstm { units, .. } => 2 * units,
            LayerSpec::Dense { units, .. } => units,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |r: bool| if r { ", sequences" } else { ", last" };
        match self {
            LayerSpec::Embedding {
                rows,
                dim,
                trainable,
            } => write!(
                f,
                "embedding({rows}×{dim}, {})",
                if *trainable { "trainable" } else { "frozen" }
            ),
            LayerSpec::Dropout { rate } => write!(f, "dropout({rate})"),
            LayerSpec::Conv1d {
                filters,
                width,
                activation,
            } => {
                write!(f, "conv1d({filters}, {width}, {})", activation.name())
            }
            LayerSpec::MaxPool { size } => write!(f, "max_pool({size})"),
            LayerSpec::GlobalMaxPool => write!(f, "global_max_pool"),
            LayerSpec::Lstm {
                units,
                return_sequences,
            } => {
                write!(f, "lstm({units}{})", seq(*return_sequences))
            }
            LayerSpec::BiLstm {
                units,
                return_sequences,
            } => {
                write!(f, "bilstm({units}{})", seq(*return_sequences))
            }
            LayerSpec::Gru {
                units,
                return_sequences,
            } => {
                write!(f, "gru({units}{})", seq(*return_sequences))
            }
            LayerSpec::Attention { units } => write!(f, "attention({units})"),
            LayerSpec::Dense { units, activation } => {
                write!(f, "dense({units}, {})", activation.name())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Weights {
    None,
    Embedding(ParamId),
    Affine {
        kernel: ParamId,
        bias: ParamId,
    },
    Lstm(LstmCell),
    BiLstm {
        forward: LstmCell,
        backward: LstmCell,
    },
    Gru(GruCell),
    Attention(AttentionWeights),
}

/// A layer spec bound to its parameters in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    name: String,
    spec: LayerSpec,
    input_dim: usize,
    weights: Weights,
}

impl Layer {
    /// Registers freshly initialized parameters. Embeddings built this way
    /// are Glorot-initialized; use [`Layer::embedding`] to load a matrix.
    pub fn build(
        name: impl Into<String>,
        spec: LayerSpec,
        input_dim: usize,
        store: &mut ParamStore,
        rng: &mut Rng,
    ) -> Result<Self> {
        spec.validate()?;
        let name = name.into();
        let weights = match spec {
            LayerSpec::Embedding {
                rows,
                dim,
                trainable,
            } => Weights::Embedding(store.add(
                format!("{name}.table"),
                glorot_uniform(rows, dim, rng),
                trainable,
            )),
            LayerSpec::Conv1d { filters, width, .. } => Weights::Affine {
                kernel: store.add(
                    format!("{name}.kernel"),
                    glorot_uniform(width * input_dim, filters, rng),
                    true,
                ),
                bias: store.add(format!("{name}.bias"), Tensor::zeros(1, filters), true),
            },
            LayerSpec::Dense { units, .. } => Weights::Affine {
                kernel: store.add(
                    format!("{name}.kernel"),
                    glorot_uniform(input_dim, units, rng),
                    true,
                ),
                bias: store.add(format!("{name}.bias"), Tensor::zeros(1, units), true),
            },
            LayerSpec::Lstm { units, .. } => {
                Weights::Lstm(LstmCell::build(&name, input_dim, units, store, rng))
            }
            LayerSpec::BiLstm { units, .. } => Weights::BiLstm {
                forward: LstmCell::build(&format!("{name}.forward"), input_dim, units, store, rng),
                backward: LstmCell::build(
                    &format!("{name}.backward"),
                    input_dim,
                    units,
                    store,
                    rng,
                ),
            },
            LayerSpec::Gru { units, .. } => {
                Weights::Gru(GruCell::build(&name, input_dim, units, store, rng))
            }
            LayerSpec::Attention { units } => Weights::Attention(AttentionWeights {
                w: store.add(
                    format!("{name}.w"),
                    glorot_uniform(input_dim, units, rng),
                    true,
                ),
                b: store.add(format!("{name}.b"), Tensor::zeros(1, units), true),
                v: store.add(format!("{name}.v"), glorot_uniform(units, 1, rng), true),
            }),
            LayerSpec::Dropout { .. } | LayerSpec::MaxPool { .. } | LayerSpec::GlobalMaxPool => {
                Weights::None
            }
        };
        Ok(Self {
            name,
            spec,
            input_dim,
            weights,
        })
    }

    /// Embedding layer over an existing matrix.
    pub fn embedding(
        name: impl Into<String>,
        matrix: Tensor,
        trainable: bool,
        store: &mut ParamStore,
    ) -> Result<Self> {
        let name = name.into();
        let spec = LayerSpec::Embedding {
            rows: matrix.rows(),
            dim: matrix.cols(),
            trainable,
        };
        spec.validate()?;
        let id = store.add(format!("{name}.table"), matrix, trainable);
        Ok(Self {
            name,
            spec,
            input_dim: 0,
            weights: Weights::Embedding(id),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim(self.input_dim)
    }

    /// Parameter ids owned by this layer, in registration order.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let lstm = |c: &LstmCell| vec![c.kernel, c.recurrent, c.bias];
        match &self.weights {
            Weights::None => vec![],
            Weights::Embedding(id) => vec![*id],
            Weights::Affine { kernel, bias } => vec![*kernel, *bias],
            Weights::Lstm(c) => lstm(c),
            Weights::BiLstm { forward, backward } => [lstm(forward), lstm(backward)].concat(),
            Weights::Gru(c) => vec![c.kernel, c.recurrent_gates, c.recurrent_candidate, c.bias],
            Weights::Attention(a) => vec![a.w, a.b, a.v],
        }
    }

    /// Looks up embedding rows for a sequence of indices.
    pub fn embed(&self, tape: &mut Tape, indices: &[usize]) -> Result<Var> {
        match self.weights {
            Weights::Embedding(id) => tape
                .gather(id, indices)
                .map_err(|e| Error::shape(format!("layer `{}`", self.name), e.to_string())),
            _ => Err(Error::shape(
                format!("layer `{}`", self.name),
                format!("{} does not take indices", self.spec.kind()),
            )),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, mode: Mode, rng: &mut Rng) -> Result<Var> {
        let [t_len, width] = tape.value(x).shape();
        if matches!(self.spec, LayerSpec::Embedding { .. }) {
            return Err(Error::shape(
                format!("layer `{}`", self.name),
                "embedding layers take indices, use `embed`",
            ));
        }
        if width != self.input_dim {
            return Err(Error::shape(
                format!("layer `{}`", self.name),
                format!(
                    "expected rows of width {}, got {t_len}×{width}",
                    self.input_dim
                ),
            ));
        }
        match (&self.spec, &self.weights) {
            (LayerSpec::Dropout { rate }, _) => {
                if mode == Mode::Eval || *rate == 0.0 || t_len == 0 {
                    return Ok(x);
                }
                let keep = 1.0 - rate;
                let mask: Vec<f64> = (0..t_len * width)
                    .map(|_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mask = tape.leaf(Tensor::new(t_len, width, mask)?);
                tape.mul(x, mask)
            }
            (
                LayerSpec::Conv1d {
                    width: w,
                    filters,
                    activation,
                },
                Weights::Affine { kernel, bias },
            ) => {
                if t_len == 0 {
                    return Ok(tape.leaf(Tensor::zeros(0, *filters)));
                }
                let cols = tape.im2col(x, *w);
                let k = tape.param(*kernel);
                let b = tape.param(*bias);
                let y = tape.matmul(cols, k)?;
                let y = tape.add_row(y, b)?;
                activation.apply(tape, y)
            }
            (LayerSpec::MaxPool { size }, _) => {
                if t_len == 0 {
                    return Ok(x);
                }
                tape.max_pool(x, Some(*size))
            }
            (LayerSpec::GlobalMaxPool, _) => {
                if t_len == 0 {
                    return Ok(tape.leaf(Tensor::zeros(1, width)));
                }
                tape.max_pool(x, None)
            }
            (
                LayerSpec::Lstm {
                    units,
                    return_sequences,
                },
                Weights::Lstm(cell),
            ) => {
                let states = cell.run(tape, x)?;
                if *return_sequences {
                    stack_states(tape, &states, *units)
                } else {
                    Ok(last_state(tape, &states, *units))
                }
            }
            (
                LayerSpec::Gru {
                    units,
                    return_sequences,
                },
                Weights::Gru(cell),
            ) => {
                let states = cell.run(tape, x)?;
                if *return_sequences {
                    stack_states(tape, &states, *units)
                } else {
                    Ok(last_state(tape, &states, *units))
                }
            }
            (
                LayerSpec::BiLstm {
                    units,
                    return_sequences,
                },
                Weights::BiLstm { forward, backward },
            ) => {
                let fw = forward.run(tape, x)?;
                let reversed = tape.reverse_rows(x);
                let mut bw = backward.run(tape, reversed)?;
                if *return_sequences {
                    bw.reverse();
                    let fw = stack_states(tape, &fw, *units)?;
                    let bw = stack_states(tape, &bw, *units)?;
                    tape.concat_cols(&[fw, bw])
                } else {
                    let fw = last_state(tape, &fw, *units);
                    let bw = last_state(tape, &bw, *units);
                    tape.concat_cols(&[fw, bw])
                }
            }
            (LayerSpec::Attention { .. }, Weights::Attention(w)) => w.apply(tape, x),
            (LayerSpec::Dense { activation, .. }, Weights::Affine { kernel, bias }) => {
                let k = tape.param(*kernel);
                let b = tape.param(*bias);
                let y = tape.matmul(x, k)?;
                let y = tape.add_row(y, b)?;
                activation.apply(tape, y)
            }
            (spec, _) => unreachable!("layer {spec} built without matching weights"),
        }
    }

    /// One-shot forward pass outside of training. For embedding layers the
    /// input entries are read as indices.
    pub fn apply(
        &self,
        store: &ParamStore,
        input: &Tensor,
        mode: Mode,
        seed: u64,
    ) -> Result<Tensor> {
        let mut tape = Tape::new(store);
        let mut rng = seed::rng(seed);
        let out = if matches!(self.spec, LayerSpec::Embedding { .. }) {
            let indices = input
                .data()
                .iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::InvalidInput(format!("{x} is not an index")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            self.embed(&mut tape, &indices)?
        } else {
            let x = tape.leaf(input.clone());
            self.forward(&mut tape, x, mode, &mut rng)?
        };
        Ok(tape.value(out).clone())
    }
}
