//! Additive (Bahdanau) attention reducing a sequence of hidden states to one
//! context vector: `score_t = v · tanh(W h_t + b)`, weights are the softmax
//! of the scores, and the context is the weighted sum of the states.

use super::tape::{softmax, Tape, Var};
use super::{ParamId, Tensor};
use crate::error::{Error, Result};

/// Plain-value attention parameters: `w` is `H × A`, `b` is `1 × A`,
/// `v` is `A × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w: Tensor,
    pub b: Tensor,
    pub v: Tensor,
}

/// Every intermediate of one attention pass.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionState {
    pub hidden_states: Tensor,
    pub alignment_scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
}

pub fn attention(hidden_states: &Tensor, params: &AttentionParams) -> Result<AttentionState> {
    let (t_len, h) = (hidden_states.rows(), hidden_states.cols());
    if t_len == 0 {
        return Err(Error::shape("attention", "needs at least one hidden state"));
    }
    let a = params.w.cols();
    if params.w.rows() != h || params.b.shape() != [1, a] || params.v.shape() != [a, 1] {
        return Err(Error::shape(
            "attention",
            format!(
                "states {:?} with w {:?}, b {:?}, v {:?}",
                hidden_states.shape(),
                params.w.shape(),
                params.b.shape(),
                params.v.shape()
            ),
        ));
    }
    let mut projected = hidden_states.matmul(&params.w)?;
    for t in 0..t_len {
        projected
            .row_mut(t)
            .iter_mut()
            .zip(params.b.data())
            .for_each(|(x, b)| *x = (*x + b).tanh());
    }
    let alignment_scores = projected.matmul(&params.v)?.into_data();
    let weights = softmax(&alignment_scores);
    let mut context = vec![0.0; h];
    for (t, w) in weights.iter().enumerate() {
        context
            .iter_mut()
            .zip(hidden_states.row(t))
            .for_each(|(c, x)| *c += w * x);
    }
    Ok(AttentionState {
        hidden_states: hidden_states.clone(),
        alignment_scores,
        weights,
        context,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct AttentionWeights {
    pub(crate) w: ParamId,
    pub(crate) b: ParamId,
    pub(crate) v: ParamId,
}

impl AttentionWeights {
    /// `T × H` states → `1 × H` context. An empty sequence yields zeros.
    pub(crate) fn apply(&self, tape: &mut Tape, states: Var) -> Result<Var> {
        let [t_len, h] = tape.value(states).shape();
        if t_len == 0 {
            return Ok(tape.leaf(Tensor::zeros(1, h)));
        }
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let v = tape.param(self.v);
        let projected = tape.matmul(states, w)?;
        let projected = tape.add_row(projected, b)?;
        let projected = tape.tanh(projected);
        let scores = tape.matmul(projected, v)?;
        let weights = tape.softmax(scores)?;
        let weights = tape.transpose(weights);
        tape.matmul(weights, states)
    }
}
