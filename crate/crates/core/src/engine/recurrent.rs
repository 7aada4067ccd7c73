//! LSTM and GRU cells unrolled on the tape.
//!
//! LSTM gate layout along the 4H axis is input, forget, candidate, output.
//! GRU layout along the 3H axis is update, reset, candidate, with the reset
//! gate applied to the previous state before the recurrent product.

use super::init::{glorot_uniform, orthogonal};
use super::tape::{Tape, Var};
use super::{ParamId, ParamStore, Tensor};
use crate::error::Result;
use crate::seed::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub(crate) kernel: ParamId,
    pub(crate) recurrent: ParamId,
    pub(crate) bias: ParamId,
    pub(crate) units: usize,
}

impl LstmCell {
    pub(crate) fn build(
        prefix: &str,
        input_dim: usize,
        units: usize,
        store: &mut ParamStore,
        rng: &mut Rng,
    ) -> Self {
        let kernel = store.add(
            format!("{prefix}.kernel"),
            glorot_uniform(input_dim, 4 * units, rng),
            true,
        );
        let recurrent = store.add(
            format!("{prefix}.recurrent"),
            orthogonal(units, 4 * units, rng),
            true,
        );
        let mut b = Tensor::zeros(1, 4 * units);
        b.data_mut()[units..2 * units].fill(1.0);
        let bias = store.add(format!("{prefix}.bias"), b, true);
        Self {
            kernel,
            recurrent,
            bias,
            units,
        }
    }

    /// Hidden state after each step of `x` (`T × D`).
    pub(crate) fn run(&self, tape: &mut Tape, x: Var) -> Result<Vec<Var>> {
        let h_units = self.units;
        let t_len = tape.value(x).rows();
        let kernel = tape.param(self.kernel);
        let recurrent = tape.param(self.recurrent);
        let bias = tape.param(self.bias);
        let projected = tape.matmul(x, kernel)?;
        let projected = tape.add_row(projected, bias)?;

        let mut h = tape.leaf(Tensor::zeros(1, h_units));
        let mut c = tape.leaf(Tensor::zeros(1, h_units));
        let mut states = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let xt = tape.row(projected, t)?;
            let hu = tape.matmul(h, recurrent)?;
            let z = tape.add(xt, hu)?;
            let i = tape.slice_cols(z, 0, h_units)?;
            let i = tape.sigmoid(i);
            let f = tape.slice_cols(z, h_units, h_units)?;
            let f = tape.sigmoid(f);
            let g = tape.slice_cols(z, 2 * h_units, h_units)?;
            let g = tape.tanh(g);
            let o = tape.slice_cols(z, 3 * h_units, h_units)?;
            let o = tape.sigmoid(o);
            let keep = tape.mul(f, c)?;
            let write = tape.mul(i, g)?;
            c = tape.add(keep, write)?;
            let squashed = tape.tanh(c);
            h = tape.mul(o, squashed)?;
            states.push(h);
        }
        Ok(states)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    pub(crate) kernel: ParamId,
    pub(crate) recurrent_gates: ParamId,
    pub(crate) recurrent_candidate: ParamId,
    pub(crate) bias: ParamId,
    pub(crate) units: usize,
}

impl GruCell {
    pub(crate) fn build(
        prefix: &str,
        input_dim: usize,
        units: usize,
        store: &mut ParamStore,
        rng: &mut Rng,
    ) -> Self {
        let kernel = store.add(
            format!("{prefix}.kernel"),
            glorot_uniform(input_dim, 3 * units, rng),
            true,
        );
        let full = orthogonal(units, 3 * units, rng);
        let mut gates = Tensor::zeros(units, 2 * units);
        let mut candidate = Tensor::zeros(units, units);
        for r in 0..units {
            gates.row_mut(r).copy_from_slice(&full.row(r)[..2 * units]);
            candidate
                .row_mut(r)
                .copy_from_slice(&full.row(r)[2 * units..]);
        }
        let recurrent_gates = store.add(format!("{prefix}.recurrent_gates"), gates, true);
        let recurrent_candidate =
            store.add(format!("{prefix}.recurrent_candidate"), candidate, true);
        let bias = store.add(format!("{prefix}.bias"), Tensor::zeros(1, 3 * units), true);
        Self {
            kernel,
            recurrent_gates,
            recurrent_candidate,
            bias,
            units,
        }
    }

    pub(crate) fn run(&self, tape: &mut Tape, x: Var) -> Result<Vec<Var>> {
        let h_units = self.units;
        let t_len = tape.value(x).rows();
        let kernel = tape.param(self.kernel);
        let rec_gates = tape.param(self.recurrent_gates);
        let rec_cand = tape.param(self.recurrent_candidate);
        let bias = tape.param(self.bias);
        let projected = tape.matmul(x, kernel)?;
        let projected = tape.add_row(projected, bias)?;

        let mut h = tape.leaf(Tensor::zeros(1, h_units));
        let mut states = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let xt = tape.row(projected, t)?;
            let x_gates = tape.slice_cols(xt, 0, 2 * h_units)?;
            let x_cand = tape.slice_cols(xt, 2 * h_units, h_units)?;
            let h_gates = tape.matmul(h, rec_gates)?;
            let gates = tape.add(x_gates, h_gates)?;
            let gates = tape.sigmoid(gates);
            let z = tape.slice_cols(gates, 0, h_units)?;
            let r = tape.slice_cols(gates, h_units, h_units)?;
            let reset = tape.mul(r, h)?;
            let h_cand = tape.matmul(reset, rec_cand)?;
            let n = tape.add(x_cand, h_cand)?;
            let n = tape.tanh(n);
            let carry = tape.mul(z, h)?;
            let one_minus_z = tape.one_minus(z);
            let fresh = tape.mul(one_minus_z, n)?;
            h = tape.add(fresh, carry)?;
            states.push(h);
        }
        Ok(states)
    }
}

/// Stacks per-step states into `T × H`, or an empty `0 × H` tensor.
pub(crate) fn stack_states(tape: &mut Tape, states: &[Var], units: usize) -> Result<Var> {
    if states.is_empty() {
        return Ok(tape.leaf(Tensor::zeros(0, units)));
    }
    tape.concat_rows(states, units)
}

/// Final state, or zeros for an empty sequence.
pub(crate) fn last_state(tape: &mut Tape, states: &[Var], units: usize) -> Var {
    match states.last() {
        Some(&h) => h,
        None => tape.leaf(Tensor::zeros(1, units)),
    }
}
