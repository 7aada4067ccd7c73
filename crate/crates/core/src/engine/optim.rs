use super::{Gradients, ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// First/second moment buffers plus the step counter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    first: Vec<Option<Tensor>>,
    second: Vec<Option<Tensor>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One bias-corrected Adam update of every trainable parameter:
/// `θ ← θ − lr · m̂ / (√v̂ + ε)`.
pub fn adam_step(
    store: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    hyper: &AdamConfig,
) -> Result<()> {
    if state.first.is_empty() {
        state.first = vec![None; store.len()];
        state.second = vec![None; store.len()];
    }
    if state.first.len() != store.len() {
        return Err(Error::shape(
            "adam",
            "state was built for a different store",
        ));
    }
    for (id, g) in grads.iter() {
        let Some(g) = g else { continue };
        let p = store.get(id);
        if g.shape() != p.value.shape() {
            return Err(Error::shape(
                "adam",
                format!(
                    "`{}` is {:?}, gradient {:?}",
                    p.name,
                    p.value.shape(),
                    g.shape()
                ),
            ));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - hyper.beta1.powf(t);
    let bc2 = 1.0 - hyper.beta2.powf(t);
    for (id, g) in grads.iter() {
        let Some(g) = g else { continue };
        let param = store.get_mut(id);
        if !param.trainable {
            continue;
        }
        let [r, c] = g.shape();
        let m = state.first[id.0].get_or_insert_with(|| Tensor::zeros(r, c));
        let v = state.second[id.0].get_or_insert_with(|| Tensor::zeros(r, c));
        let theta = param.value.data_mut();
        for (((p, gi), mi), vi) in theta
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = hyper.beta1 * *mi + (1.0 - hyper.beta1) * gi;
            *vi = hyper.beta2 * *vi + (1.0 - hyper.beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *p -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
    }
    Ok(())
}
