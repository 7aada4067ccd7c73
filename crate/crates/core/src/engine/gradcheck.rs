//! Central finite-difference check of reverse-mode gradients.

use super::{Gradients, ParamStore};
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative errors use `max(|analytic|, |numeric|, DENOMINATOR_FLOOR)` as the
/// denominator so that entries whose true gradient is ~0 are compared on an
/// absolute scale instead of amplifying finite-difference noise.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Something with parameters and a scalar loss at the current values.
pub trait Objective {
    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    /// Loss at the current parameters; when `grads` is given the analytic
    /// gradient is added into it.
    fn evaluate(&self, grads: Option<&mut Gradients>) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Test hook: added to every analytic gradient entry before comparison.
    pub corrupt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR)
}

pub fn grad_check<O: Objective>(objective: &mut O, tolerance: f64) -> Result<GradCheckReport> {
    grad_check_with(
        objective,
        tolerance,
        GradCheckOptions {
            step: DEFAULT_STEP,
            corrupt: None,
        },
    )
}

/// Compares every trainable parameter entry's analytic gradient against
/// `(L(θ + h) − L(θ − h)) / 2h`.
pub fn grad_check_with<O: Objective>(
    objective: &mut O,
    tolerance: f64,
    options: GradCheckOptions,
) -> Result<GradCheckReport> {
    let h = if options.step > 0.0 {
        options.step
    } else {
        DEFAULT_STEP
    };
    let mut grads = Gradients::for_store(objective.store());
    let base = objective.evaluate(Some(&mut grads))?;
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("loss {base}")));
    }
    let ids: Vec<_> = objective
        .store()
        .iter()
        .filter(|(_, p)| p.trainable)
        .map(|(id, p)| (id, p.name.clone(), p.value.len()))
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        checked: 0,
        tolerance,
    };
    for (id, name, len) in ids {
        for k in 0..len {
            let original = objective.store().get(id).value.data()[k];
            objective.store_mut().get_mut(id).value.data_mut()[k] = original + h;
            let plus = objective.evaluate(None)?;
            objective.store_mut().get_mut(id).value.data_mut()[k] = original - h;
            let minus = objective.evaluate(None)?;
            objective.store_mut().get_mut(id).value.data_mut()[k] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss while perturbing `{name}`[{k}]"
                )));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.get(id).expect("trainable has gradient").data()[k]
                + options.corrupt.unwrap_or(0.0);
            let err = relative_error(analytic, numeric);
            if report.checked == 0 || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = format!("{name}[{k}]");
            }
            report.checked += 1;
        }
    }
    if report.checked == 0 {
        return Err(Error::InvalidInput(
            "no trainable parameters to check".into(),
        ));
    }
    Ok(report)
}
