//! Minimal differentiable compute core in double precision.

mod attention;
mod gradcheck;
mod init;
mod layers;
mod optim;
mod params;
mod recurrent;
mod tape;
mod tensor;

pub use attention::{attention, AttentionParams, AttentionState};
pub use gradcheck::{
    grad_check, grad_check_with, relative_error, GradCheckOptions, GradCheckReport, Objective,
    DEFAULT_STEP, DENOMINATOR_FLOOR,
};
pub use init::{glorot_uniform, orthogonal};
pub use layers::{Activation, Layer, LayerSpec, Mode};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tape::{binary_cross_entropy, sigmoid, softmax, Tape, Var, BCE_EPSILON};
pub use tensor::Tensor;
