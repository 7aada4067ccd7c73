//! Static word embeddings distilled from contextual vectors by mean pooling,
//! and a from-scratch toolkit for training recurrent, convolutional and
//! attention-based text classifiers on top of them under stratified k-fold
//! cross-validation.

pub mod corpus;
pub mod distill;
pub mod engine;
pub mod error;
pub mod evaluate;
pub mod models;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
