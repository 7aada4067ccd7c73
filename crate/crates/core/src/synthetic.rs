//! Separable toy corpora for smoke tests: each class draws its word indices
//! from its own Gaussian cluster over the vocabulary.

use rand::RngExt;
use rand_distr::{Distribution, Normal};

use crate::corpus::{EncodedExample, PAD_INDEX};
use crate::distill::EmbeddingMatrix;
use crate::seed;

#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub examples: usize,
    /// Words beyond the padding and unknown rows.
    pub vocab: usize,
    pub dim: usize,
    pub max_len: usize,
    pub min_len: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            examples: 200,
            vocab: 40,
            dim: 8,
            max_len: 12,
            min_len: 3,
        }
    }
}

/// Balanced labels, class 0 centred at a quarter of the vocabulary and
/// class 1 at three quarters (σ = vocab / 10), plus a uniform random
/// embedding matrix with a zero padding row.
pub fn separable_corpus(spec: &SyntheticSpec, seed: u64) -> (Vec<EncodedExample>, EmbeddingMatrix) {
    let mut rng = seed::rng_for(seed, "synthetic/corpus");
    let v = spec.vocab as f64;
    let clusters = [
        Normal::new(v * 0.25, v / 10.0).expect("valid sigma"),
        Normal::new(v * 0.75, v / 10.0).expect("valid sigma"),
    ];
    let data = (0..spec.examples)
        .map(|i| {
            let label = (i % 2) as u8;
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let mut indices: Vec<usize> = (0..len)
                .map(|_| {
                    let x = clusters[label as usize].sample(&mut rng).round();
                    2 + x.clamp(0.0, v - 1.0) as usize
                })
                .collect();
            indices.resize(spec.max_len, PAD_INDEX);
            EncodedExample { indices, label }
        })
        .collect();

    let rows = spec.vocab + 2;
    let mut mrng = seed::rng_for(seed, "synthetic/matrix");
    let mut values: Vec<f64> = (0..rows * spec.dim)
        .map(|_| mrng.random_range(-0.5..0.5))
        .collect();
    values[..spec.dim].fill(0.0);
    let matrix =
        EmbeddingMatrix::from_parts(rows, spec.dim, seed, values).expect("consistent shape");
    (data, matrix)
}
