//! Seeded weight initializers.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use super::Tensor;
use crate::seed::Rng;

/// Glorot/Xavier uniform: `U(−a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::new(rows, cols, data).expect("sized buffer")
}

/// Matrix with orthonormal rows or columns (whichever is shorter), from
/// modified Gram–Schmidt on a standard normal draw.
pub fn orthogonal(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    // Orthonormalize the longer side's vectors of the transposed problem so
    // that we always produce min(rows, cols) orthonormal vectors.
    let (n_vec, len) = (rows.min(cols), rows.max(cols));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
    while basis.len() < n_vec {
        let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A draw (numerically) inside the current span is simply redrawn.
        if norm > 1e-10 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = Tensor::zeros(rows, cols);
    for (k, b) in basis.iter().enumerate() {
        for (j, &x) in b.iter().enumerate() {
            if rows <= cols {
                out.row_mut(k)[j] = x;
            } else {
                out.row_mut(j)[k] = x;
            }
        }
    }
    out
}
