use std::collections::HashMap;

use super::StaticEmbeddingTable;
use crate::error::{Error, Result};

/// Per-word running sums of contextual vectors and their occurrence counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualAccumulator {
    dim: usize,
    store: HashMap<String, (Vec<f64>, u64)>,
}

impl ContextualAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            store: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn count(&self, word: &str) -> u64 {
        self.store.get(word).map_or(0, |(_, n)| *n)
    }

    pub fn sum(&self, word: &str) -> Option<&[f64]> {
        self.store.get(word).map(|(s, _)| s.as_slice())
    }

    pub fn accumulate(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{bad} in vector for `{word}`")));
        }
        match self.store.get_mut(word) {
            Some((sum, n)) => {
                sum.iter_mut().zip(vector).for_each(|(s, v)| *s += v);
                *n += 1;
            }
            None => {
                self.store.insert(word.to_owned(), (vector.to_vec(), 1));
            }
        }
        Ok(())
    }

    /// Folds another shard in by adding `(sum, count)` pairs.
    pub fn merge(&mut self, other: ContextualAccumulator) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        for (word, (sum, n)) in other.store {
            match self.store.get_mut(&word) {
                Some((s, c)) => {
                    s.iter_mut().zip(&sum).for_each(|(a, b)| *a += b);
                    *c += n;
                }
                None => {
                    self.store.insert(word, (sum, n));
                }
            }
        }
        Ok(())
    }

    /// Mean-pools every word's contextual vectors.
    pub fn finalize(&self) -> Result<StaticEmbeddingTable> {
        if self.store.is_empty() {
            return Err(Error::InvalidInput("no occurrences accumulated".into()));
        }
        let mut table = StaticEmbeddingTable::new(self.dim);
        for (word, (sum, n)) in &self.store {
            let count = *n as f64;
            table.insert(word.clone(), sum.iter().map(|s| s / count).collect())?;
        }
        Ok(table)
    }
}
