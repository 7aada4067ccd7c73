use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Assignment of every example to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f == fold)
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f != fold)
    }

    fn indices_where(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| keep(f))
            .map(|(i, _)| i)
            .collect()
    }

    /// `row_index,fold_id` text with a header line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "row_index,fold_id").expect("write to Vec");
        for (row, fold) in self.assignment.iter().enumerate() {
            writeln!(out, "{row},{fold}").expect("write to Vec");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn class_members(labels: &[u8], rng_seed: u64, tag: &str) -> [Vec<usize>; 2] {
    let mut members = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        members[usize::from(l.min(1))].push(i);
    }
    for (class, m) in members.iter_mut().enumerate() {
        let mut rng = seed::rng_for(rng_seed, &format!("{tag}/class-{class}"));
        m.shuffle(&mut rng);
    }
    members
}

/// Shuffles each class with a seeded permutation, then deals its members
/// round-robin over the folds. The second class picks up the deal where the
/// first one stopped so fold sizes stay within one of each other.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let members = class_members(labels, seed, "folds");
    for (class, m) in members.iter().enumerate() {
        if m.len() < k {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} members, fewer than k = {k}",
                m.len()
            )));
        }
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for m in &members {
        for &row in m {
            assignment[row] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignment })
}

/// Splits row positions `0..labels.len()` into `(train, holdout)` keeping
/// class proportions; each class contributes `round(fraction · size)` rows
/// to the holdout, at least one when it has two or more members.
pub fn stratified_holdout(labels: &[u8], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let members = class_members(labels, seed, "holdout");
    let mut train = Vec::new();
    let mut hold = Vec::new();
    for m in &members {
        let mut take = (fraction * m.len() as f64).round() as usize;
        if take == 0 && m.len() >= 2 && fraction > 0.0 {
            take = 1;
        }
        let take = take.min(m.len().saturating_sub(1));
        hold.extend_from_slice(&m[..take]);
        train.extend_from_slice(&m[take..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}
