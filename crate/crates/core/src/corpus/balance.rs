use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    pub class_counts: Vec<u64>,
    pub n: u64,
    pub k: usize,
    /// Shannon entropy of the class proportions, in nats.
    pub entropy: f64,
    /// `entropy / ln k`, in [0, 1].
    pub balance: f64,
}

/// Normalized Shannon entropy of class sizes. Empty classes contribute
/// nothing (0·log 0 = 0) but still count towards `k`.
pub fn balance(class_counts: &[u64]) -> Result<BalanceReport> {
    let k = class_counts.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "balance needs at least 2 classes, got {k}"
        )));
    }
    let n: u64 = class_counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidInput(
            "balance needs at least one instance".into(),
        ));
    }
    let total = n as f64;
    let entropy = -class_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    // The sum above can come out as -0.0 for a single class.
    let entropy = entropy.max(0.0);
    let balance = (entropy / (k as f64).ln()).clamp(0.0, 1.0);
    Ok(BalanceReport {
        class_counts: class_counts.to_vec(),
        n,
        k,
        entropy,
        balance,
    })
}
