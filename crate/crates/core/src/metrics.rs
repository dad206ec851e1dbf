//! External clustering metrics: accuracy under the best one-to-one
//! cluster-to-class matching, and normalized mutual information.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};

/// A hard clustering of `N ≥ 1` items into labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// `k` is taken as one past the largest label.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map(|m| m + 1).unwrap_or(0);
        Self::with_k(labels, k)
    }

    pub fn with_k(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDataset("partition must be non-empty".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidDataset(format!("label {bad} outside 0..{k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn check_lengths(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `counts[t][p]` = number of items with true label `t` and predicted `p`.
pub fn contingency(true_p: &Partition, pred_p: &Partition) -> Result<Vec<Vec<usize>>> {
    check_lengths(true_p, pred_p)?;
    let mut counts = vec![vec![0; pred_p.k()]; true_p.k()];
    for (&t, &p) in true_p.labels().iter().zip(pred_p.labels()) {
        counts[t][p] += 1;
    }
    Ok(counts)
}

/// Maximum-weight one-to-one map from predicted to true labels (Hungarian
/// algorithm on the zero-padded square confusion matrix). Entry `p` is
/// `None` when predicted label `p` is left unmatched.
pub fn optimal_label_matching(
    true_p: &Partition,
    pred_p: &Partition,
) -> Result<Vec<Option<usize>>> {
    let counts = contingency(true_p, pred_p)?;
    let (kt, kp) = (true_p.k(), pred_p.k());
    let size = kt.max(kp);
    let weights = Matrix::from_fn(size, size, |(p, t)| {
        if p < kp && t < kt {
            counts[t][p] as i64
        } else {
            0
        }
    });
    let (_, assignment) = kuhn_munkres(&weights);
    Ok((0..kp)
        .map(|p| Some(assignment[p]).filter(|&t| t < kt))
        .collect())
}

/// Fraction of items whose predicted cluster maps onto their true class.
pub fn accuracy(true_p: &Partition, pred_p: &Partition) -> Result<f64> {
    let counts = contingency(true_p, pred_p)?;
    let mapping = optimal_label_matching(true_p, pred_p)?;
    let matched: usize = mapping
        .iter()
        .enumerate()
        .filter_map(|(p, t)| t.map(|t| counts[t][p]))
        .sum();
    Ok(matched as f64 / true_p.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(T; P) / sqrt(H(T) H(P))` with natural-log entropies.
///
/// Two single-cluster partitions score 1; if exactly one side has zero
/// entropy the score is 0.
pub fn nmi(true_p: &Partition, pred_p: &Partition) -> Result<f64> {
    let counts = contingency(true_p, pred_p)?;
    let n = true_p.len() as f64;
    let row_sums: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..pred_p.k())
        .map(|p| counts.iter().map(|r| r[p]).sum())
        .collect();
    let h_true = entropy(row_sums.iter().copied(), n);
    let h_pred = entropy(col_sums.iter().copied(), n);
    if h_true == 0.0 && h_pred == 0.0 {
        return Ok(1.0);
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (t, row) in counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (row_sums[t] as f64 * col_sums[p] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_true * h_pred).sqrt()).clamp(0.0, 1.0))
}
