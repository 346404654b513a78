use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::SupportMatrix;
use crate::vem::all_permutations;

/// Largest Q for which `rmse_alpha` searches all permutations.
pub const RMSE_MAX_BLOCKS: usize = 8;

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// When both labelings put everything in one group (or everything in
/// singletons) the index is 0/0; it is reported as 1 if the partitions agree
/// and 0 otherwise.
pub fn ari(z1: &[usize], z2: &[usize]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::Metric(format!("label lengths {} and {}", z1.len(), z2.len())));
    }
    let n = z1.len() as f64;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&a, &b) in z1.iter().zip(z2) {
        *table.entry((a, b)).or_default() += 1.0;
        *rows.entry(a).or_default() += 1.0;
        *cols.entry(b).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        let same = table.len() == rows.len() && table.len() == cols.len();
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max_index - expected))
}

/// Mean of the per-network indices.
pub fn mean_ari(z_hat: &[Vec<usize>], z: &[Vec<usize>]) -> Result<f64> {
    if z_hat.len() != z.len() || z.is_empty() {
        return Err(Error::Metric("different number of networks".into()));
    }
    let mut s = 0.0;
    for (a, b) in z_hat.iter().zip(z) {
        s += ari(a, b)?;
    }
    Ok(s / z.len() as f64)
}

/// Index over all nodes of the collection, labels being shared across networks.
pub fn joint_ari(z_hat: &[Vec<usize>], z: &[Vec<usize>]) -> Result<f64> {
    if z_hat.len() != z.len() {
        return Err(Error::Metric("different number of networks".into()));
    }
    let a: Vec<usize> = z_hat.iter().flatten().copied().collect();
    let b: Vec<usize> = z.iter().flatten().copied().collect();
    ari(&a, &b)
}

/// Root mean squared error between connectivity matrices, minimised over
/// relabellings of the estimate.
pub fn rmse_alpha(alpha_hat: &Array2<f64>, alpha: &Array2<f64>) -> Result<f64> {
    rmse_over(alpha_hat, alpha, |_, _| true)
}

/// As `rmse_alpha`, restricted to entries whose blocks co-occur in some
/// network of `support_hat`. The other entries are never observed, so the
/// estimate carries no information about them.
pub fn rmse_alpha_supported(alpha_hat: &Array2<f64>, support_hat: &SupportMatrix, alpha: &Array2<f64>) -> Result<f64> {
    if support_hat.n_blocks() != alpha_hat.nrows() {
        return Err(Error::Metric(format!(
            "support has {} blocks, estimate {}",
            support_hat.n_blocks(),
            alpha_hat.nrows()
        )));
    }
    rmse_over(alpha_hat, alpha, |a, b| support_hat.co_occur(a, b))
}

/// `keep` is evaluated on indices of the estimate.
fn rmse_over(alpha_hat: &Array2<f64>, alpha: &Array2<f64>, keep: impl Fn(usize, usize) -> bool) -> Result<f64> {
    if alpha_hat.dim() != alpha.dim() || alpha.nrows() != alpha.ncols() {
        return Err(Error::Metric(format!("shapes {:?} and {:?}", alpha_hat.dim(), alpha.dim())));
    }
    let q = alpha.nrows();
    if q > RMSE_MAX_BLOCKS {
        return Err(Error::TooLarge(format!("Q = {q} > {RMSE_MAX_BLOCKS}")));
    }
    let mut best = f64::INFINITY;
    let mut count = 0usize;
    for p in all_permutations(q) {
        let (mut s, mut c) = (0.0, 0usize);
        for a in 0..q {
            for b in 0..q {
                if keep(p[a], p[b]) {
                    let d = alpha_hat[[p[a], p[b]]] - alpha[[a, b]];
                    s += d * d;
                    c += 1;
                }
            }
        }
        if s < best {
            best = s;
            count = c;
        }
    }
    if count == 0 {
        return Err(Error::Metric("no entries to compare".into()));
    }
    Ok((best / count as f64).sqrt())
}

/// Whether the estimated support equals the true one up to a column permutation.
pub fn rec_support(s_hat: &SupportMatrix, s: &SupportMatrix) -> Result<bool> {
    let (a, b) = (s_hat.as_array(), s.as_array());
    if a.dim() != b.dim() {
        return Err(Error::Metric(format!("shapes {:?} and {:?}", a.dim(), b.dim())));
    }
    // compare the multisets of columns
    let cols = |x: &Array2<bool>| {
        let mut v: Vec<Vec<bool>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        v.sort();
        v
    };
    Ok(cols(a) == cols(b))
}
