use ndarray::{Array1, Array2, Axis};

use crate::model::ColSbmParams;
use crate::network::{EmissionKind, Network};

use super::VemConfig;

/// Per-network view of the parameters used by the VE sweeps.
struct RowScorer {
    blocks: Vec<usize>,
    log_pi: Vec<f64>,
    /// slope[a][b], intercept[a][b] over positions in `blocks`
    slope: Vec<Vec<f64>>,
    intercept: Vec<Vec<f64>>,
}

impl RowScorer {
    fn new(params: &ColSbmParams, emission: EmissionKind, m: usize) -> Self {
        let blocks = params.support.blocks(m);
        let log_pi = blocks.iter().map(|&q| params.pi[[m, q]].ln()).collect();
        let mut slope = vec![vec![0.0; blocks.len()]; blocks.len()];
        let mut intercept = slope.clone();
        for (a, &q) in blocks.iter().enumerate() {
            for (b, &r) in blocks.iter().enumerate() {
                let (s, c) =
                    crate::model::linear_coefficients(params.rate(emission, m, q, r), emission);
                slope[a][b] = s;
                intercept[a][b] = c;
            }
        }
        RowScorer {
            blocks,
            log_pi,
            slope,
            intercept,
        }
    }
}

/// Gauss-Seidel fixed-point sweeps over the rows of `tau`, in place.
///
/// Each row update is the exact maximiser of the bound in that row with all
/// other rows held fixed, so the bound never decreases. Rows stay exactly zero
/// on blocks outside the support of network `m`. Returns the number of sweeps.
pub(crate) fn ve_sweeps(
    net: &Network,
    m: usize,
    params: &ColSbmParams,
    emission: EmissionKind,
    tau: &mut Array2<f64>,
    cfg: &VemConfig,
) -> usize {
    let scorer = RowScorer::new(params, emission, m);
    let k = scorer.blocks.len();
    if k == 1 {
        let q = scorer.blocks[0];
        tau.fill(0.0);
        tau.column_mut(q).fill(1.0);
        return 1;
    }
    let n = net.n();
    let mut colsum: Array1<f64> = tau.sum_axis(Axis(0));
    let mut a_out = vec![0.0; k];
    let mut b_out = vec![0.0; k];
    let mut a_in = vec![0.0; k];
    let mut b_in = vec![0.0; k];
    let mut score = vec![0.0; k];
    let blocks = &scorer.blocks;
    let mut sweeps = 0;
    for _ in 0..cfg.fixed_point_max_iter.max(1) {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            gather(net.out_edges(i), net.missing_out(i), tau, &colsum, i, blocks, &mut a_out, &mut b_out);
            for a in 0..k {
                let mut s = scorer.log_pi[a];
                for b in 0..k {
                    s += a_out[b] * scorer.slope[a][b] + b_out[b] * scorer.intercept[a][b];
                }
                score[a] = s;
            }
            if net.directed() {
                gather(net.in_edges(i), net.missing_in(i), tau, &colsum, i, blocks, &mut a_in, &mut b_in);
                for a in 0..k {
                    let mut s = 0.0;
                    for b in 0..k {
                        s += a_in[b] * scorer.slope[b][a] + b_in[b] * scorer.intercept[b][a];
                    }
                    score[a] += s;
                }
            }
            let max = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in score.iter_mut() {
                *s = (*s - max).exp();
                z += *s;
            }
            for (a, &q) in blocks.iter().enumerate() {
                let new = score[a] / z;
                let old = tau[[i, q]];
                max_change = max_change.max((new - old).abs());
                colsum[q] += new - old;
                tau[[i, q]] = new;
            }
        }
        if max_change < cfg.fixed_point_tol {
            break;
        }
    }
    sweeps
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn gather(
    edges: &[(usize, f64)],
    missing: &[usize],
    tau: &Array2<f64>,
    colsum: &Array1<f64>,
    i: usize,
    blocks: &[usize],
    a: &mut [f64],
    b: &mut [f64],
) {
    for (pos, &q) in blocks.iter().enumerate() {
        a[pos] = 0.0;
        b[pos] = colsum[q] - tau[[i, q]];
    }
    for &(j, x) in edges {
        for (pos, &q) in blocks.iter().enumerate() {
            a[pos] += x * tau[[j, q]];
        }
    }
    for &j in missing {
        for (pos, &q) in blocks.iter().enumerate() {
            b[pos] -= tau[[j, q]];
        }
    }
}

/// Projects a τ matrix onto the support of network `m`: off-support columns
/// are zeroed and rows renormalised (rows left empty become uniform).
pub(crate) fn project_to_support(tau: &mut Array2<f64>, blocks: &[usize]) {
    let q = tau.ncols();
    let mut on = vec![false; q];
    for &b in blocks {
        on[b] = true;
    }
    for mut row in tau.rows_mut() {
        for (k, v) in row.iter_mut().enumerate() {
            if !on[k] || !v.is_finite() || *v < 0.0 {
                *v = 0.0;
            }
        }
        let s = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|v| v / s);
        } else {
            let u = 1.0 / blocks.len() as f64;
            for &b in blocks {
                row[b] = u;
            }
        }
    }
}
