use ndarray::{Array1, Array2, Axis};

use crate::network::{Network, NetworkCollection};

use super::VariationalState;

/// τ-weighted block statistics of one network. For undirected networks each
/// unordered pair contributes once, so `e` and `n` are symmetric halves of the
/// ordered sums.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    /// Σ_{i≠j observed} τ_iq τ_jr x_ij
    pub e: Array2<f64>,
    /// Σ_{i≠j observed} τ_iq τ_jr
    pub n: Array2<f64>,
    /// Σ_i τ_iq
    pub nq: Array1<f64>,
}

impl BlockStats {
    pub fn compute(net: &Network, tau: &Array2<f64>) -> BlockStats {
        let q = tau.ncols();
        let colsum = tau.sum_axis(Axis(0));
        let mut e = Array2::zeros((q, q));
        let mut n = Array2::zeros((q, q));
        let mut a = vec![0.0; q];
        let mut b = vec![0.0; q];
        for i in 0..net.n() {
            a.iter_mut().for_each(|v| *v = 0.0);
            for &(j, x) in net.out_edges(i) {
                for r in 0..q {
                    a[r] += x * tau[[j, r]];
                }
            }
            for r in 0..q {
                b[r] = colsum[r] - tau[[i, r]];
            }
            for &j in net.missing_out(i) {
                for r in 0..q {
                    b[r] -= tau[[j, r]];
                }
            }
            for k in 0..q {
                let t = tau[[i, k]];
                if t == 0.0 {
                    continue;
                }
                for r in 0..q {
                    e[[k, r]] += t * a[r];
                    n[[k, r]] += t * b[r];
                }
            }
        }
        if !net.directed() {
            e *= 0.5;
            n *= 0.5;
        }
        // guard tiny negative noise from the complement trick
        n.mapv_inplace(|v: f64| v.max(0.0));
        BlockStats { e, n, nq: colsum }
    }
}

/// Statistics of every network of a collection.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub per_network: Vec<BlockStats>,
}

impl SufficientStats {
    pub fn compute(collection: &NetworkCollection, state: &VariationalState) -> SufficientStats {
        let per_network = collection
            .networks()
            .iter()
            .zip(&state.tau)
            .map(|(net, tau)| BlockStats::compute(net, tau))
            .collect();
        SufficientStats { per_network }
    }
}
