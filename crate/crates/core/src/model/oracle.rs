use crate::error::{Error, Result};
use crate::network::NetworkCollection;

use super::emission::log_density;
use super::ColSbmParams;

pub const ORACLE_MAX_NODES: usize = 10;
pub const ORACLE_MAX_BLOCKS: usize = 3;

/// Exact log-likelihood by summing over every admissible block assignment.
///
/// Only usable on tiny instances (n_m <= 10, Q <= 3); serves as ground truth
/// for the variational bound.
pub fn exact_loglik_oracle(collection: &NetworkCollection, params: &ColSbmParams) -> Result<f64> {
    let q = params.n_blocks();
    if q > ORACLE_MAX_BLOCKS {
        return Err(Error::TooLarge(format!("Q = {q} > {ORACLE_MAX_BLOCKS}")));
    }
    if params.n_networks() != collection.len() {
        return Err(Error::Dimension("parameter / collection size mismatch".into()));
    }
    let emission = collection.emission();
    let mut total = 0.0;
    for (m, net) in collection.networks().iter().enumerate() {
        let n = net.n();
        if n > ORACLE_MAX_NODES {
            return Err(Error::TooLarge(format!("network {m} has {n} > {ORACLE_MAX_NODES} nodes")));
        }
        let blocks = params.support.blocks(m);
        let k = blocks.len();
        let log_pi: Vec<f64> = blocks.iter().map(|&b| params.pi[[m, b]].ln()).collect();
        let mut dyads = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if net.is_observed(i, j) && (net.directed() || i < j) {
                    dyads.push((i, j, net.value(i, j)));
                }
            }
        }
        let mut terms = Vec::with_capacity(k.pow(n as u32));
        let mut z = vec![0usize; n];
        loop {
            let mut lp: f64 = z.iter().map(|&a| log_pi[a]).sum();
            for &(i, j, x) in &dyads {
                let r = params.rate(emission, m, blocks[z[i]], blocks[z[j]]);
                lp += log_density(x, r, emission);
            }
            terms.push(lp);
            // odometer increment
            let mut pos = 0;
            while pos < n {
                z[pos] += 1;
                if z[pos] < k {
                    break;
                }
                z[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
