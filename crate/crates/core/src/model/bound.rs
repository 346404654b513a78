use ndarray::Array2;

use crate::error::{Error, Result};
use crate::network::{EmissionKind, NetworkCollection};

use super::emission::linear_coefficients;
use super::{BlockStats, ColSbmParams, SufficientStats, VariationalState};

/// -Σ τ log τ of one network, with 0 log 0 = 0.
pub fn network_entropy(tau: &Array2<f64>) -> f64 {
    -tau.iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| t * t.ln())
        .sum::<f64>()
}

pub fn entropy(state: &VariationalState) -> f64 {
    state.tau.iter().map(network_entropy).sum()
}

/// Expected complete log-likelihood of network `m` from its block statistics.
pub(crate) fn network_expected_loglik(
    stats: &BlockStats,
    params: &ColSbmParams,
    emission: EmissionKind,
    m: usize,
    log_factorial_sum: f64,
) -> f64 {
    let blocks = params.support.blocks(m);
    let mut ll = 0.0;
    for &q in &blocks {
        for &r in &blocks {
            let (slope, intercept) = linear_coefficients(params.rate(emission, m, q, r), emission);
            ll += stats.e[[q, r]] * slope + stats.n[[q, r]] * intercept;
        }
        let nq = stats.nq[q];
        if nq > 0.0 {
            ll += nq * params.pi[[m, q]].ln();
        }
    }
    if emission == EmissionKind::Poisson {
        ll -= log_factorial_sum;
    }
    ll
}

/// Variational bound from precomputed statistics and per-network entropies.
pub fn elbo_from_stats(
    collection: &NetworkCollection,
    stats: &SufficientStats,
    entropies: &[f64],
    params: &ColSbmParams,
) -> f64 {
    stats
        .per_network
        .iter()
        .enumerate()
        .map(|(m, s)| {
            network_expected_loglik(
                s,
                params,
                collection.emission(),
                m,
                collection.network(m).log_factorial_sum(),
            ) + entropies[m]
        })
        .sum()
}

/// Variational lower bound J(τ, θ). Missing dyads and the diagonal are skipped.
pub fn elbo(
    collection: &NetworkCollection,
    state: &VariationalState,
    params: &ColSbmParams,
) -> Result<f64> {
    if params.n_networks() != collection.len() {
        return Err(Error::Dimension(format!(
            "parameters for {} networks, collection has {}",
            params.n_networks(),
            collection.len()
        )));
    }
    state.validate(collection, &params.support)?;
    let stats = SufficientStats::compute(collection, state);
    let entropies: Vec<f64> = state.tau.iter().map(network_entropy).collect();
    Ok(elbo_from_stats(collection, &stats, &entropies, params))
}
