//! Simulation from the generative model, recovery metrics and the benchmark
//! scenarios.

mod metrics;
pub mod scenario;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson, WeightedIndex};

use crate::error::{Error, Result};
use crate::model::ColSbmParams;
use crate::network::{EmissionKind, Network, NetworkCollection};
use crate::rng::rng_at;

pub use metrics::{ari, joint_ari, mean_ari, rec_support, rmse_alpha, rmse_alpha_supported, RMSE_MAX_BLOCKS};
pub use scenario::{run_scenario, Scenario, ScenarioConfig, ScenarioResult, ScenarioRow};

/// Ground truth of a simulated collection.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub memberships: Vec<Vec<usize>>,
    pub params: ColSbmParams,
    /// Block permutation applied to each network's proportions (identity when unused).
    pub permutations: Vec<Vec<usize>>,
}

/// Draws memberships, then every dyad independently with rate δ_m α_{z_i z_j}.
pub fn simulate(
    params: &ColSbmParams,
    sizes: &[usize],
    directed: bool,
    emission: EmissionKind,
    seed: u64,
) -> Result<(NetworkCollection, SimTruth)> {
    params.validate(emission)?;
    if sizes.len() != params.n_networks() {
        return Err(Error::Dimension(format!(
            "{} sizes for {} networks",
            sizes.len(),
            params.n_networks()
        )));
    }
    let q = params.n_blocks();
    let mut networks = Vec::with_capacity(sizes.len());
    let mut memberships = Vec::with_capacity(sizes.len());
    for (m, &n) in sizes.iter().enumerate() {
        let mut rng = rng_at(seed, &[m as u64]);
        let weights: Vec<f64> = (0..q).map(|k| params.pi[[m, k]]).collect();
        let pick = WeightedIndex::new(&weights).map_err(|e| Error::Params(e.to_string()))?;
        let z: Vec<usize> = (0..n).map(|_| pick.sample(&mut rng)).collect();
        let mut adj = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j || (!directed && j < i) {
                    continue;
                }
                let rate = params.delta[m] * params.alpha[[z[i], z[j]]];
                let x = match emission {
                    EmissionKind::Bernoulli => f64::from(u8::from(rng.gen::<f64>() < rate)),
                    EmissionKind::Poisson => Poisson::new(rate)
                        .map_err(|e| Error::Params(e.to_string()))?
                        .sample(&mut rng),
                };
                adj[[i, j]] = x;
                if !directed {
                    adj[[j, i]] = x;
                }
            }
        }
        networks.push(Network::new(adj, directed)?);
        memberships.push(z);
    }
    let collection = NetworkCollection::new(networks, emission)?;
    Ok((
        collection,
        SimTruth {
            memberships,
            params: params.clone(),
            permutations: vec![(0..q).collect(); sizes.len()],
        },
    ))
}
