#![allow(dead_code)]

use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::{EmissionKind, Network, NetworkCollection};
use colsbm::sim::simulate;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Bernoulli network with density `p` and no missing dyads.
pub fn random_network(n: usize, p: f64, directed: bool, r: &mut ChaCha8Rng) -> Network {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            let x = f64::from(u8::from(r.gen::<f64>() < p));
            a[[i, j]] = x;
            if !directed {
                a[[j, i]] = x;
            }
        }
    }
    Network::new(a, directed).unwrap()
}

pub fn random_collection(sizes: &[usize], directed: bool, r: &mut ChaCha8Rng) -> NetworkCollection {
    let nets = sizes
        .iter()
        .map(|&n| {
            let p = r.gen_range(0.15..0.6);
            random_network(n, p, directed, r)
        })
        .collect();
    NetworkCollection::new(nets, EmissionKind::Bernoulli).unwrap()
}

/// Row-stochastic τ with random entries on the supported blocks.
pub fn random_state(col: &NetworkCollection, support: &SupportMatrix, r: &mut ChaCha8Rng) -> VariationalState {
    let q = support.n_blocks();
    VariationalState::new(
        col.networks()
            .iter()
            .enumerate()
            .map(|(m, net)| {
                let mut t = Array2::zeros((net.n(), q));
                for i in 0..net.n() {
                    let mut s = 0.0;
                    for k in support.blocks(m) {
                        let v = r.gen_range(0.05..1.0);
                        t[[i, k]] = v;
                        s += v;
                    }
                    for k in 0..q {
                        t[[i, k]] /= s;
                    }
                }
                t
            })
            .collect(),
    )
}

/// Valid parameters for `variant` on `support` with random entries.
pub fn random_params(variant: ModelVariant, support: &SupportMatrix, r: &mut ChaCha8Rng) -> ColSbmParams {
    let (m, q) = (support.n_networks(), support.n_blocks());
    let support = if variant.free_support() { support.clone() } else { SupportMatrix::full(m, q) };
    let base: Array1<f64> = (0..q).map(|_| r.gen_range(0.2..1.0)).collect();
    let mut pi = Array2::zeros((m, q));
    for a in 0..m {
        let mut s = 0.0;
        for b in support.blocks(a) {
            let v = if variant.per_network_pi() { r.gen_range(0.2..1.0) } else { base[b] };
            pi[[a, b]] = v;
            s += v;
        }
        for b in 0..q {
            pi[[a, b]] /= s;
        }
    }
    let alpha = Array2::from_shape_fn((q, q), |_| r.gen_range(0.05..0.6));
    let mut delta = vec![1.0; m];
    if variant.has_density() {
        for d in delta.iter_mut().skip(1) {
            *d = r.gen_range(0.5..1.5);
        }
    }
    ColSbmParams { variant, support, pi, alpha, delta }
}

/// Two-block planted collection.
pub fn planted(alpha: Array2<f64>, sizes: &[usize], directed: bool, seed: u64) -> (NetworkCollection, Vec<Vec<usize>>) {
    let m = sizes.len();
    let q = alpha.nrows();
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(m, q),
        pi: Array2::from_elem((m, q), 1.0 / q as f64),
        alpha,
        delta: vec![1.0; m],
    };
    let (col, truth) = simulate(&params, sizes, directed, EmissionKind::Bernoulli, seed).unwrap();
    (col, truth.memberships)
}
