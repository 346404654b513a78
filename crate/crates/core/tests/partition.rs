mod common;

use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::{EmissionKind, Network, NetworkCollection};
use colsbm::partition::{clust2coll, dissimilarity, dissimilarity_matrix, partition_score, separated_estimates};
use colsbm::selection::{compare_variants_with, model_search, SearchConfig};
use colsbm::sim::scenario::partition_alphas;
use colsbm::sim::simulate;
use colsbm::vem::Fit;
use ndarray::{array, Array2};
use rand::Rng;

use common::*;

fn fit_from(tau: Vec<Array2<f64>>, support: SupportMatrix) -> Fit {
    let (m, q) = (support.n_networks(), support.n_blocks());
    Fit {
        params: ColSbmParams {
            variant: ModelVariant::Pi,
            support,
            pi: Array2::from_elem((m, q), 1.0 / q as f64),
            alpha: Array2::from_elem((q, q), 0.3),
            delta: vec![1.0; m],
        },
        state: VariationalState::new(tau),
        elbo: 0.0,
        n_iterations: 1,
        converged: true,
        elbo_trace: vec![0.0],
    }
}

/// α̃_kr = Σ τ_ik τ_jl x_ij / Σ τ_ik τ_jl over ordered pairs i ≠ j.
fn plug_in(net: &Network, tau: &Array2<f64>) -> Array2<f64> {
    let q = tau.ncols();
    let mut num = Array2::<f64>::zeros((q, q));
    let mut den = Array2::<f64>::zeros((q, q));
    for i in 0..net.n() {
        for j in 0..net.n() {
            if i == j {
                continue;
            }
            for k in 0..q {
                for l in 0..q {
                    let w = tau[[i, k]] * tau[[j, l]];
                    num[[k, l]] += w * net.value(i, j);
                    den[[k, l]] += w;
                }
            }
        }
    }
    Array2::from_shape_fn((q, q), |(k, l)| if den[[k, l]] > 0.0 { num[[k, l]] / den[[k, l]] } else { 0.0 })
}

#[test]
fn separated_estimates_match_plug_in_formulas() {
    let mut r = rng(1);
    let net = random_network(4, 0.5, true, &mut r);
    let col = NetworkCollection::new(vec![net.clone()], EmissionKind::Bernoulli).unwrap();
    let tau = array![[0.7, 0.3], [0.2, 0.8], [0.5, 0.5], [0.9, 0.1]];
    let est = separated_estimates(&fit_from(vec![tau.clone()], SupportMatrix::full(1, 2)), &col);
    let expect = plug_in(&net, &tau);
    assert!((&est.alpha_tilde[0] - &expect).iter().all(|d| d.abs() < 1e-12));
    assert!((est.pi_tilde[[0, 0]] - 2.3 / 4.0).abs() < 1e-12);

    // one block: the network density
    let est1 = separated_estimates(&fit_from(vec![Array2::ones((4, 1))], SupportMatrix::full(1, 1)), &col);
    assert!((est1.alpha_tilde[0][[0, 0]] - net.total_weight() / 12.0).abs() < 1e-12);
    assert_eq!(est1.pi_tilde[[0, 0]], 1.0);

    // hard memberships: block densities of that network alone
    let hard = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
    let esth = separated_estimates(&fit_from(vec![hard], SupportMatrix::full(1, 2)), &col);
    let d01 = (net.value(0, 2) + net.value(0, 3) + net.value(1, 2) + net.value(1, 3)) / 4.0;
    assert!((esth.alpha_tilde[0][[0, 1]] - d01).abs() < 1e-12);
    assert!((esth.alpha_tilde[0][[0, 0]] - (net.value(0, 1) + net.value(1, 0)) / 2.0).abs() < 1e-12);
}

#[test]
fn dissimilarity_is_a_symmetric_nonnegative_matrix_with_zero_diagonal() {
    let mut r = rng(2);
    for _ in 0..20 {
        let col = random_collection(&[8, 10, 6, 9], r.gen(), &mut r);
        let support = SupportMatrix::full(4, 3);
        let tau = random_state(&col, &support, &mut r);
        let est = separated_estimates(&fit_from(tau.tau, support), &col);
        let delta: Vec<f64> = (0..4).map(|_| r.gen_range(0.5..2.0)).collect();
        let d = dissimilarity_matrix(&est, &delta);
        for a in 0..4 {
            assert_eq!(d[[a, a]], 0.0);
            assert_eq!(dissimilarity(a, a, &est, &delta), 0.0);
            for b in 0..4 {
                assert!(d[[a, b]] >= 0.0);
                assert_eq!(d[[a, b]], d[[b, a]]);
            }
        }
    }
}

fn cfg(seed: u64) -> SearchConfig {
    SearchConfig { q_max: 4, ..SearchConfig::default() }.with_seed(seed)
}

#[test]
fn scores_add_up() {
    let (col, _) = planted(array![[0.6, 0.1], [0.1, 0.5]], &[30, 30, 30], false, 1);
    let whole = model_search(&col, ModelVariant::Iid, &cfg(0)).unwrap();
    assert_eq!(partition_score(std::slice::from_ref(&whole.best)), whole.best.bic_l);
    let mut singles = Vec::new();
    let mut sep_sum = 0.0;
    for m in 0..3 {
        let cmp = compare_variants_with(&col.subset(&[m]), &cfg(0), &[ModelVariant::Iid]).unwrap();
        sep_sum += cmp.sep_total;
        singles.push(cmp.searches[0].best.clone());
    }
    assert!((partition_score(&singles) - sep_sum).abs() < 1e-6, "{} vs {sep_sum}", partition_score(&singles));
    let a = model_search(&col.subset(&[0, 1]), ModelVariant::Iid, &cfg(0)).unwrap().best;
    let b = singles[2].clone();
    assert_eq!(partition_score(&[a.clone(), b.clone()]), a.bic_l + b.bic_l);
}

#[test]
fn homogeneous_collection_stays_whole() {
    let alpha = array![[0.6, 0.15], [0.15, 0.4]];
    let whole = (0..20)
        .filter(|&s| {
            let (col, _) = planted(alpha.clone(), &[30; 6], false, 200 + s);
            clust2coll(&col, ModelVariant::Iid, &cfg(s)).unwrap().groups.len() == 1
        })
        .count();
    assert!(whole >= 18, "{whole}/20");
}

fn two_structures(seed: u64) -> NetworkCollection {
    let [assortative, _, disassortative] = partition_alphas(0.4);
    let mut nets = Vec::new();
    for (k, alpha) in [assortative, disassortative].into_iter().enumerate() {
        let p = ColSbmParams {
            variant: ModelVariant::Iid,
            support: SupportMatrix::full(1, 3),
            pi: array![[0.2, 0.3, 0.5]],
            alpha,
            delta: vec![1.0],
        };
        let (c, _) = simulate(&p, &[75], false, EmissionKind::Bernoulli, seed + k as u64).unwrap();
        nets.push(c.network(0).clone());
    }
    NetworkCollection::new(nets, EmissionKind::Bernoulli).unwrap()
}

#[test]
fn different_structures_are_split() {
    let part = clust2coll(&two_structures(3), ModelVariant::Iid, &cfg(1)).unwrap();
    assert_eq!(part.groups, vec![vec![0], vec![1]]);
    assert!(part.trace.accepted);
    assert!(part.trace.score_delta().unwrap() > 0.0);
}

#[test]
fn reordering_networks_permutes_the_partition() {
    let (a, _) = planted(array![[0.7, 0.1], [0.1, 0.6]], &[40, 35], false, 4);
    let b = two_structures(9);
    let nets = vec![a.network(0).clone(), b.network(0).clone(), a.network(1).clone(), b.network(1).clone()];
    let col = NetworkCollection::new(nets.clone(), EmissionKind::Bernoulli).unwrap();
    let order = [3, 1, 0, 2];
    let shuffled = NetworkCollection::new(order.iter().map(|&i| nets[i].clone()).collect(), EmissionKind::Bernoulli).unwrap();
    let p1 = clust2coll(&col, ModelVariant::Iid, &cfg(5)).unwrap();
    let p2 = clust2coll(&shuffled, ModelVariant::Iid, &cfg(5)).unwrap();
    let mapped: Vec<Vec<usize>> = {
        let mut g: Vec<Vec<usize>> = p2
            .groups
            .iter()
            .map(|grp| {
                let mut v: Vec<usize> = grp.iter().map(|&k| order[k]).collect();
                v.sort();
                v
            })
            .collect();
        g.sort();
        g
    };
    assert_eq!(mapped, p1.groups);
    assert!((p1.score - p2.score).abs() < 1e-9 * p1.score.abs());
}
