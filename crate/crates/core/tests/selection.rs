mod common;

use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::NetworkCollection;
use colsbm::selection::{
    compare_variants, compare_variants_with, fit_sep_sbm, model_search, support_candidates, SearchConfig,
};
use colsbm::vem::Fit;
use ndarray::{array, Array2};

use common::*;

fn cfg(q_max: usize, seed: u64) -> SearchConfig {
    SearchConfig { q_max, ..SearchConfig::default() }.with_seed(seed)
}

fn er(sizes: &[usize], p: f64, seed: u64) -> NetworkCollection {
    let (col, _) = planted(array![[p]], sizes, true, seed);
    col
}

#[test]
fn erdos_renyi_network_has_one_block() {
    let hits = (0..20)
        .filter(|&s| fit_sep_sbm(&er(&[60], 0.25, s), &cfg(3, s)).unwrap()[0].q_hat() == 1)
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn erdos_renyi_collection_has_one_block() {
    let hits = (0..20)
        .filter(|&s| model_search(&er(&[50, 50, 50], 0.25, 100 + s), ModelVariant::Iid, &cfg(3, s)).unwrap().q_hat() == 1)
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn strong_three_blocks_are_found() {
    let alpha = array![[0.8, 0.1, 0.05], [0.1, 0.7, 0.1], [0.05, 0.1, 0.75]];
    let (col, _) = planted(alpha.clone(), &[60], true, 3);
    assert_eq!(fit_sep_sbm(&col, &cfg(5, 1)).unwrap()[0].q_hat(), 3);
    let (col, _) = planted(alpha, &[40, 50], true, 4);
    assert_eq!(model_search(&col, ModelVariant::Iid, &cfg(5, 1)).unwrap().q_hat(), 3);
}

#[test]
fn two_nodes_give_one_block() {
    let (col, _) = planted(array![[0.5]], &[2], true, 0);
    assert_eq!(fit_sep_sbm(&col, &cfg(2, 0)).unwrap()[0].q_hat(), 1);
}

#[test]
fn single_network_search_agrees_with_separate_fit() {
    let alpha = array![[0.6, 0.1], [0.15, 0.5]];
    for s in 0..20 {
        let (col, _) = planted(alpha.clone(), &[40], true, 50 + s);
        let joint = model_search(&col, ModelVariant::Iid, &cfg(4, s)).unwrap().q_hat();
        let sep = fit_sep_sbm(&col, &cfg(4, s)).unwrap()[0].q_hat();
        assert!(joint.abs_diff(sep) <= 1, "replicate {s}: {joint} vs {sep}");
    }
}

fn fit_with_pi(pi: Array2<f64>) -> Fit {
    let (m, q) = pi.dim();
    Fit {
        params: ColSbmParams {
            variant: ModelVariant::Pi,
            support: SupportMatrix::full(m, q),
            pi,
            alpha: Array2::from_elem((q, q), 0.3),
            delta: vec![1.0; m],
        },
        state: VariationalState::new(vec![Array2::from_elem((2, q), 1.0 / q as f64); m]),
        elbo: 0.0,
        n_iterations: 1,
        converged: true,
        elbo_trace: vec![0.0],
    }
}

#[test]
fn thresholded_supports() {
    let fit = fit_with_pi(array![[0.5, 0.5, 0.0], [0.4, 0.0, 0.6]]);
    let c = support_candidates(&fit, &[0.01]);
    assert_eq!(c, vec![SupportMatrix::from_rows(&[&[1, 1, 0], &[1, 0, 1]]).unwrap()]);
    let zero = support_candidates(&fit, &[0.0]);
    assert_eq!(zero[0].to_rows(), vec![vec![1, 1, 0], vec![1, 0, 1]]);
    // a threshold above every entry is repaired to the largest block per row
    let fit = fit_with_pi(array![[0.2, 0.5, 0.3], [0.3, 0.3, 0.4]]);
    let repaired = support_candidates(&fit, &[0.9]);
    assert_eq!(repaired.len(), 1);
    let s = &repaired[0];
    assert!(s.contains(0, 1) && s.contains(1, 2));
    for m in 0..2 {
        assert!(s.block_count(m) >= 1);
    }
    for q in 0..3 {
        assert!((0..2).any(|m| s.contains(m, q)));
    }
    // duplicates collapse
    assert_eq!(support_candidates(&fit, &[0.0, 0.01, 0.1]).len(), 1);
}

#[test]
fn shared_structure_beats_separate_fits() {
    let (col, _) = planted(array![[0.7, 0.1], [0.2, 0.5]], &[50, 50], true, 5);
    let cmp = compare_variants(&col, &cfg(3, 2)).unwrap();
    assert!(cmp.score(ModelVariant::Iid).unwrap() > cmp.sep_total);
    assert!(cmp.common_structure());
}

#[test]
fn unrelated_structures_prefer_separate_fits() {
    let (a, _) = planted(array![[0.8, 0.1], [0.1, 0.8]], &[60], true, 6);
    let (b, _) = planted(array![[0.1, 0.8], [0.8, 0.1]], &[60], true, 7);
    let col = NetworkCollection::new(vec![a.network(0).clone(), b.network(0).clone()], a.emission()).unwrap();
    let cmp = compare_variants(&col, &cfg(4, 3)).unwrap();
    assert!(!cmp.common_structure(), "{:?} vs {}", cmp.score(cmp.best_joint().variant), cmp.sep_total);
}

#[test]
fn single_network_joint_and_separate_scores_coincide() {
    let (col, _) = planted(array![[0.6, 0.1], [0.1, 0.5]], &[40], false, 8);
    let cmp = compare_variants_with(&col, &cfg(3, 0), &[ModelVariant::Iid]).unwrap();
    assert!((cmp.score(ModelVariant::Iid).unwrap() - cmp.sep_total).abs() < 1e-6);
}

#[test]
fn search_is_reproducible() {
    let (col, _) = planted(array![[0.6, 0.1], [0.1, 0.5]], &[30, 35], true, 9);
    let a = model_search(&col, ModelVariant::Pi, &cfg(4, 11)).unwrap();
    let b = model_search(&col, ModelVariant::Pi, &cfg(4, 11)).unwrap();
    assert_eq!(a.q_hat(), b.q_hat());
    assert_eq!(a.best.fit.params.support, b.best.fit.params.support);
    assert_eq!(a.best.bic_l.to_bits(), b.best.bic_l.to_bits());
}
