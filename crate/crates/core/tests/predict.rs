mod common;

use colsbm::model::{elbo, ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::{EmissionKind, NetworkCollection};
use colsbm::predict::{
    link_probabilities, mask_network, roc_auc, run_prediction_experiment, write_prediction_csv, MaskMode, MaskSpec,
    PredictConfig,
};
use colsbm::selection::SearchConfig;
use colsbm::vem::Fit;
use ndarray::{array, Array2};

use common::*;

fn fit_of(params: ColSbmParams, tau: Vec<Array2<f64>>) -> Fit {
    Fit {
        params,
        state: VariationalState::new(tau),
        elbo: 0.0,
        n_iterations: 1,
        converged: true,
        elbo_trace: vec![0.0],
    }
}

fn params(alpha: Array2<f64>, delta: Vec<f64>) -> ColSbmParams {
    let q = alpha.nrows();
    let m = delta.len();
    ColSbmParams {
        variant: if m > 1 { ModelVariant::Delta } else { ModelVariant::Iid },
        support: SupportMatrix::full(m, q),
        pi: Array2::from_elem((m, q), 1.0 / q as f64),
        alpha,
        delta,
    }
}

#[test]
fn one_block_predicts_the_density() {
    let fit = fit_of(params(array![[0.4]], vec![1.0, 0.5]), vec![Array2::ones((3, 1)), Array2::ones((4, 1))]);
    let p = link_probabilities(&fit, 1, EmissionKind::Bernoulli);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(p[[i, j]], if i == j { 0.0 } else { 0.2 });
        }
    }
}

#[test]
fn contraction_matches_hand_sums() {
    let alpha = array![[0.8, 0.1], [0.3, 0.5]];
    let tau = array![[1.0, 0.0], [0.25, 0.75], [0.5, 0.5]];
    let fit = fit_of(params(alpha.clone(), vec![1.0]), vec![tau.clone()]);
    let p = link_probabilities(&fit, 0, EmissionKind::Bernoulli);
    for i in 0..3 {
        for j in 0..3 {
            let mut want = 0.0;
            if i != j {
                for k in 0..2 {
                    for l in 0..2 {
                        want += tau[[i, k]] * tau[[j, l]] * alpha[[k, l]];
                    }
                }
            }
            assert!((p[[i, j]] - want).abs() < 1e-12);
        }
    }
    // (0, 1): 0.25 * 0.8 + 0.75 * 0.1
    assert!((p[[0, 1]] - 0.275).abs() < 1e-12);
    let hard = fit_of(params(alpha.clone(), vec![1.0]), vec![array![[1.0, 0.0], [0.0, 1.0]]]);
    assert_eq!(link_probabilities(&hard, 0, EmissionKind::Bernoulli)[[1, 0]], 0.3);
    let swapped = fit.permute_blocks(&[1, 0]);
    let q = link_probabilities(&swapped, 0, EmissionKind::Bernoulli);
    assert!((&p - &q).iter().all(|d| d.abs() < 1e-15));
}

#[test]
fn masking_counts() {
    let mut r = rng(3);
    for directed in [true, false] {
        let net = random_network(20, 0.3, directed, &mut r);
        let links = net.total_weight().round() as usize;
        let dyads = net.n_possible_dyads();
        let spec = |k: f64, mode| MaskSpec { target_network: 0, fraction: k, mode, seed: 1 };

        let (same, truth) = mask_network(&net, &spec(0.0, MaskMode::Links)).unwrap();
        assert!(truth.is_empty());
        assert_eq!(same.adjacency(), net.adjacency());

        let (all, truth) = mask_network(&net, &spec(1.0, MaskMode::Dyads)).unwrap();
        assert_eq!(truth.len(), dyads);
        assert_eq!(all.n_observed_dyads(), 0);

        let k = 0.4;
        let (masked, truth) = mask_network(&net, &spec(k, MaskMode::Links)).unwrap();
        let removed = (k * links as f64).floor() as usize;
        assert_eq!(truth.iter().filter(|h| h.value > 0.0).count(), removed);
        assert_eq!(truth.len(), removed + dyads - links);
        let left = masked.total_weight();
        assert_eq!(left as usize, links - removed);
        for h in &truth {
            assert_eq!(masked.value(h.i, h.j), 0.0);
            if !directed {
                assert_eq!(masked.value(h.j, h.i), 0.0);
            }
        }
    }
}

#[test]
fn masked_bound_drops_exactly_the_hidden_terms() {
    let mut r = rng(8);
    let net = random_network(12, 0.35, true, &mut r);
    let col = NetworkCollection::new(vec![net.clone()], EmissionKind::Bernoulli).unwrap();
    let support = SupportMatrix::full(1, 2);
    let tau = random_state(&col, &support, &mut r);
    let p = random_params(ModelVariant::Iid, &support, &mut r);
    let (masked, truth) =
        mask_network(&net, &MaskSpec { target_network: 0, fraction: 0.2, mode: MaskMode::Dyads, seed: 4 }).unwrap();
    let col_m = NetworkCollection::new(vec![masked], EmissionKind::Bernoulli).unwrap();
    let full = elbo(&col, &tau, &p).unwrap();
    let part = elbo(&col_m, &tau, &p).unwrap();
    let t = &tau.tau[0];
    let dropped: f64 = truth
        .iter()
        .map(|h| {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    let a = p.alpha[[k, l]];
                    s += t[[h.i, k]] * t[[h.j, l]] * if h.value > 0.0 { a.ln() } else { (1.0 - a).ln() };
                }
            }
            s
        })
        .sum();
    assert!((part - (full - dropped)).abs() < 1e-9);
}

#[test]
fn auc_edge_cases() {
    assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
    assert_eq!(roc_auc(&[0.3; 5], &[true, false, false, true, false]).unwrap(), 0.5);
}

#[test]
fn experiment_rows_and_csv() {
    let (col, _) = planted(array![[0.7, 0.1], [0.1, 0.6]], &[30, 30], false, 2);
    let cfg = PredictConfig {
        target_network: 1,
        mode: MaskMode::Links,
        k_grid: vec![0.2, 0.6],
        replicates: 2,
        models: vec![ModelVariant::Iid, ModelVariant::Sep],
        search: SearchConfig { q_max: 3, ..SearchConfig::default() },
        seed: 5,
    };
    let rows = run_prediction_experiment(&col, &cfg).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.auc) && r.q_hat >= 1));
    let mut buf = Vec::new();
    write_prediction_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("replicate,K,mode,model,auc,q_hat\n"));
    assert_eq!(text.lines().count(), rows.len() + 1);
    assert_eq!(rows, run_prediction_experiment(&col, &cfg).unwrap());
}
