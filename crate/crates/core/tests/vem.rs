mod common;

use colsbm::model::{elbo, exact_loglik_oracle, ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::{EmissionKind, Network, NetworkCollection};
use colsbm::selection::{fit_sep_sbm, SearchConfig};
use colsbm::sim::mean_ari;
use colsbm::vem::{
    init_candidates, m_step, run_vem, split_merge_candidates, uniform_state, ve_step, Direction, VemConfig,
};
use ndarray::{array, Array2};

use common::*;

#[test]
fn one_block_converges_at_once_to_the_exact_likelihood() {
    let mut r = rng(1);
    for variant in ModelVariant::JOINT {
        let col = random_collection(&[7, 6], true, &mut r);
        let support = SupportMatrix::full(2, 1);
        let tau = uniform_state(&col, &support);
        let fit = run_vem(&col, variant, &support, &tau, &VemConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.n_iterations <= 2, "{variant:?}: {} iterations", fit.n_iterations);
        let exact = exact_loglik_oracle(&col, &fit.params).unwrap();
        assert!((fit.elbo - exact).abs() < 1e-9, "{} vs {exact}", fit.elbo);
    }
}

#[test]
fn planted_two_blocks_are_recovered() {
    let (col, z) = planted(array![[0.9, 0.1], [0.1, 0.9]], &[20, 20], true, 4);
    let cfg = SearchConfig::default().with_seed(2);
    let sep = fit_sep_sbm(&col, &SearchConfig { q_max: 2, ..cfg.clone() }).unwrap();
    let fits: Vec<_> = sep.iter().map(|s| s.at(2).unwrap().fit.clone()).collect();
    let best = init_candidates(&col, 2, &fits, 4, 3)
        .iter()
        .map(|t| run_vem(&col, ModelVariant::Iid, &SupportMatrix::full(2, 2), t, &cfg.vem).unwrap())
        .max_by(|a, b| a.elbo.total_cmp(&b.elbo))
        .unwrap();
    // this α is invariant under swapping the two blocks, so the labels of one
    // network relative to the other are not identifiable; compare per network
    assert_eq!(mean_ari(&best.state.memberships(), &z).unwrap(), 1.0);
}

#[test]
fn bound_trace_never_decreases() {
    let mut r = rng(7);
    for k in 0..50 {
        let variant = [ModelVariant::Iid, ModelVariant::Pi, ModelVariant::Delta, ModelVariant::DeltaPi][k % 4];
        let directed = k % 3 != 0;
        let col = random_collection(&[12, 9, 15][..1 + k % 3], directed, &mut r);
        let q = 2 + k % 3;
        let support = SupportMatrix::full(col.len(), q);
        let tau = random_state(&col, &support, &mut r);
        let cfg = VemConfig { seed: k as u64, ..VemConfig::default() };
        let fit = run_vem(&col, variant, &support, &tau, &cfg).unwrap();
        for w in fit.elbo_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "instance {k}: {} -> {}", w[0], w[1]);
        }
    }
}

fn perturbed(p: &ColSbmParams, f: impl Fn(&mut ColSbmParams)) -> ColSbmParams {
    let mut out = p.clone();
    f(&mut out);
    out
}

#[test]
fn m_step_is_stationary() {
    let mut r = rng(11);
    let h = 1e-5;
    for variant in [ModelVariant::Iid, ModelVariant::Pi] {
        for _ in 0..5 {
            let col = random_collection(&[15, 12], true, &mut r);
            let support = SupportMatrix::full(2, 3);
            let tau = random_state(&col, &support, &mut r);
            let init = random_params(variant, &support, &mut r);
            let p = m_step(&col, &tau, variant, &support, &init).unwrap();
            let f = |q: &ColSbmParams| elbo(&col, &tau, q).unwrap();
            let mut worst: f64 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let up = perturbed(&p, |x| x.alpha[[a, b]] += h);
                    let down = perturbed(&p, |x| x.alpha[[a, b]] -= h);
                    worst = worst.max(((f(&up) - f(&down)) / (2.0 * h)).abs());
                }
            }
            // feasible directions e_q - e_last on the simplex
            let rows: Vec<usize> = if variant == ModelVariant::Pi { vec![0, 1] } else { vec![0] };
            for q in 0..2 {
                let shift = |x: &mut ColSbmParams, s: f64| {
                    for m in 0..2 {
                        if rows.contains(&m) || variant == ModelVariant::Iid {
                            x.pi[[m, q]] += s;
                            x.pi[[m, 2]] -= s;
                        }
                    }
                };
                for &m in &rows {
                    let only = |x: &mut ColSbmParams, s: f64| {
                        if variant == ModelVariant::Pi {
                            x.pi[[m, q]] += s;
                            x.pi[[m, 2]] -= s;
                        } else {
                            shift(x, s);
                        }
                    };
                    let up = perturbed(&p, |x| only(x, h));
                    let down = perturbed(&p, |x| only(x, -h));
                    worst = worst.max(((f(&up) - f(&down)) / (2.0 * h)).abs());
                }
            }
            assert!(worst < 1e-4, "{variant:?}: gradient {worst}");
        }
    }
}

/// p(Z_i = k | X) by summing over all 2^n labelings.
fn exact_posterior(net: &Network, params: &ColSbmParams) -> Array2<f64> {
    let n = net.n();
    let q = params.n_blocks();
    let mut post = Array2::zeros((n, q));
    let mut logs = Vec::new();
    let mut labelings = Vec::new();
    for code in 0..q.pow(n as u32) {
        let mut c = code;
        let z: Vec<usize> = (0..n)
            .map(|_| {
                let k = c % q;
                c /= q;
                k
            })
            .collect();
        let mut l: f64 = z.iter().map(|&k| params.pi[[0, k]].ln()).sum();
        for i in 0..n {
            for j in 0..n {
                if i == j || (!net.directed() && j < i) {
                    continue;
                }
                let a = params.alpha[[z[i], z[j]]];
                l += if net.value(i, j) > 0.0 { a.ln() } else { (1.0 - a).ln() };
            }
        }
        logs.push(l);
        labelings.push(z);
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - mx).exp()).sum();
    for (l, z) in logs.iter().zip(&labelings) {
        let w = (l - mx).exp() / total;
        for (i, &k) in z.iter().enumerate() {
            post[[i, k]] += w;
        }
    }
    post
}

#[test]
fn two_cliques_match_the_enumerated_posterior() {
    // cliques of 5 and 3 nodes; unequal sizes and densities rule out the
    // label-swapped mode
    let n = 8;
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j && (i < 5) == (j < 5) {
                a[[i, j]] = 1.0;
            }
        }
    }
    let net = Network::new(a, false).unwrap();
    let col = NetworkCollection::new(vec![net.clone()], EmissionKind::Bernoulli).unwrap();
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(1, 2),
        pi: array![[0.7, 0.3]],
        alpha: array![[0.95, 0.05], [0.05, 0.6]],
        delta: vec![1.0],
    };
    let init = Array2::from_shape_fn((n, 2), |(i, k)| if (i < 5) == (k == 0) { 0.6 } else { 0.4 });
    let tau = ve_step(&net, 0, &params, col.emission(), &init, &VemConfig::default());
    let exact = exact_posterior(&net, &params);
    for i in 0..n {
        let k = if i < 5 { 0 } else { 1 };
        assert!(tau[[i, k]] > 0.99);
        assert!((tau[[i, k]] - exact[[i, k]]).abs() < 1e-2, "node {i}: {} vs {}", tau[[i, k]], exact[[i, k]]);
    }
}

#[test]
fn one_block_ve_step_is_all_ones() {
    let mut r = rng(3);
    let net = random_network(9, 0.3, true, &mut r);
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(1, 1),
        pi: array![[1.0]],
        alpha: array![[0.3]],
        delta: vec![1.0],
    };
    let tau = ve_step(&net, 0, &params, EmissionKind::Bernoulli, &Array2::from_elem((9, 1), 0.2), &VemConfig::default());
    assert!(tau.iter().all(|&x| x == 1.0));
}

#[test]
fn uniform_tau_is_a_fixed_point_under_symmetric_parameters() {
    let mut r = rng(5);
    let net = random_network(10, 0.4, true, &mut r);
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(1, 3),
        pi: Array2::from_elem((1, 3), 1.0 / 3.0),
        alpha: Array2::from_elem((3, 3), 0.4),
        delta: vec![1.0],
    };
    let init = Array2::from_elem((10, 3), 1.0 / 3.0);
    let tau = ve_step(&net, 0, &params, EmissionKind::Bernoulli, &init, &VemConfig::default());
    assert!(tau.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn single_network_variants_coincide() {
    let mut r = rng(8);
    let col = random_collection(&[25], false, &mut r);
    let support = SupportMatrix::full(1, 2);
    let tau = random_state(&col, &support, &mut r);
    let cfg = VemConfig::default();
    let iid = run_vem(&col, ModelVariant::Iid, &support, &tau, &cfg).unwrap();
    for v in [ModelVariant::Pi, ModelVariant::Delta, ModelVariant::DeltaPi] {
        let other = run_vem(&col, v, &support, &tau, &cfg).unwrap();
        assert!((other.elbo - iid.elbo).abs() < 1e-6, "{v:?}: {} vs {}", other.elbo, iid.elbo);
    }
}

#[test]
fn vem_is_identical_across_thread_counts() {
    let (col, _) = planted(array![[0.6, 0.1], [0.2, 0.5]], &[30, 25, 20], true, 9);
    let cfg = SearchConfig { q_max: 3, ..SearchConfig::default() }.with_seed(6);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| colsbm::selection::model_search(&col, ModelVariant::Pi, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.best.fit, b.best.fit);
    assert_eq!(a.best.bic_l.to_bits(), b.best.bic_l.to_bits());
}

#[test]
fn init_candidate_structure() {
    let (col, _) = planted(array![[0.7, 0.1, 0.1], [0.1, 0.6, 0.1], [0.1, 0.1, 0.5]], &[20, 24], true, 1);
    let sep = fit_sep_sbm(&col, &SearchConfig { q_max: 3, ..SearchConfig::default() }).unwrap();
    let fits: Vec<_> = sep.iter().map(|s| s.at(3).unwrap().fit.clone()).collect();
    let one = init_candidates(&col, 3, &fits, 1, 0);
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].tau[0], fits[0].state.tau[0]);
    assert_eq!(one[0].tau[1], fits[1].state.tau[0]);
    let ten = init_candidates(&col, 3, &fits, 10, 0);
    assert_eq!(ten.len(), 10);
    for st in &ten {
        for m in 0..2 {
            // every candidate is a column permutation of the single-network fit
            let orig = &fits[m].state.tau[0];
            let mut cols: Vec<Vec<u64>> = (0..3).map(|k| orig.column(k).iter().map(|x| x.to_bits()).collect()).collect();
            let mut got: Vec<Vec<u64>> = (0..3).map(|k| st.tau[m].column(k).iter().map(|x| x.to_bits()).collect()).collect();
            cols.sort();
            got.sort();
            assert_eq!(cols, got);
        }
    }
    let sep1 = fit_sep_sbm(&col, &SearchConfig { q_max: 1, ..SearchConfig::default() }).unwrap();
    let fits1: Vec<_> = sep1.iter().map(|s| s.at(1).unwrap().fit.clone()).collect();
    let c1 = init_candidates(&col, 1, &fits1, 5, 0);
    assert!(c1.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn split_and_merge_conserve_mass() {
    let (col, _) = planted(array![[0.7, 0.1], [0.1, 0.6]], &[20, 20], true, 2);
    let support = SupportMatrix::full(2, 2);
    let mut r = rng(4);
    let tau = random_state(&col, &support, &mut r);
    let fit = run_vem(&col, ModelVariant::Iid, &support, &tau, &VemConfig::default()).unwrap();
    let merged = split_merge_candidates(&col, &fit, Direction::Merge);
    assert_eq!(merged.len(), 1);
    for t in &merged[0].state.tau {
        assert_eq!(t.ncols(), 1);
        assert!(t.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }
    let splits = split_merge_candidates(&col, &fit, Direction::Split);
    assert!(!splits.is_empty());
    for c in &splits {
        for (m, t) in c.state.tau.iter().enumerate() {
            assert_eq!(t.ncols(), 3);
            for i in 0..t.nrows() {
                assert!((t.row(i).sum() - 1.0).abs() < 1e-12);
            }
            // the new column plus the block it came from reproduce the parent column
            let orig = &fit.state.tau[m];
            let src = (0..2)
                .find(|&k| (0..t.nrows()).all(|i| (t[[i, k]] + t[[i, 2]] - orig[[i, k]]).abs() < 1e-12))
                .expect("split source");
            let other = 1 - src;
            assert!((0..t.nrows()).all(|i| (t[[i, other]] - orig[[i, other]]).abs() < 1e-12));
        }
    }
}

#[test]
fn states_stay_row_stochastic() {
    let mut r = rng(12);
    let col = random_collection(&[14, 11], true, &mut r);
    let support = SupportMatrix::from_rows(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
    let tau = random_state(&col, &support, &mut r);
    let fit = run_vem(&col, ModelVariant::Pi, &support, &tau, &VemConfig::default()).unwrap();
    fit.state.validate(&col, &support).unwrap();
    let _ = VariationalState::new(fit.state.tau.clone());
}
