mod common;

use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::EmissionKind;
use colsbm::sim::scenario::table_s1_collection;
use colsbm::sim::{ari, rec_support, rmse_alpha, run_scenario, simulate, Scenario, ScenarioConfig};
use colsbm::vem::{run_vem, VemConfig};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

/// Adjusted Rand index from the pair-counting definition.
fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            total += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / total;
    let max = (only_a + only_b) / 2.0;
    (both - expected) / (max - expected)
}

#[test]
fn ari_examples() {
    let z = [0, 0, 1, 1, 2, 2];
    assert_eq!(ari(&z, &z).unwrap(), 1.0);
    assert_eq!(ari(&z, &[2, 2, 0, 0, 1, 1]).unwrap(), 1.0);
    let v = ari(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
    assert!((v - ari_by_pairs(&[1, 1, 2, 2], &[1, 2, 1, 2])).abs() < 1e-12);
    assert!((v + 0.5).abs() < 1e-12);
}

#[test]
fn rmse_and_rec_examples() {
    let a = array![[0.5, 0.1], [0.2, 0.4]];
    assert_eq!(rmse_alpha(&a, &a).unwrap(), 0.0);
    let swapped = array![[0.4, 0.2], [0.1, 0.5]];
    assert_eq!(rmse_alpha(&swapped, &a).unwrap(), 0.0);
    let off = array![[0.6, 0.1], [0.2, 0.4]];
    assert!((rmse_alpha(&off, &a).unwrap() - 0.05).abs() < 1e-12);

    let s = SupportMatrix::from_rows(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
    assert!(rec_support(&s, &s).unwrap());
    assert!(rec_support(&s.permute_blocks(&[2, 0, 1]), &s).unwrap());
    let flipped = SupportMatrix::from_rows(&[&[1, 1, 1], &[0, 1, 1]]).unwrap();
    assert!(!rec_support(&flipped, &s).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ari_ignores_label_names(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(3..30);
        let a: Vec<usize> = (0..n).map(|_| r.gen_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| r.gen_range(0..3)).collect();
        let mut relabel: Vec<usize> = (0..4).collect();
        relabel.shuffle(&mut r);
        let a2: Vec<usize> = a.iter().map(|&x| relabel[x]).collect();
        let base = ari(&a, &b).unwrap();
        prop_assert!((base - ari(&a2, &b).unwrap()).abs() < 1e-12);
        prop_assert!((base - ari(&b, &a2).unwrap()).abs() < 1e-12);
        let distinct = |z: &[usize]| { let mut v = z.to_vec(); v.sort(); v.dedup(); v.len() };
        if distinct(&a) > 1 || distinct(&b) > 1 {
            prop_assert!((base - ari_by_pairs(&a, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn rmse_is_a_pseudometric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = r.gen_range(1..=4);
        let mut draw = || Array2::from_shape_fn((q, q), |_| r.gen_range(0.0..1.0));
        let (a, b, c) = (draw(), draw(), draw());
        let d = |x: &Array2<f64>, y: &Array2<f64>| rmse_alpha(x, y).unwrap();
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut r);
        let pa = Array2::from_shape_fn((q, q), |(i, j)| a[[perm[i], perm[j]]]);
        prop_assert!(d(&a, &pa) < 1e-12);
    }
}

#[test]
fn expected_edge_count() {
    let params = ColSbmParams {
        variant: ModelVariant::Delta,
        support: SupportMatrix::full(2, 2),
        pi: array![[0.3, 0.7], [0.3, 0.7]],
        alpha: array![[0.6, 0.2], [0.1, 0.3]],
        delta: vec![1.0, 0.5],
    };
    let sizes = [15, 12];
    let draws = 200;
    for m in 0..2 {
        let n = sizes[m] as f64;
        let mut mean_rate = 0.0;
        for q in 0..2 {
            for l in 0..2 {
                mean_rate += params.pi[[m, q]] * params.pi[[m, l]] * params.delta[m] * params.alpha[[q, l]];
            }
        }
        let expected = n * (n - 1.0) * mean_rate;
        let counts: Vec<f64> = (0..draws)
            .map(|s| simulate(&params, &sizes, true, EmissionKind::Bernoulli, s).unwrap().0.network(m).total_weight())
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let sd = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
        assert!((mean - expected).abs() < 2.0 * sd / (draws as f64).sqrt(), "network {m}: {mean} vs {expected}");
    }
}

#[test]
fn table_s1_networks_each_miss_a_block_the_other_has() {
    for s in 0..10 {
        let (col, truth) = table_s1_collection(0.1, s).unwrap();
        assert_eq!(col.sizes(), vec![120, 120]);
        let sup = &truth.params.support;
        let only0 = (0..4).any(|q| sup.contains(0, q) && !sup.contains(1, q));
        let only1 = (0..4).any(|q| sup.contains(1, q) && !sup.contains(0, q));
        assert!(only0 && only1);
        for m in 0..2 {
            assert!(truth.memberships[m].iter().all(|&z| sup.contains(m, z)));
        }
    }
}

#[test]
fn true_start_beats_random_starts() {
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(2, 3),
        pi: Array2::from_elem((2, 3), 1.0 / 3.0),
        alpha: array![[0.6, 0.1, 0.2], [0.1, 0.5, 0.1], [0.3, 0.1, 0.4]],
        delta: vec![1.0, 1.0],
    };
    let mut r = rng(1);
    for s in 0..20 {
        let (col, truth) = simulate(&params, &[40, 40], true, EmissionKind::Bernoulli, s).unwrap();
        let cfg = VemConfig::default();
        let oracle = run_vem(&col, ModelVariant::Iid, &params.support, &VariationalState::from_labels(&truth.memberships, 3), &cfg).unwrap();
        let random = run_vem(&col, ModelVariant::Iid, &params.support, &random_state(&col, &params.support, &mut r), &cfg).unwrap();
        assert!(oracle.elbo >= random.elbo - 1e-6 * random.elbo.abs(), "instance {s}: {} < {}", oracle.elbo, random.elbo);
    }
}

#[test]
fn scenarios_are_deterministic_and_complete() {
    let mut cfg = ScenarioConfig::new(Scenario::TableS2, 17);
    cfg.grid = vec![0.0, 0.28];
    cfg.replicates = 2;
    cfg.search.q_max = 4;
    let a = run_scenario(&cfg).unwrap();
    assert_eq!(a.rows.len(), 4);
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    let mut tidy = Vec::new();
    a.write_tidy_csv(&mut tidy).unwrap();
    assert_eq!(String::from_utf8(tidy).unwrap().lines().count(), 5);
    let mut summary = Vec::new();
    a.write_summary_csv(&mut summary).unwrap();
    assert_eq!(String::from_utf8(summary).unwrap().lines().count(), 3);
}
