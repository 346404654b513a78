use ndarray::Array2;

use crate::error::Result;
use crate::model::{
    BlockStats, ColSbmParams, ModelVariant, SufficientStats, SupportMatrix, VariationalState,
};
use crate::network::{EmissionKind, NetworkCollection};

/// Expected block sizes below this are treated as vanishing.
const EMPTY_BLOCK: f64 = 1e-3;
const DENOM_EPS: f64 = 1e-12;
const ALTERNATING_TOL: f64 = 1e-8;
const ALTERNATING_MAX: usize = 100;
const GOLDEN_SWEEPS: usize = 20;
const GOLDEN_STEPS: usize = 48;

/// Maximises the bound in θ for a fixed τ.
///
/// `previous` supplies starting values for the alternating density/connectivity
/// updates and the fallback for connectivity entries with no observed dyads.
pub fn m_step(
    collection: &NetworkCollection,
    state: &VariationalState,
    variant: ModelVariant,
    support: &SupportMatrix,
    previous: &ColSbmParams,
) -> Result<ColSbmParams> {
    let stats = SufficientStats::compute(collection, state);
    Ok(m_step_from_stats(
        &stats,
        collection,
        variant,
        support,
        previous,
        false,
    ))
}

pub(crate) fn m_step_from_stats(
    stats: &SufficientStats,
    collection: &NetworkCollection,
    variant: ModelVariant,
    support: &SupportMatrix,
    previous: &ColSbmParams,
    strict_density: bool,
) -> ColSbmParams {
    let emission = collection.emission();
    let sizes = collection.sizes();
    let pi = estimate_pi(&stats.per_network, &sizes, variant, support);
    let (alpha, delta) = if variant.has_density() {
        let (mut alpha, mut delta) =
            alternating_density(&stats.per_network, support, previous, emission);
        if strict_density && emission == EmissionKind::Bernoulli {
            golden_refine(&stats.per_network, support, &mut alpha, &mut delta);
        }
        (alpha, delta)
    } else {
        (
            pooled_alpha(&stats.per_network, support, previous, emission),
            vec![1.0; sizes.len()],
        )
    };
    ColSbmParams {
        variant,
        support: support.clone(),
        pi,
        alpha,
        delta,
    }
}

fn estimate_pi(
    stats: &[BlockStats],
    sizes: &[usize],
    variant: ModelVariant,
    support: &SupportMatrix,
) -> Array2<f64> {
    let m_count = stats.len();
    let q = support.n_blocks();
    let mut pi = Array2::zeros((m_count, q));
    if variant.per_network_pi() {
        for m in 0..m_count {
            let n = sizes[m].max(1) as f64;
            let blocks = support.blocks(m);
            for &k in &blocks {
                let nq = stats[m].nq[k];
                pi[[m, k]] = if nq < EMPTY_BLOCK { EMPTY_BLOCK / n } else { nq / n };
            }
            let s: f64 = blocks.iter().map(|&k| pi[[m, k]]).sum();
            for &k in &blocks {
                pi[[m, k]] /= s;
            }
        }
    } else {
        let total = sizes.iter().sum::<usize>().max(1) as f64;
        let mut pooled = vec![0.0; q];
        for (k, p) in pooled.iter_mut().enumerate() {
            let nq: f64 = stats.iter().map(|s| s.nq[k]).sum();
            *p = if nq < EMPTY_BLOCK { EMPTY_BLOCK / total } else { nq / total };
        }
        let s: f64 = pooled.iter().sum();
        for m in 0..m_count {
            for k in 0..q {
                pi[[m, k]] = pooled[k] / s;
            }
        }
    }
    pi
}

fn clamp_alpha(a: f64, emission: EmissionKind) -> f64 {
    emission.clamp_rate(a)
}

fn pooled_alpha(
    stats: &[BlockStats],
    support: &SupportMatrix,
    previous: &ColSbmParams,
    emission: EmissionKind,
) -> Array2<f64> {
    let q = support.n_blocks();
    let mut alpha = Array2::zeros((q, q));
    for a in 0..q {
        for b in 0..q {
            let (mut num, mut den) = (0.0, 0.0);
            for (m, s) in stats.iter().enumerate() {
                if support.contains(m, a) && support.contains(m, b) {
                    num += s.e[[a, b]];
                    den += s.n[[a, b]];
                }
            }
            alpha[[a, b]] = if den > DENOM_EPS {
                clamp_alpha(num / den, emission)
            } else {
                fallback_alpha(previous, a, b, emission)
            };
        }
    }
    alpha
}

fn fallback_alpha(previous: &ColSbmParams, a: usize, b: usize, emission: EmissionKind) -> f64 {
    if a < previous.n_blocks() && b < previous.n_blocks() {
        clamp_alpha(previous.alpha[[a, b]], emission)
    } else {
        clamp_alpha(0.5, emission)
    }
}

/// Alternating closed-form updates of α and δ (exact coordinate maximisers
/// under Poisson emissions; clipped moment updates under Bernoulli).
fn alternating_density(
    stats: &[BlockStats],
    support: &SupportMatrix,
    previous: &ColSbmParams,
    emission: EmissionKind,
) -> (Array2<f64>, Vec<f64>) {
    let q = support.n_blocks();
    let m_count = stats.len();
    let mut alpha = Array2::from_shape_fn((q, q), |(a, b)| fallback_alpha(previous, a, b, emission));
    let mut delta: Vec<f64> = if previous.delta.len() == m_count {
        previous.delta.iter().map(|d| d.max(1e-9)).collect()
    } else {
        vec![1.0; m_count]
    };
    for _ in 0..ALTERNATING_MAX {
        let mut change: f64 = 0.0;
        for a in 0..q {
            for b in 0..q {
                let (mut num, mut den) = (0.0, 0.0);
                for (m, s) in stats.iter().enumerate() {
                    if support.contains(m, a) && support.contains(m, b) {
                        num += s.e[[a, b]];
                        den += s.n[[a, b]] * delta[m];
                    }
                }
                if den > DENOM_EPS {
                    let new = (num / den).max(1e-12);
                    change = change.max(rel_change(alpha[[a, b]], new));
                    alpha[[a, b]] = new;
                }
            }
        }
        for (m, s) in stats.iter().enumerate() {
            let blocks = support.blocks(m);
            let (mut num, mut den) = (0.0, 0.0);
            for &a in &blocks {
                for &b in &blocks {
                    num += s.e[[a, b]];
                    den += s.n[[a, b]] * alpha[[a, b]];
                }
            }
            if den > DENOM_EPS {
                let new = (num / den).max(1e-9);
                change = change.max(rel_change(delta[m], new));
                delta[m] = new;
            }
        }
        let scale = delta[0];
        for d in delta.iter_mut() {
            *d /= scale;
        }
        alpha.mapv_inplace(|a| a * scale);
        if change < ALTERNATING_TOL {
            break;
        }
    }
    if emission == EmissionKind::Poisson {
        alpha.mapv_inplace(|a| a.max(1e-9));
    } else {
        // keep α itself inside (0, 1); products are clipped when rates are evaluated
        alpha.mapv_inplace(|a| a.clamp(1e-9, 1.0 - 1e-9));
    }
    delta[0] = 1.0;
    (alpha, delta)
}

fn rel_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-12)
}

fn bernoulli_objective(stats: &[BlockStats], support: &SupportMatrix, alpha: &Array2<f64>, delta: &[f64]) -> f64 {
    let mut f = 0.0;
    for (m, s) in stats.iter().enumerate() {
        let blocks = support.blocks(m);
        for &a in &blocks {
            for &b in &blocks {
                let r = EmissionKind::Bernoulli.clamp_rate(delta[m] * alpha[[a, b]]);
                f += s.e[[a, b]] * r.ln() + (s.n[[a, b]] - s.e[[a, b]]) * (1.0 - r).ln();
            }
        }
    }
    f
}

fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Projected coordinate ascent on the Bernoulli objective, each coordinate
/// maximised by golden-section search. A coordinate move is kept only if it
/// does not lower the objective.
fn golden_refine(stats: &[BlockStats], support: &SupportMatrix, alpha: &mut Array2<f64>, delta: &mut [f64]) {
    let q = support.n_blocks();
    let mut current = bernoulli_objective(stats, support, alpha, delta);
    for _ in 0..GOLDEN_SWEEPS {
        let start = current;
        for m in 1..delta.len() {
            let blocks = support.blocks(m);
            let amax = blocks
                .iter()
                .flat_map(|&a| blocks.iter().map(move |&b| (a, b)))
                .map(|(a, b)| alpha[[a, b]])
                .fold(1e-9, f64::max);
            let old = delta[m];
            let best = golden_max(1e-9, 1.0 / amax, |d| {
                let mut trial = delta.to_vec();
                trial[m] = d;
                bernoulli_objective(stats, support, alpha, &trial)
            });
            delta[m] = best;
            let val = bernoulli_objective(stats, support, alpha, delta);
            if val < current {
                delta[m] = old;
            } else {
                current = val;
            }
        }
        for a in 0..q {
            for b in 0..q {
                if !support.co_occur(a, b) {
                    continue;
                }
                let dmax = (0..delta.len())
                    .filter(|&m| support.contains(m, a) && support.contains(m, b))
                    .map(|m| delta[m])
                    .fold(1e-9, f64::max);
                let old = alpha[[a, b]];
                let best = golden_max(1e-9, (1.0 / dmax).min(1.0 - 1e-9), |x| {
                    let mut trial = alpha.clone();
                    trial[[a, b]] = x;
                    bernoulli_objective(stats, support, &trial, delta)
                });
                alpha[[a, b]] = best;
                let val = bernoulli_objective(stats, support, alpha, delta);
                if val < current {
                    alpha[[a, b]] = old;
                } else {
                    current = val;
                }
            }
        }
        if (current - start).abs() <= 1e-10 * start.abs().max(1.0) {
            break;
        }
    }
}
