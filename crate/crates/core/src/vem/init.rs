use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::model::{ModelVariant, SupportMatrix, VariationalState};
use crate::network::{Network, NetworkCollection};
use crate::rng::{rng_at, Rng};

use super::Fit;

/// Eigenvectors of the symmetrised adjacency, sorted by decreasing |λ|.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    vectors: DMatrix<f64>,
}

impl SpectralEmbedding {
    pub fn new(net: &Network) -> Self {
        let n = net.n();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for &(j, x) in net.out_edges(i) {
                a[(i, j)] += x;
                a[(j, i)] += x;
            }
        }
        if n == 0 {
            return SpectralEmbedding { vectors: a };
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[y]
                .abs()
                .total_cmp(&eig.eigenvalues[x].abs())
                .then(x.cmp(&y))
        });
        let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
        SpectralEmbedding { vectors }
    }

    /// Hard labels from k-means on the leading `q` eigenvectors.
    pub fn labels(&self, q: usize, rng: &mut Rng) -> Vec<usize> {
        let n = self.vectors.nrows();
        let d = q.min(n);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..d).map(|k| self.vectors[(i, k)]).collect())
            .collect();
        kmeans(&points, q, rng)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations. Every cluster is kept
/// non-empty when there are at least `k` points.
pub(crate) fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = points.len();
    if k <= 1 || n == 0 {
        return vec![0; n];
    }
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dd = sq_dist(p, center);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        fill_empty_clusters(points, &centers, &mut labels, k);
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i]].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn fill_empty_clusters(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    if points.len() < k {
        return;
    }
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // move the point farthest from its center out of a cluster with >1 member
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centers[labels[a]])
                    .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                    .then(b.cmp(&a))
            })
            .expect("some cluster has more than one point");
        labels[far] = empty;
    }
}

/// Uniform random hard labels with every block used when n >= q.
pub fn random_labels(n: usize, q: usize, rng: &mut Rng) -> Vec<usize> {
    let mut z: Vec<usize> = (0..n).map(|i| if i < q { i } else { rng.gen_range(0..q) }).collect();
    z.shuffle(rng);
    z
}

/// Reorders blocks by decreasing expected degree so that independently fitted
/// networks start from comparable labels.
pub fn canonical_order(fit: &Fit) -> Vec<usize> {
    let q = fit.params.n_blocks();
    let m = 0;
    let weight: Vec<f64> = (0..q)
        .map(|a| {
            (0..q)
                .map(|b| fit.params.pi[[m, b]] * (fit.params.alpha[[a, b]] + fit.params.alpha[[b, a]]))
                .sum::<f64>()
        })
        .collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
    order
}

fn permute_columns(tau: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn(tau.dim(), |(i, k)| tau[[i, perm[k]]])
}

fn concat_state(sep_fits: &[Fit], perms: &[Vec<usize>]) -> VariationalState {
    VariationalState::new(
        sep_fits
            .iter()
            .zip(perms)
            .map(|(f, p)| permute_columns(&f.state.tau[0], p))
            .collect(),
    )
}

/// Joint starting points built from per-network fits with `q` blocks.
///
/// Returns `n_perm` states: the identity alignment first, then each network's
/// columns relabelled by an independent uniform permutation.
pub fn init_candidates(
    collection: &NetworkCollection,
    q: usize,
    sep_fits: &[Fit],
    n_perm: usize,
    seed: u64,
) -> Vec<VariationalState> {
    let m = collection.len();
    let identity: Vec<usize> = (0..q).collect();
    let mut out = Vec::with_capacity(n_perm);
    if n_perm == 0 {
        return out;
    }
    out.push(concat_state(sep_fits, &vec![identity.clone(); m]));
    for c in 1..n_perm {
        let mut rng = rng_at(seed, &[c as u64]);
        let perms: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let mut p = identity.clone();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        out.push(concat_state(sep_fits, &perms));
    }
    out
}

/// Distinct alignments of the per-network fits, up to a global relabelling.
///
/// Network 0 keeps its labels. All (Q!)^(M-1) combinations are returned when
/// there are at most `n_perm` of them, otherwise the identity plus random
/// draws. An extra candidate aligns every network to network 0 by matching
/// connectivity matrices.
pub(crate) fn alignment_candidates(sep_fits: &[Fit], q: usize, n_perm: usize, seed: u64) -> Vec<VariationalState> {
    let m = sep_fits.len();
    let identity: Vec<usize> = (0..q).collect();
    let mut combos: Vec<Vec<Vec<usize>>> = Vec::new();
    let all = all_permutations(q);
    let total = (all.len() as f64).powi(m as i32 - 1);
    if total <= n_perm as f64 {
        let mut idx = vec![0usize; m];
        loop {
            combos.push(idx.iter().map(|&k| all[k].clone()).collect());
            let mut pos = 1;
            while pos < m {
                idx[pos] += 1;
                if idx[pos] < all.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos >= m {
                break;
            }
        }
    } else {
        combos.push(vec![identity.clone(); m]);
        let mut rng = rng_at(seed, &[0xa11]);
        let mut tries = 0;
        while combos.len() < n_perm.max(1) && tries < 50 * n_perm.max(1) {
            tries += 1;
            let mut perms = vec![identity.clone()];
            for _ in 1..m {
                let mut p = identity.clone();
                p.shuffle(&mut rng);
                perms.push(p);
            }
            if !combos.contains(&perms) {
                combos.push(perms);
            }
        }
    }
    if q <= 6 && m > 1 {
        let aligned: Vec<Vec<usize>> = std::iter::once(identity.clone())
            .chain(sep_fits[1..].iter().map(|f| best_alpha_match(&sep_fits[0], f, &all)))
            .collect();
        if !combos.contains(&aligned) {
            combos.push(aligned);
        }
    }
    combos.iter().map(|p| concat_state(sep_fits, p)).collect()
}

fn best_alpha_match(reference: &Fit, other: &Fit, perms: &[Vec<usize>]) -> Vec<usize> {
    let a = &reference.params.alpha;
    let b = &other.params.alpha;
    let q = a.nrows();
    let mut best = (f64::INFINITY, perms[0].clone());
    for p in perms {
        let mut d = 0.0;
        for x in 0..q {
            for y in 0..q {
                let diff = a[[x, y]] - b[[p[x], p[y]]];
                d += diff * diff;
            }
        }
        if d < best.0 {
            best = (d, p.clone());
        }
    }
    best.1
}

pub(crate) fn all_permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..q).collect();
    heap_permute(q, &mut p, &mut out);
    out.sort();
    out
}

fn heap_permute(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(p.clone());
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, p, out);
        if k % 2 == 0 {
            p.swap(i, k - 1);
        } else {
            p.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, p, out);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Split,
    Merge,
}

/// A starting point together with the support it should be fitted under.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub state: VariationalState,
    pub support: SupportMatrix,
}

/// Neighbouring starting points with one block more (split) or one fewer (merge).
///
/// A split moves the upper half of a block's members, ranked by how much their
/// out-degree exceeds its expectation under the fit, into a new last column.
/// Members are pooled over networks; ties go to the lower (network, node).
pub fn split_merge_candidates(
    collection: &NetworkCollection,
    fit: &Fit,
    direction: Direction,
) -> Vec<Candidate> {
    match direction {
        Direction::Split => split_candidates(collection, fit),
        Direction::Merge => merge_candidates(fit),
    }
}

fn split_candidates(collection: &NetworkCollection, fit: &Fit) -> Vec<Candidate> {
    let params = &fit.params;
    let q = params.n_blocks();
    let emission = collection.emission();
    let labels = fit.state.memberships();
    let sizes = fit.state.block_sizes();
    let mut out = Vec::new();
    for block in 0..q {
        let mut members: Vec<(f64, usize, usize)> = Vec::new();
        for (m, net) in collection.networks().iter().enumerate() {
            if !params.support.contains(m, block) {
                continue;
            }
            let n = net.n();
            if n < 2 {
                continue;
            }
            let expected: f64 = params
                .support
                .blocks(m)
                .iter()
                .map(|&r| {
                    let others = sizes[m][r] - if r == block { 1.0 } else { 0.0 };
                    others.max(0.0) * params.rate(emission, m, block, r)
                })
                .sum();
            for i in 0..n {
                if labels[m][i] == block {
                    let resid = (net.out_degree(i) - expected) / (n - 1) as f64;
                    members.push((resid, m, i));
                }
            }
        }
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let upper = &members[..members.len() / 2];
        let mut tau: Vec<Array2<f64>> = fit
            .state
            .tau
            .iter()
            .map(|t| {
                let mut wide = Array2::zeros((t.nrows(), q + 1));
                wide.slice_mut(ndarray::s![.., ..q]).assign(t);
                wide
            })
            .collect();
        let mut moved = vec![false; collection.len()];
        for &(_, m, i) in upper {
            tau[m][[i, q]] = tau[m][[i, block]];
            tau[m][[i, block]] = 0.0;
            moved[m] = true;
        }
        let mut s = Array2::from_elem((collection.len(), q + 1), false);
        s.slice_mut(ndarray::s![.., ..q]).assign(params.support.as_array());
        for m in 0..collection.len() {
            s[[m, q]] = if params.variant.free_support() { moved[m] } else { true };
        }
        let support = SupportMatrix::new(s).expect("split keeps every row and column non-empty");
        out.push(Candidate {
            state: VariationalState::new(tau),
            support,
        });
    }
    out
}

fn merge_candidates(fit: &Fit) -> Vec<Candidate> {
    let q = fit.params.n_blocks();
    let mut out = Vec::new();
    if q < 2 {
        return out;
    }
    let s = fit.params.support.as_array();
    for a in 0..q {
        for b in a + 1..q {
            let keep: Vec<usize> = (0..q).filter(|&k| k != b).collect();
            let tau = fit
                .state
                .tau
                .iter()
                .map(|t| {
                    Array2::from_shape_fn((t.nrows(), q - 1), |(i, k)| {
                        let src = keep[k];
                        if src == a {
                            t[[i, a]] + t[[i, b]]
                        } else {
                            t[[i, src]]
                        }
                    })
                })
                .collect();
            let merged = Array2::from_shape_fn((s.nrows(), q - 1), |(m, k)| {
                let src = keep[k];
                if src == a {
                    s[[m, a]] || s[[m, b]]
                } else {
                    s[[m, src]]
                }
            });
            out.push(Candidate {
                state: VariationalState::new(tau),
                support: SupportMatrix::new(merged).expect("merging keeps rows non-empty"),
            });
        }
    }
    out
}

/// Full support for variants that require it, otherwise `support` unchanged.
pub(crate) fn support_for(variant: ModelVariant, support: &SupportMatrix) -> SupportMatrix {
    if variant.free_support() {
        support.clone()
    } else {
        SupportMatrix::full(support.n_networks(), support.n_blocks())
    }
}
