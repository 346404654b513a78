//! Clustering a collection into sub-collections with a shared structure.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BlockStats, ModelVariant};
use crate::network::{Network, NetworkCollection};
use crate::rng::derive;
use crate::selection::{fit_sep_sbm, model_search_with_sep, ScoredFit, SearchConfig, SepFit};
use crate::vem::Fit;

/// Per-network plug-in estimates computed from a joint fit's memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedEstimates {
    /// M x Q
    pub pi_tilde: Array2<f64>,
    /// One Q x Q matrix per network.
    pub alpha_tilde: Vec<Array2<f64>>,
}

/// π̃ and α̃ of every network. Entries off the support, and ratios with no
/// τ-weight behind them, are 0.
pub fn separated_estimates(fit: &Fit, collection: &NetworkCollection) -> SeparatedEstimates {
    let q = fit.n_blocks();
    let m_count = collection.len();
    let support = &fit.params.support;
    let mut pi_tilde = Array2::zeros((m_count, q));
    let mut alpha_tilde = Vec::with_capacity(m_count);
    for (m, net) in collection.networks().iter().enumerate() {
        let stats = BlockStats::compute(net, &fit.state.tau[m]);
        let n = net.n().max(1) as f64;
        let mut a = Array2::zeros((q, q));
        for k in 0..q {
            if support.contains(m, k) {
                pi_tilde[[m, k]] = stats.nq[k] / n;
            }
            for r in 0..q {
                if support.contains(m, k) && support.contains(m, r) && stats.n[[k, r]] > 0.0 {
                    a[[k, r]] = stats.e[[k, r]] / stats.n[[k, r]];
                }
            }
        }
        alpha_tilde.push(a);
    }
    SeparatedEstimates {
        pi_tilde,
        alpha_tilde,
    }
}

/// Block-weighted squared distance between the density-corrected connectivity
/// estimates of networks `a` and `b`.
pub fn dissimilarity(a: usize, b: usize, est: &SeparatedEstimates, delta: &[f64]) -> f64 {
    let q = est.pi_tilde.ncols();
    let p = &est.pi_tilde;
    let mut d = 0.0;
    for k in 0..q {
        let wk = p[[a, k]].max(p[[b, k]]);
        for r in 0..q {
            let wr = p[[a, r]].max(p[[b, r]]);
            let diff = est.alpha_tilde[a][[k, r]] / delta[a] - est.alpha_tilde[b][[k, r]] / delta[b];
            d += wk * wr * diff * diff;
        }
    }
    d
}

pub fn dissimilarity_matrix(est: &SeparatedEstimates, delta: &[f64]) -> Array2<f64> {
    let m = est.alpha_tilde.len();
    let mut d = Array2::zeros((m, m));
    for a in 0..m {
        for b in a + 1..m {
            let v = dissimilarity(a, b, est, delta);
            d[[a, b]] = v;
            d[[b, a]] = v;
        }
    }
    d
}

fn assign(d: &Array2<f64>, medoids: [usize; 2]) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(d.nrows());
    let mut cost = 0.0;
    let first = usize::from(medoids[1] < medoids[0]);
    for i in 0..d.nrows() {
        let (d0, d1) = (d[[i, medoids[0]]], d[[i, medoids[1]]]);
        let g = if d0 < d1 {
            0
        } else if d1 < d0 {
            1
        } else {
            first
        };
        labels.push(g);
        cost += d0.min(d1);
    }
    (labels, cost)
}

/// Two-medoid clustering: start from the most dissimilar pair, then swap a
/// medoid with a non-medoid while the total distance strictly decreases.
/// Ties go to the lower index. Returns one label (0 or 1) per item.
pub fn two_medoids(d: &Array2<f64>) -> Result<Vec<usize>> {
    let n = d.nrows();
    if n < 2 || d.ncols() != n {
        return Err(Error::Dimension(format!("need a square matrix with at least 2 rows, got {:?}", d.dim())));
    }
    let mut medoids = [0, 1];
    let mut far = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            if d[[a, b]] > far {
                far = d[[a, b]];
                medoids = [a, b];
            }
        }
    }
    let (mut labels, mut cost) = assign(d, medoids);
    loop {
        let mut best: Option<([usize; 2], Vec<usize>, f64)> = None;
        for slot in 0..2 {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids;
                trial[slot] = h;
                let (l, c) = assign(d, trial);
                let better = best.as_ref().map_or(c < cost - 1e-12, |b| c < b.2 - 1e-12);
                if better {
                    best = Some((trial, l, c));
                }
            }
        }
        match best {
            Some((m, l, c)) => {
                medoids = m;
                labels = l;
                cost = c;
            }
            None => break,
        }
    }
    // a medoid always belongs to its own group
    labels[medoids[0]] = 0;
    labels[medoids[1]] = 1;
    Ok(labels)
}

/// Sum of the group criteria.
pub fn partition_score(group_fits: &[ScoredFit]) -> f64 {
    group_fits.iter().map(|f| f.bic_l).sum()
}

/// One node of the recursive bisection.
#[derive(Debug, Clone, Serialize)]
pub struct SplitNode {
    /// Network indices in the original collection.
    pub members: Vec<usize>,
    pub q_hat: usize,
    /// Criterion of the joint fit on `members`.
    pub score: f64,
    /// Summed criterion of the two proposed halves, when a split was tried.
    pub split_score: Option<f64>,
    pub accepted: bool,
    pub children: Vec<SplitNode>,
}

impl SplitNode {
    pub fn score_delta(&self) -> Option<f64> {
        self.split_score.map(|s| s - self.score)
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    /// Disjoint groups covering every network, ordered by smallest member.
    pub groups: Vec<Vec<usize>>,
    pub group_fits: Vec<ScoredFit>,
    pub score: f64,
    pub trace: SplitNode,
}

impl Partition {
    /// Group index of every network.
    pub fn labels(&self) -> Vec<usize> {
        let m: usize = self.groups.iter().map(Vec::len).sum();
        let mut out = vec![0; m];
        for (g, members) in self.groups.iter().enumerate() {
            for &i in members {
                out[i] = g;
            }
        }
        out
    }
}

/// Content hash of a network, used to derive seeds that do not depend on
/// where the network sits in the collection.
pub fn fingerprint(net: &Network) -> u64 {
    const PRIME: u64 = 0x0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(net.n() as u64);
    eat(u64::from(net.directed()));
    for i in 0..net.n() {
        for &(j, x) in net.out_edges(i) {
            eat(((i as u64) << 32) | j as u64);
            eat(x.to_bits());
        }
    }
    for (idx, &obs) in net.observed_mask().iter().enumerate() {
        if !obs {
            eat(idx as u64 ^ 0xdead);
        }
    }
    h
}

struct Context<'a> {
    collection: &'a NetworkCollection,
    variant: ModelVariant,
    cfg: &'a SearchConfig,
    prints: Vec<u64>,
    sep: Vec<SepFit>,
}

impl Context<'_> {
    /// Members ordered by content hash (then index) so that fits do not depend
    /// on the collection order.
    fn canonical(&self, members: &[usize]) -> Vec<usize> {
        let mut v = members.to_vec();
        v.sort_by_key(|&m| (self.prints[m], m));
        v
    }

    fn fit_group(&self, members: &[usize]) -> Result<(Vec<usize>, ScoredFit)> {
        let order = self.canonical(members);
        let path: Vec<u64> = order.iter().map(|&m| self.prints[m]).collect();
        let cfg = self.cfg.with_seed(derive(self.cfg.seed, &path));
        let sub = self.collection.subset(&order);
        let sep: Vec<SepFit> = order.iter().map(|&m| self.sep[m].clone()).collect();
        let result = model_search_with_sep(&sub, self.variant, &cfg, &sep)?;
        Ok((order, result.best))
    }

    fn recurse(&self, order: Vec<usize>, fit: ScoredFit) -> Result<(Vec<(Vec<usize>, ScoredFit)>, SplitNode)> {
        let mut members = order.clone();
        members.sort_unstable();
        let mut node = SplitNode {
            members: members.clone(),
            q_hat: fit.n_blocks(),
            score: fit.bic_l,
            split_score: None,
            accepted: false,
            children: Vec::new(),
        };
        if order.len() < 2 {
            return Ok((vec![(members, fit)], node));
        }
        let sub = self.collection.subset(&order);
        let est = separated_estimates(&fit.fit, &sub);
        let d = dissimilarity_matrix(&est, &fit.fit.params.delta);
        let labels = two_medoids(&d)?;
        let halves: Vec<Vec<usize>> = (0..2)
            .map(|g| {
                order
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == g)
                    .map(|(&m, _)| m)
                    .collect()
            })
            .collect();
        let (a, b) = rayon::join(|| self.fit_group(&halves[0]), || self.fit_group(&halves[1]));
        let (a, b) = (a?, b?);
        let split = a.1.bic_l + b.1.bic_l;
        node.split_score = Some(split);
        if split > fit.bic_l {
            node.accepted = true;
            let (ra, rb) = rayon::join(|| self.recurse(a.0, a.1), || self.recurse(b.0, b.1));
            let (ra, rb) = (ra?, rb?);
            node.children = vec![ra.1, rb.1];
            let mut groups = ra.0;
            groups.extend(rb.0);
            Ok((groups, node))
        } else {
            Ok((vec![(members, fit)], node))
        }
    }
}

/// Recursive bisection of the collection: a split into two 2-medoid groups
/// is kept when the summed criterion of the halves exceeds that of the whole.
pub fn clust2coll(
    collection: &NetworkCollection,
    variant: ModelVariant,
    cfg: &SearchConfig,
) -> Result<Partition> {
    cfg.validate()?;
    let prints: Vec<u64> = collection.networks().iter().map(fingerprint).collect();
    let sep = prints
        .iter()
        .enumerate()
        .map(|(m, &p)| {
            let one = collection.subset(&[m]);
            let mut fits = fit_sep_sbm(&one, &cfg.with_seed(derive(cfg.seed, &[p])))?;
            let mut f = fits.pop().expect("one network");
            f.network = m;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let ctx = Context {
        collection,
        variant,
        cfg,
        prints,
        sep,
    };
    let all: Vec<usize> = (0..collection.len()).collect();
    let (order, fit) = ctx.fit_group(&all)?;
    let (mut groups, trace) = ctx.recurse(order, fit)?;
    groups.sort_by_key(|(m, _)| m[0]);
    let score = groups.iter().map(|(_, f)| f.bic_l).sum();
    let (groups, group_fits) = groups.into_iter().unzip();
    Ok(Partition {
        groups,
        group_fits,
        score,
        trace,
    })
}
