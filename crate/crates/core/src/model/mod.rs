//! Model core: domain types, emission densities, sufficient statistics,
//! the variational bound and an exhaustive likelihood for tiny instances.

mod bound;
mod count;
mod emission;
mod oracle;
mod stats;

pub use bound::{elbo, elbo_from_stats, entropy, network_entropy};
pub use count::{count_params, count_params_for};
pub use emission::log_emission;
pub(crate) use emission::linear_coefficients;
pub use oracle::{exact_loglik_oracle, ORACLE_MAX_NODES, ORACLE_MAX_BLOCKS};
pub use stats::{BlockStats, SufficientStats};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EmissionKind, NetworkCollection};

/// Tolerance used when checking that probability rows sum to one.
const ROW_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    Iid,
    Pi,
    Delta,
    DeltaPi,
    Sep,
}

impl ModelVariant {
    /// The four joint variants, from most to least constrained.
    pub const JOINT: [ModelVariant; 4] = [
        ModelVariant::Iid,
        ModelVariant::Pi,
        ModelVariant::Delta,
        ModelVariant::DeltaPi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Iid => "iid",
            ModelVariant::Pi => "pi",
            ModelVariant::Delta => "delta",
            ModelVariant::DeltaPi => "deltapi",
            ModelVariant::Sep => "sep",
        }
    }

    /// Block proportions are estimated per network.
    pub fn per_network_pi(self) -> bool {
        matches!(self, ModelVariant::Pi | ModelVariant::DeltaPi | ModelVariant::Sep)
    }

    /// Blocks may be absent from some networks (support matrix is free).
    pub fn free_support(self) -> bool {
        matches!(self, ModelVariant::Pi | ModelVariant::DeltaPi)
    }

    pub fn has_density(self) -> bool {
        matches!(self, ModelVariant::Delta | ModelVariant::DeltaPi)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "iid" => Ok(ModelVariant::Iid),
            "pi" => Ok(ModelVariant::Pi),
            "delta" => Ok(ModelVariant::Delta),
            "deltapi" => Ok(ModelVariant::DeltaPi),
            "sep" => Ok(ModelVariant::Sep),
            other => Err(Error::Params(format!("unknown model variant '{other}'"))),
        }
    }
}

/// True iff every row and every column of `s` holds at least one `true`.
pub fn validate_support(s: &Array2<bool>) -> bool {
    let (rows, cols) = s.dim();
    rows > 0
        && cols > 0
        && s.rows().into_iter().all(|r| r.iter().any(|&b| b))
        && s.columns().into_iter().all(|c| c.iter().any(|&b| b))
}

/// M x Q boolean matrix: which blocks are represented in which network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportMatrix(Array2<bool>);

impl SupportMatrix {
    pub fn new(s: Array2<bool>) -> Result<Self> {
        if validate_support(&s) {
            Ok(SupportMatrix(s))
        } else {
            Err(Error::Support(
                "every row and every column needs at least one represented block".into(),
            ))
        }
    }

    pub fn full(m: usize, q: usize) -> Self {
        SupportMatrix(Array2::from_elem((m, q), true))
    }

    /// Builds from 0/1 rows; convenient in tests.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let m = rows.len();
        let q = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::Dimension("ragged support rows".into()));
        }
        let s = Array2::from_shape_fn((m, q), |(i, j)| rows[i][j] != 0);
        Self::new(s)
    }

    pub fn as_array(&self) -> &Array2<bool> {
        &self.0
    }

    pub fn n_networks(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_blocks(&self) -> usize {
        self.0.ncols()
    }

    pub fn contains(&self, m: usize, q: usize) -> bool {
        self.0[[m, q]]
    }

    /// Blocks represented in network `m`.
    pub fn blocks(&self, m: usize) -> Vec<usize> {
        (0..self.n_blocks()).filter(|&q| self.0[[m, q]]).collect()
    }

    pub fn block_count(&self, m: usize) -> usize {
        self.0.row(m).iter().filter(|&&b| b).count()
    }

    /// (S'S)_qr > 0: blocks q and r share at least one network.
    pub fn co_occur(&self, q: usize, r: usize) -> bool {
        (0..self.n_networks()).any(|m| self.0[[m, q]] && self.0[[m, r]])
    }

    /// Number of ordered pairs (q, r) with (S'S)_qr > 0.
    pub fn n_co_occurring(&self) -> usize {
        let q = self.n_blocks();
        (0..q)
            .flat_map(|a| (0..q).map(move |b| (a, b)))
            .filter(|&(a, b)| self.co_occur(a, b))
            .count()
    }

    /// Number of unordered pairs q <= r with (S'S)_qr > 0.
    pub fn n_co_occurring_unordered(&self) -> usize {
        let q = self.n_blocks();
        (0..q)
            .flat_map(|a| (a..q).map(move |b| (a, b)))
            .filter(|&(a, b)| self.co_occur(a, b))
            .count()
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_blocks(&self, perm: &[usize]) -> SupportMatrix {
        let s = Array2::from_shape_fn((self.n_networks(), perm.len()), |(m, k)| {
            self.0[[m, perm[k]]]
        });
        SupportMatrix(s)
    }

    /// Support restricted to a subset of networks. Columns left empty are dropped
    /// and the kept column indices are returned alongside.
    pub fn restrict(&self, networks: &[usize]) -> (SupportMatrix, Vec<usize>) {
        let keep: Vec<usize> = (0..self.n_blocks())
            .filter(|&q| networks.iter().any(|&m| self.0[[m, q]]))
            .collect();
        let s = Array2::from_shape_fn((networks.len(), keep.len()), |(i, k)| {
            self.0[[networks[i], keep[k]]]
        });
        (SupportMatrix(s), keep)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.0
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|&b| u8::from(b)).collect())
            .collect()
    }
}

/// Parameters of a joint model: proportions per network, shared connectivity,
/// per-network density scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ColSbmParams {
    pub variant: ModelVariant,
    pub support: SupportMatrix,
    /// M x Q, rows sum to one, zero off-support.
    pub pi: Array2<f64>,
    /// Q x Q shared connectivity.
    pub alpha: Array2<f64>,
    /// Length M, `delta[0] == 1`.
    pub delta: Vec<f64>,
}

impl ColSbmParams {
    pub fn n_blocks(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn n_networks(&self) -> usize {
        self.pi.nrows()
    }

    /// Emission rate between blocks q and r in network m, clamped into the domain.
    pub fn rate(&self, emission: EmissionKind, m: usize, q: usize, r: usize) -> f64 {
        emission.clamp_rate(self.delta[m] * self.alpha[[q, r]])
    }

    pub fn validate(&self, emission: EmissionKind) -> Result<()> {
        let m_count = self.n_networks();
        let q = self.n_blocks();
        if self.alpha.ncols() != q
            || self.pi.ncols() != q
            || self.support.n_blocks() != q
            || self.support.n_networks() != m_count
            || self.delta.len() != m_count
        {
            return Err(Error::Dimension(format!(
                "pi {:?}, alpha {:?}, support {:?}, delta {}",
                self.pi.dim(),
                self.alpha.dim(),
                self.support.as_array().dim(),
                self.delta.len()
            )));
        }
        for m in 0..m_count {
            let row = self.pi.row(m);
            if (row.sum() - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Params(format!("pi row {m} sums to {}", row.sum())));
            }
            for qq in 0..q {
                let p = row[qq];
                let on = self.support.contains(m, qq);
                if p < 0.0 || (on && p == 0.0) || (!on && p != 0.0) {
                    return Err(Error::Params(format!(
                        "pi[{m},{qq}] = {p} inconsistent with support"
                    )));
                }
            }
        }
        if !self.variant.per_network_pi() {
            if !self.support.is_full() {
                return Err(Error::Params(format!(
                    "{} variant requires a full support",
                    self.variant
                )));
            }
            for m in 1..m_count {
                if self.pi.row(m) != self.pi.row(0) {
                    return Err(Error::Params(format!(
                        "{} variant requires identical proportions",
                        self.variant
                    )));
                }
            }
        }
        if self.variant.has_density() {
            if self.delta[0] != 1.0 {
                return Err(Error::Params("delta[0] must equal 1".into()));
            }
            if self.delta.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
                return Err(Error::Params("delta must be positive".into()));
            }
        } else if self.delta.iter().any(|&d| d != 1.0) {
            return Err(Error::Params(format!(
                "{} variant has no density parameters",
                self.variant
            )));
        }
        for m in 0..m_count {
            for a in self.support.blocks(m) {
                for b in self.support.blocks(m) {
                    let r = self.delta[m] * self.alpha[[a, b]];
                    let ok = match emission {
                        EmissionKind::Bernoulli => r > 0.0 && r <= 1.0,
                        EmissionKind::Poisson => r > 0.0 && r.is_finite(),
                    };
                    if !ok {
                        return Err(Error::Params(format!(
                            "delta[{m}] * alpha[{a},{b}] = {r} outside the {emission} domain"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Relabels blocks: new block `k` is old block `perm[k]`.
    pub fn permute_blocks(&self, perm: &[usize]) -> ColSbmParams {
        let q = perm.len();
        ColSbmParams {
            variant: self.variant,
            support: self.support.permute_blocks(perm),
            pi: Array2::from_shape_fn((self.n_networks(), q), |(m, k)| self.pi[[m, perm[k]]]),
            alpha: Array2::from_shape_fn((q, q), |(a, b)| self.alpha[[perm[a], perm[b]]]),
            delta: self.delta.clone(),
        }
    }
}

/// Variational posterior: one n_m x Q matrix of block probabilities per network.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub tau: Vec<Array2<f64>>,
}

impl VariationalState {
    pub fn new(tau: Vec<Array2<f64>>) -> Self {
        VariationalState { tau }
    }

    /// One-hot state from hard labels.
    pub fn from_labels(labels: &[Vec<usize>], q: usize) -> Self {
        let tau = labels
            .iter()
            .map(|z| {
                let mut t = Array2::zeros((z.len(), q));
                for (i, &k) in z.iter().enumerate() {
                    t[[i, k]] = 1.0;
                }
                t
            })
            .collect();
        VariationalState { tau }
    }

    pub fn n_blocks(&self) -> usize {
        self.tau.first().map_or(0, |t| t.ncols())
    }

    pub fn validate(&self, collection: &NetworkCollection, support: &SupportMatrix) -> Result<()> {
        if self.tau.len() != collection.len() {
            return Err(Error::Dimension(format!(
                "{} tau matrices for {} networks",
                self.tau.len(),
                collection.len()
            )));
        }
        for (m, t) in self.tau.iter().enumerate() {
            if t.dim() != (collection.network(m).n(), support.n_blocks()) {
                return Err(Error::Dimension(format!(
                    "tau[{m}] is {:?}, expected ({}, {})",
                    t.dim(),
                    collection.network(m).n(),
                    support.n_blocks()
                )));
            }
            for (i, row) in t.rows().into_iter().enumerate() {
                if (row.sum() - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&x| x < 0.0) {
                    return Err(Error::Params(format!("tau[{m}] row {i} is not a distribution")));
                }
                for q in 0..row.len() {
                    if !support.contains(m, q) && row[q] != 0.0 {
                        return Err(Error::Params(format!(
                            "tau[{m}][{i},{q}] is nonzero on an unsupported block"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Argmax block of every node; ties go to the lower block index.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        self.tau
            .iter()
            .map(|t| {
                t.rows()
                    .into_iter()
                    .map(|row| {
                        let mut best = 0;
                        for (k, &v) in row.iter().enumerate() {
                            if v > row[best] {
                                best = k;
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect()
    }

    /// Expected block sizes per network.
    pub fn block_sizes(&self) -> Vec<Array1<f64>> {
        self.tau.iter().map(|t| t.sum_axis(ndarray::Axis(0))).collect()
    }

    /// New column `k` is old column `perm[k]`.
    pub fn permute_blocks(&self, perm: &[usize]) -> VariationalState {
        let tau = self
            .tau
            .iter()
            .map(|t| Array2::from_shape_fn((t.nrows(), perm.len()), |(i, k)| t[[i, perm[k]]]))
            .collect();
        VariationalState { tau }
    }
}
