//! Penalised-likelihood model selection.

mod search;
mod sep;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::model::{ModelVariant, SupportMatrix};
use crate::network::NetworkCollection;
use crate::vem::{Fit, VemConfig};

pub use search::{
    compare_variants, compare_variants_with, model_search, model_search_with_sep, support_candidates,
    Comparison, SearchResult,
};
pub use sep::{fit_sep_sbm, sep_total, SepFit};

/// Two criteria closer than this are treated as a tie.
pub const PREFERENCE_TOL: f64 = 1e-6;

/// Whether a score `a` is preferred to `b` (ties are not preferences).
pub fn prefers(a: f64, b: f64) -> bool {
    a > b + PREFERENCE_TOL
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub q_min: usize,
    pub q_max: usize,
    /// Fits kept per number of blocks.
    pub best_k: usize,
    /// Thresholds on π̂ used to propose supports.
    pub thresholds: Vec<f64>,
    /// Block alignments tried per number of blocks at initialisation.
    pub n_perm: usize,
    /// Random starts per number of blocks for single-network fits, besides the spectral one.
    pub n_random_inits: usize,
    /// Forward/backward passes stop once the best criterion improves by less than this.
    pub pass_tol: f64,
    pub max_passes: usize,
    pub seed: u64,
    pub vem: VemConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_min: 1,
            q_max: 8,
            best_k: 3,
            thresholds: vec![0.0, 1e-3, 1e-2, 5e-2, 1e-1],
            n_perm: 25,
            n_random_inits: 5,
            pass_tol: 1e-4,
            max_passes: 5,
            seed: 0,
            vem: VemConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_min < 1 || self.q_max < self.q_min {
            return Err(Error::Params(format!(
                "invalid block range [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        if self.best_k == 0 {
            return Err(Error::Params("best_k must be positive".into()));
        }
        if self.thresholds.iter().any(|&t| !(0.0..1.0).contains(&t)) {
            return Err(Error::Params("thresholds must lie in [0, 1)".into()));
        }
        self.vem.validate()
    }

    pub fn with_seed(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            seed,
            ..self.clone()
        }
    }
}

/// A fit together with its criterion value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFit {
    pub fit: Fit,
    pub bic_l: f64,
    /// Number of possible interactions in the collection.
    pub n_m: u64,
}

impl ScoredFit {
    pub fn new(fit: Fit, collection: &NetworkCollection) -> ScoredFit {
        let bic = bic_l(&fit, collection);
        ScoredFit {
            fit,
            bic_l: bic,
            n_m: possible_interactions(collection),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.fit.n_blocks()
    }
}

/// Σ_m n_m (n_m - 1), halved for undirected collections.
pub fn possible_interactions(collection: &NetworkCollection) -> u64 {
    collection.n_possible_dyads() as u64
}

/// log p_Q(S) under independent uniform priors on Q_m and on the blocks of each row.
pub fn log_prior_support(support: &SupportMatrix, q: usize) -> Result<f64> {
    if support.n_blocks() != q {
        return Err(Error::Support(format!(
            "support has {} columns, Q = {q}",
            support.n_blocks()
        )));
    }
    let m = support.n_networks();
    let mut lp = -(m as f64) * (q as f64).ln();
    for k in 0..m {
        lp -= ln_binomial(q as u64, support.block_count(k) as u64);
    }
    Ok(lp)
}

/// Penalty of a joint variant (the criterion subtracts half of it).
pub fn penalty(variant: ModelVariant, support: &SupportMatrix, collection: &NetworkCollection) -> f64 {
    let q = support.n_blocks();
    let m = collection.len();
    let directed = collection.directed();
    let log_nm = (possible_interactions(collection).max(1) as f64).ln();
    let square = if directed { q * q } else { q * (q + 1) / 2 };
    let pen_delta = if variant.has_density() {
        (m as f64 - 1.0) * log_nm
    } else {
        0.0
    };
    match variant {
        ModelVariant::Iid | ModelVariant::Delta => {
            let total = collection.total_nodes().max(1) as f64;
            (q as f64 - 1.0) * total.ln() + square as f64 * log_nm + pen_delta
        }
        ModelVariant::Pi | ModelVariant::DeltaPi => {
            let pen_pi: f64 = collection
                .sizes()
                .iter()
                .enumerate()
                .map(|(k, &n)| (support.block_count(k) as f64 - 1.0) * (n.max(1) as f64).ln())
                .sum();
            let co = if directed {
                support.n_co_occurring()
            } else {
                support.n_co_occurring_unordered()
            };
            let pen_s = -2.0 * log_prior_support(support, q).expect("support matches Q");
            pen_pi + co as f64 * log_nm + pen_delta + pen_s
        }
        ModelVariant::Sep => collection
            .networks()
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let single = collection.subset(&[k]);
                let (s, _) = support.restrict(&[k]);
                penalty(ModelVariant::Iid, &s, &single)
            })
            .sum(),
    }
}

/// BIC-L: the bound at the fit minus half the penalty.
pub fn bic_l(fit: &Fit, collection: &NetworkCollection) -> f64 {
    fit.elbo - 0.5 * penalty(fit.params.variant, &fit.params.support, collection)
}
