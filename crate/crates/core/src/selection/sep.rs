use rayon::prelude::*;

use crate::error::Result;
use crate::model::{ModelVariant, SupportMatrix, VariationalState};
use crate::network::NetworkCollection;
use crate::rng::{derive, rng_at};
use crate::vem::{canonical_order, random_labels, run_vem, SpectralEmbedding, VemConfig};

use super::{ScoredFit, SearchConfig};

/// Independent single-network fits of one network of a collection.
#[derive(Debug, Clone)]
pub struct SepFit {
    pub network: usize,
    /// Best fit for each number of blocks, starting at `q_min`.
    pub per_q: Vec<ScoredFit>,
    /// Index into `per_q` of the fit with the highest criterion.
    pub best: usize,
}

impl SepFit {
    pub fn best_fit(&self) -> &ScoredFit {
        &self.per_q[self.best]
    }

    pub fn q_hat(&self) -> usize {
        self.best_fit().n_blocks()
    }

    /// Fit with exactly `q` blocks, if one was computed.
    pub fn at(&self, q: usize) -> Option<&ScoredFit> {
        self.per_q.iter().find(|f| f.n_blocks() == q)
    }
}

/// Sum over networks of the best single-network criterion.
pub fn sep_total(fits: &[SepFit]) -> f64 {
    fits.iter().map(|f| f.best_fit().bic_l).sum()
}

/// Fits every network on its own for each Q in the configured range, from a
/// spectral start and `n_random_inits` random starts, keeping the best bound.
///
/// Blocks of each returned fit are ordered by decreasing expected degree.
pub fn fit_sep_sbm(collection: &NetworkCollection, cfg: &SearchConfig) -> Result<Vec<SepFit>> {
    cfg.validate()?;
    (0..collection.len())
        .into_par_iter()
        .map(|m| fit_one(collection, m, cfg))
        .collect()
}

fn fit_one(collection: &NetworkCollection, m: usize, cfg: &SearchConfig) -> Result<SepFit> {
    let single = collection.subset(&[m]);
    let net = single.network(0);
    let n = net.n();
    let embedding = SpectralEmbedding::new(net);
    let q_hi = cfg.q_max.min(n.max(1));
    let q_lo = cfg.q_min.min(q_hi);
    let mut per_q = Vec::new();
    for q in q_lo..=q_hi {
        let support = SupportMatrix::full(1, q);
        let n_starts = if q == 1 { 1 } else { 1 + cfg.n_random_inits };
        let fits: Vec<_> = (0..n_starts)
            .into_par_iter()
            .map(|s| {
                let path = [1, m as u64, q as u64, s as u64];
                let mut rng = rng_at(cfg.seed, &path);
                let labels = if s == 0 {
                    embedding.labels(q, &mut rng)
                } else {
                    random_labels(n, q, &mut rng)
                };
                let state = VariationalState::from_labels(&[labels], q);
                let vem = VemConfig {
                    seed: derive(cfg.seed, &path),
                    ..cfg.vem.clone()
                };
                run_vem(&single, ModelVariant::Iid, &support, &state, &vem)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (k, f) in fits.iter().enumerate() {
            if f.elbo > fits[best].elbo {
                best = k;
            }
        }
        let fit = fits.into_iter().nth(best).expect("at least one start");
        let fit = fit.permute_blocks(&canonical_order(&fit));
        per_q.push(ScoredFit::new(fit, &single));
    }
    let mut best = 0;
    for (k, f) in per_q.iter().enumerate() {
        if f.bic_l > per_q[best].bic_l {
            best = k;
        }
    }
    Ok(SepFit {
        network: m,
        per_q,
        best,
    })
}
