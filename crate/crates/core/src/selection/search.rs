use std::collections::{BTreeMap, HashSet};

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelVariant, SupportMatrix};
use crate::network::NetworkCollection;
use crate::rng::derive;
use crate::vem::{
    alignment_candidates, run_vem, split_merge_candidates, Candidate, Direction, Fit, VemConfig,
};

use super::sep::{fit_sep_sbm, sep_total, SepFit};
use super::{prefers, ScoredFit, SearchConfig};

/// Outcome of the stepwise search for one variant.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub variant: ModelVariant,
    pub best: ScoredFit,
    /// Kept fits per number of blocks, best first, in increasing Q.
    pub per_q: Vec<(usize, Vec<ScoredFit>)>,
    pub passes: usize,
    pub n_fits: usize,
    /// The selected Q equals the upper end of the explored range.
    pub reached_q_max: bool,
}

impl SearchResult {
    pub fn q_hat(&self) -> usize {
        self.best.n_blocks()
    }

    /// Best kept fit with exactly `q` blocks.
    pub fn best_at(&self, q: usize) -> Option<&ScoredFit> {
        self.per_q
            .iter()
            .find(|(k, _)| *k == q)
            .and_then(|(_, v)| v.first())
    }
}

fn variant_code(v: ModelVariant) -> u64 {
    match v {
        ModelVariant::Iid => 1,
        ModelVariant::Pi => 2,
        ModelVariant::Delta => 3,
        ModelVariant::DeltaPi => 4,
        ModelVariant::Sep => 5,
    }
}

/// Supports obtained by thresholding π̂ at each `t`; rows or columns left
/// empty get back their entry with the largest π̂. Duplicates are dropped.
pub fn support_candidates(fit: &Fit, thresholds: &[f64]) -> Vec<SupportMatrix> {
    let pi = &fit.params.pi;
    let (m, q) = pi.dim();
    let mut out: Vec<SupportMatrix> = Vec::new();
    for &t in thresholds {
        let mut s = Array2::from_shape_fn((m, q), |(a, b)| pi[[a, b]] > t);
        for a in 0..m {
            if !s.row(a).iter().any(|&x| x) {
                let best = argmax((0..q).map(|b| pi[[a, b]]));
                s[[a, best]] = true;
            }
        }
        for b in 0..q {
            if !s.column(b).iter().any(|&x| x) {
                let best = argmax((0..m).map(|a| pi[[a, b]]));
                s[[best, b]] = true;
            }
        }
        let s = SupportMatrix::new(s).expect("repaired support is valid");
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

struct Search<'a> {
    collection: &'a NetworkCollection,
    variant: ModelVariant,
    cfg: &'a SearchConfig,
    levels: BTreeMap<usize, Vec<ScoredFit>>,
    expanded: HashSet<(u8, usize, u64)>,
    n_fits: usize,
}

impl<'a> Search<'a> {
    fn fit_batch(&mut self, candidates: Vec<Candidate>, tag: &[u64]) -> Result<Vec<ScoredFit>> {
        let base = derive(self.cfg.seed, tag);
        let collection = self.collection;
        let variant = self.variant;
        let vem = &self.cfg.vem;
        self.n_fits += candidates.len();
        candidates
            .into_par_iter()
            .enumerate()
            .map(|(k, c)| {
                let cfg = VemConfig {
                    seed: derive(base, &[k as u64]),
                    ..vem.clone()
                };
                let fit = run_vem(collection, variant, &c.support, &c.state, &cfg)?;
                Ok(ScoredFit::new(fit, collection))
            })
            .collect()
    }

    fn insert(&mut self, q: usize, fits: Vec<ScoredFit>) {
        let level = self.levels.entry(q).or_default();
        level.extend(fits);
        level.sort_by(|a, b| b.bic_l.total_cmp(&a.bic_l));
        let mut kept: Vec<ScoredFit> = Vec::new();
        for f in level.drain(..) {
            let duplicate = kept.iter().any(|k| {
                k.fit.params.support == f.fit.params.support
                    && (k.bic_l - f.bic_l).abs() <= 1e-9 * f.bic_l.abs().max(1.0)
            });
            if !duplicate {
                kept.push(f);
            }
            if kept.len() == self.cfg.best_k {
                break;
            }
        }
        *level = kept;
    }

    fn best_overall(&self) -> f64 {
        self.levels
            .values()
            .filter_map(|v| v.first())
            .map(|f| f.bic_l)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn key(kind: u8, f: &ScoredFit) -> (u8, usize, u64) {
        (kind, f.n_blocks(), f.bic_l.to_bits())
    }

    /// Re-fits the best model of level `q` under thresholded supports.
    fn refine_support(&mut self, q: usize, tag: &[u64]) -> Result<()> {
        if !self.variant.free_support() {
            return Ok(());
        }
        let Some(best) = self.levels.get(&q).and_then(|v| v.first()).cloned() else {
            return Ok(());
        };
        if !self.expanded.insert(Self::key(0, &best)) {
            return Ok(());
        }
        let candidates: Vec<Candidate> = support_candidates(&best.fit, &self.cfg.thresholds)
            .into_iter()
            .filter(|s| *s != best.fit.params.support)
            .map(|support| Candidate {
                state: best.fit.state.clone(),
                support,
            })
            .collect();
        if candidates.is_empty() {
            return Ok(());
        }
        let fits = self.fit_batch(candidates, tag)?;
        self.insert(q, fits);
        Ok(())
    }

    fn step(&mut self, from: usize, to: usize, direction: Direction, tag: &[u64]) -> Result<()> {
        let kind = if direction == Direction::Split { 1 } else { 2 };
        let parents: Vec<ScoredFit> = self
            .levels
            .get(&from)
            .map(|v| v.to_vec())
            .unwrap_or_default()
            .into_iter()
            .filter(|p| self.expanded.insert(Self::key(kind, p)))
            .collect();
        let candidates: Vec<Candidate> = parents
            .iter()
            .flat_map(|p| split_merge_candidates(self.collection, &p.fit, direction))
            .collect();
        if !candidates.is_empty() {
            let fits = self.fit_batch(candidates, tag)?;
            self.insert(to, fits);
        }
        self.refine_support(to, &[tag, &[9]].concat())
    }
}

/// Stepwise search over Q (and over supports for the free-support variants).
pub fn model_search(
    collection: &NetworkCollection,
    variant: ModelVariant,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let sep = fit_sep_sbm(collection, cfg)?;
    model_search_with_sep(collection, variant, cfg, &sep)
}

/// As [`model_search`], reusing single-network fits computed beforehand with the same `cfg`.
pub fn model_search_with_sep(
    collection: &NetworkCollection,
    variant: ModelVariant,
    cfg: &SearchConfig,
    sep: &[SepFit],
) -> Result<SearchResult> {
    cfg.validate()?;
    if variant == ModelVariant::Sep {
        return Err(Error::Params("model_search needs a joint variant".into()));
    }
    if collection.len() == 1 && !variant.per_network_pi() {
        return Ok(single_network_search(collection, variant, &sep[0], cfg));
    }
    let code = variant_code(variant);
    let mut search = Search {
        collection,
        variant,
        cfg,
        levels: BTreeMap::new(),
        expanded: HashSet::new(),
        n_fits: 0,
    };
    let min_n = collection.sizes().into_iter().min().unwrap_or(0);
    let q_top = cfg.q_max;
    for q in cfg.q_min..=q_top {
        let per_network: Option<Vec<Fit>> = sep.iter().map(|s| s.at(q).map(|f| f.fit.clone())).collect();
        let Some(sep_fits) = per_network else {
            continue;
        };
        if q > min_n {
            continue;
        }
        let tag = [2, code, q as u64];
        let states = alignment_candidates(&sep_fits, q, cfg.n_perm, derive(cfg.seed, &tag));
        let support = SupportMatrix::full(collection.len(), q);
        let candidates = states
            .into_iter()
            .map(|state| Candidate {
                state,
                support: support.clone(),
            })
            .collect();
        let fits = search.fit_batch(candidates, &tag)?;
        search.insert(q, fits);
        search.refine_support(q, &[3, code, q as u64])?;
    }
    if search.levels.is_empty() {
        return Err(Error::Params("no admissible number of blocks in range".into()));
    }
    let mut passes = 0;
    for pass in 0..cfg.max_passes {
        passes += 1;
        let before = search.best_overall();
        let p = pass as u64;
        for q in cfg.q_min + 1..=q_top {
            search.step(q - 1, q, Direction::Split, &[4, code, p, q as u64])?;
        }
        for q in (cfg.q_min..q_top).rev() {
            search.step(q + 1, q, Direction::Merge, &[5, code, p, q as u64])?;
        }
        if search.best_overall() - before < cfg.pass_tol {
            break;
        }
    }
    let per_q: Vec<(usize, Vec<ScoredFit>)> = search.levels.into_iter().filter(|(_, v)| !v.is_empty()).collect();
    // ties go to the smaller model
    let mut best: Option<&ScoredFit> = None;
    for (_, fits) in &per_q {
        let f = &fits[0];
        if best.map_or(true, |b| prefers(f.bic_l, b.bic_l)) {
            best = Some(f);
        }
    }
    let best = best.expect("at least one level").clone();
    let reached_q_max = best.n_blocks() == q_top;
    Ok(SearchResult {
        variant,
        best,
        per_q,
        passes,
        n_fits: search.n_fits,
        reached_q_max,
    })
}

/// With one network the iid and delta models are the single-network SBM, so
/// its fits are reused as they are.
fn single_network_search(
    collection: &NetworkCollection,
    variant: ModelVariant,
    sep: &SepFit,
    cfg: &SearchConfig,
) -> SearchResult {
    let per_q: Vec<(usize, Vec<ScoredFit>)> = sep
        .per_q
        .iter()
        .map(|f| {
            let mut fit = f.fit.clone();
            fit.params.variant = variant;
            (f.n_blocks(), vec![ScoredFit::new(fit, collection)])
        })
        .collect();
    let best = per_q[sep.best].1[0].clone();
    let reached_q_max = best.n_blocks() == cfg.q_max;
    SearchResult {
        variant,
        best,
        per_q,
        passes: 0,
        n_fits: 0,
        reached_q_max,
    }
}

/// Scores of the joint variants against the single-network baseline.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub searches: Vec<SearchResult>,
    pub sep: Vec<SepFit>,
    /// Σ_m max_Q criterion of the single-network fits.
    pub sep_total: f64,
}

impl Comparison {
    pub fn score(&self, variant: ModelVariant) -> Option<f64> {
        if variant == ModelVariant::Sep {
            return Some(self.sep_total);
        }
        self.searches
            .iter()
            .find(|s| s.variant == variant)
            .map(|s| s.best.bic_l)
    }

    pub fn search(&self, variant: ModelVariant) -> Option<&SearchResult> {
        self.searches.iter().find(|s| s.variant == variant)
    }

    /// Joint variant with the highest criterion; ties go to the earlier
    /// (more constrained) variant in the comparison order.
    pub fn best_joint(&self) -> &SearchResult {
        let mut best = &self.searches[0];
        for s in &self.searches[1..] {
            if prefers(s.best.bic_l, best.best.bic_l) {
                best = s;
            }
        }
        best
    }

    /// Model with the highest criterion among the joint variants and sep.
    pub fn selected(&self) -> ModelVariant {
        let joint = self.best_joint();
        if prefers(self.sep_total, joint.best.bic_l) {
            ModelVariant::Sep
        } else {
            joint.variant
        }
    }

    /// Whether the networks are judged to share a connectivity structure.
    pub fn common_structure(&self) -> bool {
        self.searches.iter().any(|s| s.best.bic_l > self.sep_total)
    }
}

/// Runs the search for the four joint variants and the single-network baseline.
pub fn compare_variants(collection: &NetworkCollection, cfg: &SearchConfig) -> Result<Comparison> {
    compare_variants_with(collection, cfg, &ModelVariant::JOINT)
}

/// As [`compare_variants`] restricted to `variants`, in the given order.
pub fn compare_variants_with(
    collection: &NetworkCollection,
    cfg: &SearchConfig,
    variants: &[ModelVariant],
) -> Result<Comparison> {
    if variants.is_empty() {
        return Err(Error::Params("no variant to compare".into()));
    }
    let sep = fit_sep_sbm(collection, cfg)?;
    let searches = variants
        .iter()
        .map(|&v| model_search_with_sep(collection, v, cfg, &sep))
        .collect::<Result<Vec<_>>>()?;
    let total = sep_total(&sep);
    Ok(Comparison {
        searches,
        sep,
        sep_total: total,
    })
}
