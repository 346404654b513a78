//! Link and dyad prediction, masking experiments and ROC-AUC.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelVariant;
use crate::network::{EmissionKind, Network, NetworkCollection};
use crate::rng::{derive, rng_at};
use crate::selection::{fit_sep_sbm, model_search_with_sep, SearchConfig};
use crate::vem::Fit;

/// Predicted edge probability (Bernoulli) or expected count (Poisson) for
/// every ordered pair of network `m`; the diagonal is 0.
pub fn link_probabilities(fit: &Fit, m: usize, emission: EmissionKind) -> Array2<f64> {
    let tau = &fit.state.tau[m];
    let p = &fit.params;
    let blocks = p.support.blocks(m);
    let n = tau.nrows();
    // rate matrix restricted to the support, then τ R τ'
    let r = Array2::from_shape_fn((blocks.len(), blocks.len()), |(a, b)| {
        p.delta[m] * p.alpha[[blocks[a], blocks[b]]]
    });
    let t = Array2::from_shape_fn((n, blocks.len()), |(i, a)| tau[[i, blocks[a]]]);
    let mut out = t.dot(&r).dot(&t.t());
    for i in 0..n {
        out[[i, i]] = 0.0;
    }
    if emission == EmissionKind::Bernoulli {
        out.mapv_inplace(|v| v.clamp(0.0, 1.0));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Existing links are removed (set to 0).
    Links,
    /// Dyads are marked missing.
    Dyads,
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskMode::Links => "links",
            MaskMode::Dyads => "dyads",
        })
    }
}

impl FromStr for MaskMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "links" => Ok(MaskMode::Links),
            "dyads" => Ok(MaskMode::Dyads),
            _ => Err(Error::Params(format!("unknown mask mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub target_network: usize,
    pub fraction: f64,
    pub mode: MaskMode,
    pub seed: u64,
}

/// A held-out dyad and its true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOut {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Hides part of a network.
///
/// Links mode removes ⌊K·E⌋ existing links; the ground truth lists them
/// (value 1) followed by every observed non-link (value 0). Dyads mode marks
/// ⌊K·D⌋ observed dyads as missing; the ground truth lists their values.
/// Undirected networks draw unordered pairs.
pub fn mask_network(network: &Network, spec: &MaskSpec) -> Result<(Network, Vec<HeldOut>)> {
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(Error::Params(format!("mask fraction {} outside [0, 1]", spec.fraction)));
    }
    let n = network.n();
    let directed = network.directed();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && (directed || i < j) && network.is_observed(i, j))
        .collect();
    let mut rng = rng_at(spec.seed, &[spec.target_network as u64]);
    let mut adjacency = network.adjacency().clone();
    let mut mask = network.observed_mask().clone();
    let mut truth = Vec::new();
    let pool: Vec<(usize, usize)> = match spec.mode {
        MaskMode::Links => pairs.iter().copied().filter(|&(i, j)| network.value(i, j) != 0.0).collect(),
        MaskMode::Dyads => pairs.clone(),
    };
    let count = (spec.fraction * pool.len() as f64 + 1e-9).floor() as usize;
    if count == 0 {
        if spec.fraction > 0.0 {
            log::warn!("mask fraction {} removes nothing out of {}", spec.fraction, pool.len());
        }
        return Ok((network.clone(), truth));
    }
    let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), count).into_vec();
    chosen.sort_unstable();
    for &k in &chosen {
        let (i, j) = pool[k];
        truth.push(HeldOut {
            i,
            j,
            value: network.value(i, j),
        });
        match spec.mode {
            MaskMode::Links => {
                adjacency[[i, j]] = 0.0;
                if !directed {
                    adjacency[[j, i]] = 0.0;
                }
            }
            MaskMode::Dyads => {
                mask[[i, j]] = false;
                if !directed {
                    mask[[j, i]] = false;
                }
            }
        }
    }
    if spec.mode == MaskMode::Links {
        for &(i, j) in &pairs {
            if network.value(i, j) == 0.0 {
                truth.push(HeldOut { i, j, value: 0.0 });
            }
        }
    }
    let masked = Network::with_mask(adjacency, mask, directed, Some(network.labels().to_vec()))?;
    Ok((masked, truth))
}

/// Area under the ROC curve as the Mann-Whitney statistic, ties counting 1/2.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric("scores and labels differ in length".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("both classes are needed".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tied groups
    let mut rank_sum_pos = 0.0;
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && scores[idx[e + 1]] == scores[idx[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            if labels[i] {
                rank_sum_pos += avg;
            }
        }
        k = e + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Debug, Clone)]
pub struct PredictConfig {
    pub target_network: usize,
    pub mode: MaskMode,
    pub k_grid: Vec<f64>,
    pub replicates: usize,
    /// Models to score; `Sep` fits the target network on its own.
    pub models: Vec<ModelVariant>,
    pub search: SearchConfig,
    pub seed: u64,
}

/// One (replicate, K, model) outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictRow {
    pub replicate: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub mode: MaskMode,
    pub model: String,
    pub auc: f64,
    pub q_hat: usize,
}

fn auc_for(fit: &Fit, m: usize, emission: EmissionKind, truth: &[HeldOut]) -> Result<f64> {
    let p = link_probabilities(fit, m, emission);
    let scores: Vec<f64> = truth.iter().map(|h| p[[h.i, h.j]]).collect();
    let labels: Vec<bool> = truth.iter().map(|h| h.value > 0.0).collect();
    roc_auc(&scores, &labels)
}

/// Masks the target network, refits every model with a full search and
/// scores the held-out dyads.
pub fn run_prediction_experiment(
    collection: &NetworkCollection,
    cfg: &PredictConfig,
) -> Result<Vec<PredictRow>> {
    if cfg.target_network >= collection.len() {
        return Err(Error::Params(format!("no network {}", cfg.target_network)));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.k_grid.len())
        .flat_map(|k| (0..cfg.replicates).map(move |r| (k, r)))
        .collect();
    let rows: Vec<Vec<PredictRow>> = jobs
        .into_par_iter()
        .map(|(ki, rep)| -> Result<Vec<PredictRow>> {
            let k = cfg.k_grid[ki];
            let seed = derive(cfg.seed, &[ki as u64, rep as u64]);
            let spec = MaskSpec {
                target_network: cfg.target_network,
                fraction: k,
                mode: cfg.mode,
                seed,
            };
            let (masked, truth) = mask_network(collection.network(cfg.target_network), &spec)?;
            let data = collection.with_network(cfg.target_network, masked)?;
            let search = cfg.search.with_seed(derive(seed, &[1]));
            let sep = fit_sep_sbm(&data, &search)?;
            let mut out = Vec::new();
            for &model in &cfg.models {
                let (fit, m) = if model == ModelVariant::Sep {
                    (sep[cfg.target_network].best_fit().fit.clone(), 0)
                } else {
                    let res = model_search_with_sep(&data, model, &search, &sep)?;
                    (res.best.fit, cfg.target_network)
                };
                let auc = auc_for(&fit, m, data.emission(), &truth)?;
                out.push(PredictRow {
                    replicate: rep,
                    k,
                    mode: cfg.mode,
                    model: model.name().to_string(),
                    auc,
                    q_hat: fit.n_blocks(),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Tidy CSV with columns replicate, K, mode, model, auc, q_hat.
pub fn write_prediction_csv<W: std::io::Write>(rows: &[PredictRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
