//! Variational EM for the joint model.

mod estep;
mod init;
mod mstep;

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{
    elbo_from_stats, network_entropy, BlockStats, ColSbmParams, ModelVariant, SufficientStats,
    SupportMatrix, VariationalState,
};
use crate::network::{Network, NetworkCollection};
use crate::rng::rng_at;

pub use init::{
    canonical_order, init_candidates, random_labels, split_merge_candidates, Candidate, Direction,
    SpectralEmbedding,
};
pub(crate) use init::{alignment_candidates, all_permutations, support_for};
pub use mstep::m_step;

#[derive(Debug, Clone, PartialEq)]
pub struct VemConfig {
    /// Stop when the relative ELBO change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub seed: u64,
    /// Golden-section refinement of the Bernoulli density M-step.
    pub strict_bernoulli_delta: bool,
}

impl Default for VemConfig {
    fn default() -> Self {
        VemConfig {
            tol: 1e-6,
            max_iter: 500,
            fixed_point_tol: 1e-6,
            fixed_point_max_iter: 50,
            seed: 0,
            strict_bernoulli_delta: false,
        }
    }
}

impl VemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.fixed_point_tol > 0.0) {
            return Err(Error::Params("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Output of one variational EM run.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub params: ColSbmParams,
    pub state: VariationalState,
    pub elbo: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// ELBO after the initial M-step and after every iteration.
    pub elbo_trace: Vec<f64>,
}

impl Fit {
    pub fn variant(&self) -> ModelVariant {
        self.params.variant
    }

    pub fn n_blocks(&self) -> usize {
        self.params.n_blocks()
    }

    pub fn support(&self) -> &SupportMatrix {
        &self.params.support
    }

    /// Relabels blocks: new block `k` is old block `perm[k]`.
    pub fn permute_blocks(&self, perm: &[usize]) -> Fit {
        Fit {
            params: self.params.permute_blocks(perm),
            state: self.state.permute_blocks(perm),
            ..self.clone()
        }
    }
}

static MAX_ELBO_DROP: AtomicU64 = AtomicU64::new(0);
static MAX_REJECTED_DROP: AtomicU64 = AtomicU64::new(0);

fn record_max(cell: &AtomicU64, value: f64) {
    if value <= 0.0 || !value.is_finite() {
        return;
    }
    let _ = cell.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |old| {
        (value > f64::from_bits(old)).then(|| value.to_bits())
    });
}

/// Largest ELBO decrease observed between consecutive accepted steps of any
/// `run_vem` call in this process.
pub fn max_elbo_drop() -> f64 {
    f64::from_bits(MAX_ELBO_DROP.load(Ordering::Relaxed))
}

/// Largest decrease among M-step proposals that were rejected.
pub fn max_rejected_mstep_drop() -> f64 {
    f64::from_bits(MAX_REJECTED_DROP.load(Ordering::Relaxed))
}

/// Fixed-point VE-step for one network of the collection.
///
/// `m` selects the network's row of π, δ and the support.
pub fn ve_step(
    network: &Network,
    m: usize,
    params: &ColSbmParams,
    emission: crate::network::EmissionKind,
    tau_init: &Array2<f64>,
    cfg: &VemConfig,
) -> Array2<f64> {
    let mut tau = tau_init.clone();
    estep::project_to_support(&mut tau, &params.support.blocks(m));
    estep::ve_sweeps(network, m, params, emission, &mut tau, cfg);
    tau
}

fn starting_params(variant: ModelVariant, support: &SupportMatrix) -> ColSbmParams {
    let (m, q) = (support.n_networks(), support.n_blocks());
    ColSbmParams {
        variant,
        support: support.clone(),
        pi: Array2::from_elem((m, q), 1.0 / q as f64),
        alpha: Array2::from_elem((q, q), 0.5),
        delta: vec![1.0; m],
    }
}

/// Variational EM from a given τ.
///
/// Each iteration visits the networks in a seeded random order; after the
/// VE-step on a network the parameters are re-estimated. An M-step proposal
/// that would lower the bound is discarded.
pub fn run_vem(
    collection: &NetworkCollection,
    variant: ModelVariant,
    support: &SupportMatrix,
    tau_init: &VariationalState,
    cfg: &VemConfig,
) -> Result<Fit> {
    cfg.validate()?;
    if variant == ModelVariant::Sep {
        return Err(Error::Params("run_vem fits joint variants; fit sep networks one at a time".into()));
    }
    let support = support_for(variant, support);
    let q = support.n_blocks();
    if support.n_networks() != collection.len() || tau_init.tau.len() != collection.len() {
        return Err(Error::Dimension("support / tau / collection sizes differ".into()));
    }
    for (m, t) in tau_init.tau.iter().enumerate() {
        if t.dim() != (collection.network(m).n(), q) {
            return Err(Error::Dimension(format!("tau[{m}] has shape {:?}", t.dim())));
        }
    }
    let emission = collection.emission();
    let mut state = tau_init.clone();
    for (m, t) in state.tau.iter_mut().enumerate() {
        estep::project_to_support(t, &support.blocks(m));
    }
    let mut stats = SufficientStats::compute(collection, &state);
    let mut entropies: Vec<f64> = state.tau.iter().map(network_entropy).collect();
    let mut params = mstep::m_step_from_stats(
        &stats,
        collection,
        variant,
        &support,
        &starting_params(variant, &support),
        cfg.strict_bernoulli_delta,
    );
    let mut current = elbo_from_stats(collection, &stats, &entropies, &params);
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;
    let mut order: Vec<usize> = (0..collection.len()).collect();
    let mut rng = rng_at(cfg.seed, &[0x7e3]);
    for it in 1..=cfg.max_iter {
        iterations = it;
        let start = current;
        order.shuffle(&mut rng);
        for &m in &order {
            let net = collection.network(m);
            estep::ve_sweeps(net, m, &params, emission, &mut state.tau[m], cfg);
            stats.per_network[m] = BlockStats::compute(net, &state.tau[m]);
            entropies[m] = network_entropy(&state.tau[m]);
            let after_ve = elbo_from_stats(collection, &stats, &entropies, &params);
            record_max(&MAX_ELBO_DROP, current - after_ve);
            current = after_ve;
            let proposal = mstep::m_step_from_stats(
                &stats,
                collection,
                variant,
                &support,
                &params,
                cfg.strict_bernoulli_delta,
            );
            let value = elbo_from_stats(collection, &stats, &entropies, &proposal);
            if value >= current {
                params = proposal;
                current = value;
            } else {
                record_max(&MAX_REJECTED_DROP, current - value);
            }
        }
        trace.push(current);
        let change = (current - start).abs();
        if change <= cfg.tol * start.abs() || change == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(Fit {
        params,
        state,
        elbo: current,
        n_iterations: iterations,
        converged,
        elbo_trace: trace,
    })
}

/// τ with every row uniform over the supported blocks of its network.
pub fn uniform_state(collection: &NetworkCollection, support: &SupportMatrix) -> VariationalState {
    VariationalState::new(
        collection
            .networks()
            .iter()
            .enumerate()
            .map(|(m, net)| {
                let mut t = Array2::zeros((net.n(), support.n_blocks()));
                estep::project_to_support(&mut t, &support.blocks(m));
                t
            })
            .collect(),
    )
}

/// Expected block sizes, summed over networks.
pub fn pooled_block_sizes(state: &VariationalState) -> Vec<f64> {
    let q = state.n_blocks();
    let mut out = vec![0.0; q];
    for t in &state.tau {
        for (k, v) in t.sum_axis(Axis(0)).iter().enumerate() {
            out[k] += v;
        }
    }
    out
}
