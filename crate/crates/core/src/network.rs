//! Networks and collections of networks.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to every probability or rate before taking logs.
pub const RATE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionKind {
    Bernoulli,
    Poisson,
}

impl EmissionKind {
    pub fn name(self) -> &'static str {
        match self {
            EmissionKind::Bernoulli => "bernoulli",
            EmissionKind::Poisson => "poisson",
        }
    }

    /// True when `rate` lies in the open parameter domain.
    pub fn in_domain(self, rate: f64) -> bool {
        match self {
            EmissionKind::Bernoulli => rate > 0.0 && rate < 1.0,
            EmissionKind::Poisson => rate > 0.0 && rate.is_finite(),
        }
    }

    /// Clamps into `[1e-9, 1 - 1e-9]` (Bernoulli) or `[1e-9, inf)` (Poisson).
    pub fn clamp_rate(self, rate: f64) -> f64 {
        match self {
            EmissionKind::Bernoulli => rate.clamp(RATE_FLOOR, 1.0 - RATE_FLOOR),
            EmissionKind::Poisson => rate.max(RATE_FLOOR),
        }
    }

    pub fn check_value(self, x: f64) -> Result<()> {
        let ok = match self {
            EmissionKind::Bernoulli => x == 0.0 || x == 1.0,
            EmissionKind::Poisson => x >= 0.0 && x.fract() == 0.0 && x.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EdgeValue {
                value: x,
                kind: self.name(),
            })
        }
    }
}

impl fmt::Display for EmissionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmissionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" | "binary" => Ok(EmissionKind::Bernoulli),
            "poisson" | "count" => Ok(EmissionKind::Poisson),
            other => Err(Error::Params(format!("unknown emission '{other}'"))),
        }
    }
}

/// One adjacency matrix with its observation mask.
///
/// Diagonal entries are never read. Unobserved entries are stored as zero.
/// Neighbour lists are built once at construction; the VE sweeps and the
/// sufficient statistics only walk nonzero observed entries.
#[derive(Debug, Clone)]
pub struct Network {
    adjacency: Array2<f64>,
    observed: Array2<bool>,
    directed: bool,
    labels: Vec<String>,
    out_edges: Vec<Vec<(usize, f64)>>,
    in_edges: Vec<Vec<(usize, f64)>>,
    missing_out: Vec<Vec<usize>>,
    missing_in: Vec<Vec<usize>>,
    n_observed: usize,
    log_factorial_sum: f64,
}

impl Network {
    /// Fully observed network with default labels `0..n`.
    pub fn new(adjacency: Array2<f64>, directed: bool) -> Result<Self> {
        let n = adjacency.nrows();
        let observed = Array2::from_elem((n, n), true);
        Self::with_mask(adjacency, observed, directed, None)
    }

    pub fn with_mask(
        adjacency: Array2<f64>,
        observed: Array2<bool>,
        directed: bool,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Dimension(format!(
                "adjacency is {}x{}, expected square",
                n,
                adjacency.ncols()
            )));
        }
        if observed.dim() != (n, n) {
            return Err(Error::Dimension(format!(
                "mask is {:?}, adjacency is {n}x{n}",
                observed.dim()
            )));
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::Dimension(format!(
                    "{} labels for {n} nodes",
                    l.len()
                )))
            }
            Some(l) => l,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let mut adjacency = adjacency;
        for i in 0..n {
            for j in 0..n {
                let x = adjacency[[i, j]];
                if i == j || !observed[[i, j]] {
                    adjacency[[i, j]] = 0.0;
                } else if !x.is_finite() || x < 0.0 {
                    return Err(Error::Network(format!(
                        "entry ({i},{j}) = {x} is not a nonnegative number"
                    )));
                }
            }
        }
        if !directed {
            for i in 0..n {
                for j in (i + 1)..n {
                    if observed[[i, j]] != observed[[j, i]]
                        || adjacency[[i, j]] != adjacency[[j, i]]
                    {
                        return Err(Error::Network(format!(
                            "undirected network is asymmetric at ({i},{j})"
                        )));
                    }
                }
            }
        }

        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut missing_out = vec![Vec::new(); n];
        let mut missing_in = vec![Vec::new(); n];
        let mut n_observed = 0;
        let mut log_factorial_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if observed[[i, j]] {
                    n_observed += 1;
                    let x = adjacency[[i, j]];
                    if x != 0.0 {
                        out_edges[i].push((j, x));
                        in_edges[j].push((i, x));
                        if directed || i < j {
                            log_factorial_sum += statrs::function::gamma::ln_gamma(x + 1.0);
                        }
                    }
                } else {
                    missing_out[i].push(j);
                    missing_in[j].push(i);
                }
            }
        }
        if !directed {
            n_observed /= 2;
        }

        Ok(Network {
            adjacency,
            observed,
            directed,
            labels,
            out_edges,
            in_edges,
            missing_out,
            missing_in,
            n_observed,
            log_factorial_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn observed_mask(&self) -> &Array2<bool> {
        &self.observed
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.adjacency[[i, j]]
    }

    /// Off-diagonal and not masked.
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i != j && self.observed[[i, j]]
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out_edges[i]
    }

    pub fn in_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.in_edges[i]
    }

    pub(crate) fn missing_out(&self, i: usize) -> &[usize] {
        &self.missing_out[i]
    }

    pub(crate) fn missing_in(&self, i: usize) -> &[usize] {
        &self.missing_in[i]
    }

    pub fn has_missing(&self) -> bool {
        self.missing_out.iter().any(|v| !v.is_empty())
    }

    /// Number of observed dyads, each unordered pair counted once when undirected.
    pub fn n_observed_dyads(&self) -> usize {
        self.n_observed
    }

    /// Number of possible dyads ignoring the mask: n(n-1), halved when undirected.
    pub fn n_possible_dyads(&self) -> usize {
        let n = self.n();
        let d = n * n.saturating_sub(1);
        if self.directed {
            d
        } else {
            d / 2
        }
    }

    /// Sum of observed edge weights, each unordered pair once when undirected.
    pub fn total_weight(&self) -> f64 {
        let s: f64 = self.out_edges.iter().flatten().map(|&(_, x)| x).sum();
        if self.directed {
            s
        } else {
            s / 2.0
        }
    }

    pub(crate) fn log_factorial_sum(&self) -> f64 {
        self.log_factorial_sum
    }

    /// Out-degree (weighted), or degree when undirected.
    pub fn out_degree(&self, i: usize) -> f64 {
        self.out_edges[i].iter().map(|&(_, x)| x).sum()
    }
}

/// A collection of networks sharing directedness and emission kind.
#[derive(Debug, Clone)]
pub struct NetworkCollection {
    networks: Vec<Network>,
    emission: EmissionKind,
}

impl NetworkCollection {
    pub fn new(networks: Vec<Network>, emission: EmissionKind) -> Result<Self> {
        if networks.is_empty() {
            return Err(Error::Network("a collection needs at least one network".into()));
        }
        let directed = networks[0].directed();
        for (m, net) in networks.iter().enumerate() {
            if net.directed() != directed {
                return Err(Error::Network(format!(
                    "network {m} disagrees on directedness"
                )));
            }
            for i in 0..net.n() {
                for &(_, x) in net.out_edges(i) {
                    emission.check_value(x)?;
                }
            }
        }
        Ok(NetworkCollection { networks, emission })
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    pub fn network(&self, m: usize) -> &Network {
        &self.networks[m]
    }

    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn emission(&self) -> EmissionKind {
        self.emission
    }

    pub fn directed(&self) -> bool {
        self.networks[0].directed()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.networks.iter().map(Network::n).collect()
    }

    pub fn total_nodes(&self) -> usize {
        self.networks.iter().map(Network::n).sum()
    }

    /// Number of possible interactions: sum of n(n-1), halved for undirected collections.
    pub fn n_possible_dyads(&self) -> usize {
        self.networks.iter().map(Network::n_possible_dyads).sum()
    }

    /// Sub-collection with the given network indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> NetworkCollection {
        NetworkCollection {
            networks: indices.iter().map(|&m| self.networks[m].clone()).collect(),
            emission: self.emission,
        }
    }

    /// Copy with network `m` replaced.
    pub fn with_network(&self, m: usize, network: Network) -> Result<NetworkCollection> {
        let mut networks = self.networks.clone();
        networks[m] = network;
        NetworkCollection::new(networks, self.emission)
    }
}
