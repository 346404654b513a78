//! Collection manifests, edge lists, dense matrices and fit artifacts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
use crate::network::{EmissionKind, Network, NetworkCollection};
use crate::vem::Fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Edgelist,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub name: String,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub format: FileFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionManifest {
    pub emission: String,
    pub directed: bool,
    pub networks: Vec<NetworkEntry>,
}

impl CollectionManifest {
    pub fn read(path: &Path) -> Result<CollectionManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
    }

    pub fn emission_kind(&self) -> Result<EmissionKind> {
        self.emission.parse()
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

/// Loads every network listed in a manifest, in manifest order.
pub fn load_collection(manifest_path: &Path) -> Result<(NetworkCollection, Vec<String>)> {
    let manifest = CollectionManifest::read(manifest_path)?;
    let emission = manifest.emission_kind()?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut networks = Vec::with_capacity(manifest.networks.len());
    for entry in &manifest.networks {
        let path = base.join(&entry.path);
        let net = match entry.format {
            FileFormat::Edgelist => read_edgelist(&path, manifest.directed, emission)?,
            FileFormat::Dense => read_dense(&path, manifest.directed, emission)?,
        };
        networks.push(net);
    }
    let names = manifest.networks.iter().map(|e| e.name.clone()).collect();
    Ok((NetworkCollection::new(networks, emission)?, names))
}

fn parse_weight(token: &str, path: &Path, line: usize, emission: EmissionKind) -> Result<Option<f64>> {
    if token == "NA" {
        return Ok(None);
    }
    let x: f64 = token
        .parse()
        .map_err(|_| parse_err(path, format!("line {line}: bad weight {token:?}")))?;
    emission
        .check_value(x)
        .map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
    Ok(Some(x))
}

/// Tab-separated `src dst [weight]` records. Nodes are numbered in order of
/// first appearance; unlisted dyads are 0 and the weight `NA` marks a
/// missing dyad.
pub fn read_edgelist(path: &Path, directed: bool, emission: EmissionKind) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    parse_edgelist(&text, path, directed, emission)
}

pub fn parse_edgelist(text: &str, path: &Path, directed: bool, emission: EmissionKind) -> Result<Network> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut records: HashMap<(usize, usize), (Option<f64>, usize)> = HashMap::new();
    let mut order = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(path, format!("line {line}: expected 2 or 3 tab-separated fields")));
        }
        let mut id = |s: &str| -> usize {
            *index.entry(s.to_string()).or_insert_with(|| {
                labels.push(s.to_string());
                labels.len() - 1
            })
        };
        let (i, j) = (id(fields[0]), id(fields[1]));
        if i == j {
            return Err(parse_err(path, format!("line {line}: self-loop on {:?}", fields[0])));
        }
        let w = match fields.get(2) {
            Some(t) => parse_weight(t.trim(), path, line, emission)?,
            None => Some(1.0),
        };
        if let Some((_, first)) = records.get(&(i, j)) {
            return Err(parse_err(path, format!("line {line}: duplicate edge (first on line {first})")));
        }
        if !directed {
            if let Some((other, first)) = records.get(&(j, i)) {
                if *other != w {
                    return Err(parse_err(
                        path,
                        format!("line {line}: asymmetric undirected edge (reverse on line {first})"),
                    ));
                }
                continue;
            }
        }
        records.insert((i, j), (w, line));
        order.push((i, j));
    }
    let n = labels.len();
    let mut adj = Array2::zeros((n, n));
    let mut mask = Array2::from_elem((n, n), true);
    for (i, j) in order {
        let (w, _) = records[&(i, j)];
        let cells = if directed { vec![(i, j)] } else { vec![(i, j), (j, i)] };
        for (a, b) in cells {
            match w {
                Some(x) => adj[[a, b]] = x,
                None => mask[[a, b]] = false,
            }
        }
    }
    Network::with_mask(adj, mask, directed, Some(labels)).map_err(|e| parse_err(path, e.to_string()))
}

/// Comma-separated square matrix with an optional header row of labels.
pub fn read_dense(path: &Path, directed: bool, emission: EmissionKind) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    parse_dense(&text, path, directed, emission)
}

pub fn parse_dense(text: &str, path: &Path, directed: bool, emission: EmissionKind) -> Result<Network> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    let header_is_labels = rows
        .first()
        .is_some_and(|r| r.iter().any(|t| t != "NA" && t.parse::<f64>().is_err()));
    let labels = header_is_labels.then(|| rows.remove(0));
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) || labels.as_ref().is_some_and(|l| l.len() != n) {
        return Err(parse_err(path, format!("expected a square matrix with {n} columns")));
    }
    let mut adj = Array2::zeros((n, n));
    let mut mask = Array2::from_elem((n, n), true);
    for (i, row) in rows.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            match parse_weight(t, path, i + 1 + usize::from(header_is_labels), emission)? {
                Some(x) => adj[[i, j]] = x,
                None => mask[[i, j]] = false,
            }
        }
    }
    Network::with_mask(adj, mask, directed, labels).map_err(|e| parse_err(path, e.to_string()))
}

/// Writes a network as a tab-separated edge list (upper triangle when undirected).
pub fn write_edgelist(network: &Network, path: &Path) -> Result<()> {
    let mut out = String::new();
    let labels = network.labels();
    let n = network.n();
    for i in 0..n {
        for j in 0..n {
            if i == j || (!network.directed() && j < i) {
                continue;
            }
            if !network.is_observed(i, j) {
                writeln!(out, "{}\t{}\tNA", labels[i], labels[j]).unwrap();
            } else if network.value(i, j) != 0.0 {
                writeln!(out, "{}\t{}\t{}", labels[i], labels[j], network.value(i, j)).unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes every network as `<name>.tsv` next to a manifest at `manifest_path`.
pub fn write_collection(collection: &NetworkCollection, names: &[String], manifest_path: &Path) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (net, name) in collection.networks().iter().zip(names) {
        let file = PathBuf::from(format!("{name}.tsv"));
        write_edgelist(net, &dir.join(&file))?;
        entries.push(NetworkEntry {
            name: name.clone(),
            path: file,
            format: FileFormat::Edgelist,
        });
    }
    let manifest = CollectionManifest {
        emission: collection.emission().name().to_string(),
        directed: collection.directed(),
        networks: entries,
    };
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// Serializable record of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub variant: ModelVariant,
    pub emission: EmissionKind,
    pub directed: bool,
    pub networks: Vec<String>,
    #[serde(rename = "Q")]
    pub q: usize,
    pub support: Vec<Vec<u8>>,
    pub pi: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub memberships: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<Vec<Vec<f64>>>>,
    pub elbo: f64,
    pub bic_l: f64,
    pub converged: bool,
    pub seed: u64,
    pub config: Value,
    pub version: String,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn array_of(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension("ragged matrix in artifact".into()));
    }
    Ok(Array2::from_shape_fn((rows.len(), c), |(i, j)| rows[i][j]))
}

impl FitArtifact {
    #[allow(clippy::too_many_arguments)]
    pub fn from_fit(
        fit: &Fit,
        bic_l: f64,
        collection: &NetworkCollection,
        names: &[String],
        seed: u64,
        config: Value,
        emit_tau: bool,
    ) -> FitArtifact {
        let p = &fit.params;
        FitArtifact {
            variant: p.variant,
            emission: collection.emission(),
            directed: collection.directed(),
            networks: names.to_vec(),
            q: p.n_blocks(),
            support: p.support.to_rows(),
            pi: rows_of(&p.pi),
            alpha: rows_of(&p.alpha),
            delta: p.delta.clone(),
            memberships: fit.state.memberships(),
            tau: emit_tau.then(|| fit.state.tau.iter().map(rows_of).collect()),
            elbo: fit.elbo,
            bic_l,
            converged: fit.converged,
            seed,
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn params(&self) -> Result<ColSbmParams> {
        let rows: Vec<&[u8]> = self.support.iter().map(Vec::as_slice).collect();
        Ok(ColSbmParams {
            variant: self.variant,
            support: SupportMatrix::from_rows(&rows)?,
            pi: array_of(&self.pi)?,
            alpha: array_of(&self.alpha)?,
            delta: self.delta.clone(),
        })
    }

    pub fn state(&self) -> Result<Option<VariationalState>> {
        self.tau
            .as_ref()
            .map(|t| t.iter().map(|m| array_of(m)).collect::<Result<Vec<_>>>().map(VariationalState::new))
            .transpose()
    }
}

/// Canonical JSON: object keys sorted, floats with 17 significant digits,
/// two-space indentation.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, depth: usize, out: &mut String) -> Result<()> {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                out.push_str(&n.to_string());
            } else {
                let x = n.as_f64().expect("json number");
                write!(out, "{x:.16e}").unwrap();
            }
        }
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, depth, out)?;
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (k, x) in items.iter().enumerate() {
                    out.push_str(&pad(depth + 1));
                    write_value(x, depth + 1, out)?;
                    out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(depth));
                out.push(']');
            }
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                write!(out, "{}{}: ", pad(depth + 1), Value::String((*key).clone())).unwrap();
                write_value(&map[*key], depth + 1, out)?;
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
    Ok(())
}

pub fn write_fit(artifact: &FitArtifact, path: &Path) -> Result<()> {
    let finite = artifact.elbo.is_finite() && artifact.bic_l.is_finite();
    if !finite {
        return Err(Error::Params("artifact holds a non-finite bound".into()));
    }
    fs::write(path, to_canonical_json(artifact)?)?;
    Ok(())
}

pub fn read_fit(path: &Path) -> Result<FitArtifact> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}
