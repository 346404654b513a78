//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{load_collection, to_canonical_json, write_collection, write_fit, FitArtifact};
use crate::model::{ColSbmParams, ModelVariant, SupportMatrix};
use crate::network::{EmissionKind, NetworkCollection};
use crate::partition::clust2coll;
use crate::predict::{run_prediction_experiment, write_prediction_csv, MaskMode, PredictConfig};
use crate::selection::{compare_variants, model_search, SearchConfig};
use crate::sim::{run_scenario, simulate, Scenario, ScenarioConfig};

/// Exit code for a run that finished without converging.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "colsbm", version, about = "Joint stochastic block models for network collections")]
pub struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one colSBM variant with model selection.
    Fit(FitArgs),
    /// Compare the four joint variants with separate SBMs.
    Compare(FitArgs),
    /// Partition a collection into groups sharing a structure.
    Cluster(FitArgs),
    /// Masking experiment on one network of the collection.
    Predict(PredictArgs),
    /// Draw a collection from a parameter file.
    Simulate(SimulateArgs),
    /// Run a simulation scenario.
    Benchmark(BenchmarkArgs),
    /// Block-sorted adjacency matrices and connectivity as CSV.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 1)]
    pub qmin: usize,
    #[arg(long, default_value_t = 8)]
    pub qmax: usize,
    #[arg(long, default_value_t = 3)]
    pub best_k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.001,0.01,0.05,0.1")]
    pub thresholds: Vec<f64>,
    #[arg(long, env = "COLSBM_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        let cfg = SearchConfig {
            q_min: self.qmin,
            q_max: self.qmax,
            best_k: self.best_k,
            thresholds: self.thresholds.clone(),
            ..SearchConfig::default()
        }
        .with_seed(self.seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Collection manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "iid")]
    pub model: String,
    /// Overrides the manifest's emission.
    #[arg(long)]
    pub emission: Option<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Include τ in the artifact.
    #[arg(long)]
    pub emit_tau: bool,
    #[arg(long, short)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Index of the masked network.
    #[arg(long, default_value_t = 0)]
    pub target: usize,
    #[arg(long, default_value = "links")]
    pub mask_mode: String,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.4,0.6,0.8")]
    pub k_grid: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "iid,pi,sep")]
    pub models: Vec<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, short)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Parameter file (JSON).
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, env = "COLSBM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving the manifest, edge lists and truth.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub scenario: String,
    /// Ten replicates instead of the default.
    #[arg(long)]
    pub fast: bool,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, env = "COLSBM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fit artifact produced by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parameters of the `simulate` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub variant: ModelVariant,
    pub emission: EmissionKind,
    pub directed: bool,
    pub sizes: Vec<usize>,
    pub pi: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
}

impl SimulationSpec {
    pub fn params(&self) -> Result<ColSbmParams> {
        let m = self.pi.len();
        let q = self.alpha.len();
        if self.pi.iter().any(|r| r.len() != q) || self.alpha.iter().any(|r| r.len() != q) {
            return Err(Error::Dimension("pi rows and alpha must have Q columns".into()));
        }
        let pi = Array2::from_shape_fn((m, q), |(a, b)| self.pi[a][b]);
        Ok(ColSbmParams {
            variant: self.variant,
            support: SupportMatrix::new(pi.mapv(|x| x > 0.0))?,
            pi,
            alpha: Array2::from_shape_fn((q, q), |(a, b)| self.alpha[a][b]),
            delta: self.delta.clone().unwrap_or_else(|| vec![1.0; m]),
        })
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return 1;
        }
    }
    match run(&cli.command) {
        Ok(true) => 0,
        Ok(false) => EXIT_NOT_CONVERGED,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one command; `Ok(false)` means it completed without converging.
pub fn run(command: &Command) -> Result<bool> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Compare(a) => compare(a),
        Command::Cluster(a) => cluster(a),
        Command::Predict(a) => predict(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Benchmark(a) => benchmark(a),
        Command::PlotData(a) => plot_data(a),
    }
}

fn load(manifest: &Path, emission: Option<&str>) -> Result<(NetworkCollection, Vec<String>)> {
    let (col, names) = load_collection(manifest)?;
    match emission {
        Some(e) => {
            let kind: EmissionKind = e.parse()?;
            Ok((NetworkCollection::new(col.networks().to_vec(), kind)?, names))
        }
        None => Ok((col, names)),
    }
}

fn echo<T: Serialize>(command: &str, args: &T) -> Result<serde_json::Value> {
    Ok(json!({ "command": command, "args": serde_json::to_value(args)? }))
}

fn fit(a: &FitArgs) -> Result<bool> {
    let variant: ModelVariant = a.model.parse()?;
    let (col, names) = load(&a.manifest, a.emission.as_deref())?;
    let res = model_search(&col, variant, &a.search.config()?)?;
    let art = FitArtifact::from_fit(&res.best.fit, res.best.bic_l, &col, &names, a.search.seed, echo("fit", a)?, a.emit_tau);
    write_fit(&art, &a.out)?;
    Ok(res.best.fit.converged)
}

fn compare(a: &FitArgs) -> Result<bool> {
    let (col, names) = load(&a.manifest, a.emission.as_deref())?;
    let cmp = compare_variants(&col, &a.search.config()?)?;
    let variants: Vec<_> = cmp
        .searches
        .iter()
        .map(|s| json!({"variant": s.variant, "bic_l": s.best.bic_l, "q_hat": s.q_hat(), "converged": s.best.fit.converged}))
        .collect();
    let sep: Vec<_> = cmp
        .sep
        .iter()
        .map(|s| json!({"network": names[s.network], "bic_l": s.best_fit().bic_l, "q_hat": s.q_hat()}))
        .collect();
    let report = json!({
        "variants": variants,
        "sep": sep,
        "sep_total": cmp.sep_total,
        "selected": cmp.selected(),
        "common_structure": cmp.common_structure(),
        "config": echo("compare", a)?,
        "seed": a.search.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(&a.out, to_canonical_json(&report)?)?;
    Ok(cmp.searches.iter().all(|s| s.best.fit.converged))
}

fn cluster(a: &FitArgs) -> Result<bool> {
    let variant: ModelVariant = a.model.parse()?;
    let (col, names) = load(&a.manifest, a.emission.as_deref())?;
    let part = clust2coll(&col, variant, &a.search.config()?)?;
    let groups: Vec<Vec<&str>> = part
        .groups
        .iter()
        .map(|g| g.iter().map(|&m| names[m].as_str()).collect())
        .collect();
    let q: Vec<usize> = part.group_fits.iter().map(|f| f.n_blocks()).collect();
    let report = json!({
        "groups": groups,
        "labels": part.labels(),
        "group_q": q,
        "score": part.score,
        "dendrogram": part.trace,
        "config": echo("cluster", a)?,
        "seed": a.search.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(&a.out, to_canonical_json(&report)?)?;
    Ok(part.group_fits.iter().all(|f| f.fit.converged))
}

fn predict(a: &PredictArgs) -> Result<bool> {
    let (col, _) = load(&a.manifest, None)?;
    let models = a.models.iter().map(|m| m.parse()).collect::<Result<Vec<ModelVariant>>>()?;
    let cfg = PredictConfig {
        target_network: a.target,
        mode: a.mask_mode.parse::<MaskMode>()?,
        k_grid: a.k_grid.clone(),
        replicates: a.replicates,
        models,
        search: a.search.config()?,
        seed: a.search.seed,
    };
    let rows = run_prediction_experiment(&col, &cfg)?;
    write_prediction_csv(&rows, fs::File::create(&a.out)?)?;
    Ok(true)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<bool> {
    let spec: SimulationSpec = serde_json::from_str(&fs::read_to_string(&a.params)?)?;
    let params = spec.params()?;
    let (col, truth) = simulate(&params, &spec.sizes, spec.directed, spec.emission, a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let names: Vec<String> = (0..col.len()).map(|m| format!("network_{m}")).collect();
    write_collection(&col, &names, &a.out_dir.join("manifest.json"))?;
    let truth_json = json!({
        "memberships": truth.memberships,
        "spec": spec,
        "config": echo("simulate", a)?,
        "seed": a.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(a.out_dir.join("truth.json"), to_canonical_json(&truth_json)?)?;
    Ok(true)
}

fn benchmark(a: &BenchmarkArgs) -> Result<bool> {
    let scenario: Scenario = a.scenario.parse()?;
    let mut cfg = ScenarioConfig::new(scenario, a.seed);
    if a.fast {
        cfg.replicates = 10;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    let res = run_scenario(&cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    res.write_tidy_csv(fs::File::create(a.out_dir.join(format!("{scenario}_tidy.csv")))?)?;
    res.write_summary_csv(fs::File::create(a.out_dir.join(format!("{scenario}_summary.csv")))?)?;
    Ok(true)
}

fn plot_data(a: &PlotDataArgs) -> Result<bool> {
    let (col, names) = load(&a.manifest, None)?;
    let art = crate::io::read_fit(&a.fit)?;
    if art.memberships.len() != col.len() {
        return Err(Error::Dimension("fit and manifest disagree on the number of networks".into()));
    }
    fs::create_dir_all(&a.out_dir)?;
    for (m, net) in col.networks().iter().enumerate() {
        let z = &art.memberships[m];
        if z.len() != net.n() {
            return Err(Error::Dimension(format!("network {m}: {} memberships for {} nodes", z.len(), net.n())));
        }
        let mut order: Vec<usize> = (0..net.n()).collect();
        order.sort_by_key(|&i| (z[i], i));
        let mut w = csv::Writer::from_path(a.out_dir.join(format!("{}_sorted.csv", names[m])))?;
        let mut header = vec!["node".to_string(), "block".to_string()];
        header.extend(order.iter().map(|&j| net.labels()[j].clone()));
        w.write_record(&header)?;
        for &i in &order {
            let mut rec = vec![net.labels()[i].clone(), z[i].to_string()];
            rec.extend(order.iter().map(|&j| {
                if i != j && !net.is_observed(i, j) {
                    "NA".to_string()
                } else {
                    net.value(i, j).to_string()
                }
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_path(a.out_dir.join("alpha.csv"))?;
    w.write_record(["row_block", "col_block", "alpha"])?;
    for (q, row) in art.alpha.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            w.write_record([q.to_string(), l.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(a.out_dir.join("pi.csv"))?;
    w.write_record(["network", "block", "pi"])?;
    for (m, row) in art.pi.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            w.write_record([names[m].clone(), q.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(true)
}
