//! Simulate a collection, write it to disk with a manifest, read it back and
//! save a fit artifact.

use colsbm::io::{load_collection, read_fit, write_collection, write_fit, FitArtifact};
use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix};
use colsbm::network::EmissionKind;
use colsbm::selection::{model_search, SearchConfig};
use colsbm::sim::simulate;
use ndarray::array;

fn main() -> colsbm::Result<()> {
    let dir = std::env::temp_dir().join("colsbm_example");
    std::fs::create_dir_all(&dir)?;
    let params = ColSbmParams {
        variant: ModelVariant::Delta,
        support: SupportMatrix::full(2, 2),
        pi: array![[0.5, 0.5], [0.5, 0.5]],
        alpha: array![[4.0, 0.5], [0.5, 2.0]],
        delta: vec![1.0, 0.5],
    };
    let (collection, _) = simulate(&params, &[50, 70], true, EmissionKind::Poisson, 1)?;
    let manifest = dir.join("manifest.json");
    write_collection(&collection, &["a".into(), "b".into()], &manifest)?;

    let (loaded, names) = load_collection(&manifest)?;
    let cfg = SearchConfig {
        q_max: 4,
        ..SearchConfig::default()
    };
    let res = model_search(&loaded, ModelVariant::Delta, &cfg)?;
    let artifact = FitArtifact::from_fit(&res.best.fit, res.best.bic_l, &loaded, &names, cfg.seed, serde_json::Value::Null, false);
    let path = dir.join("fit.json");
    write_fit(&artifact, &path)?;
    assert_eq!(read_fit(&path)?, artifact);
    println!("wrote {} (Q = {}, delta = {:.3?})", path.display(), artifact.q, artifact.delta);
    Ok(())
}
