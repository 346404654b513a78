//! Fit the π-colSBM to two simulated networks that each miss a block.

use colsbm::model::ModelVariant;
use colsbm::selection::{model_search, SearchConfig};
use colsbm::sim::scenario::table_s1_collection;

fn main() -> colsbm::Result<()> {
    let (collection, truth) = table_s1_collection(0.24, 7)?;
    let cfg = SearchConfig {
        q_max: 6,
        ..SearchConfig::default()
    }
    .with_seed(1);
    let res = model_search(&collection, ModelVariant::Pi, &cfg)?;
    let fit = &res.best.fit;
    println!("selected Q = {} (BIC-L {:.2}) after {} fits", res.q_hat(), res.best.bic_l, res.n_fits);
    println!("estimated support:\n{:?}", fit.params.support.to_rows());
    println!("true support:\n{:?}", truth.params.support.to_rows());
    println!("alpha:\n{:.3}", fit.params.alpha);
    println!("pi:\n{:.3}", fit.params.pi);
    Ok(())
}
