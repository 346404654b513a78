//! Partition nine networks into groups with a common connectivity structure.

use colsbm::model::ModelVariant;
use colsbm::partition::clust2coll;
use colsbm::selection::SearchConfig;
use colsbm::sim::ari;
use colsbm::sim::scenario::partition_collection;

fn main() -> colsbm::Result<()> {
    let (collection, groups) = partition_collection(0.4, ModelVariant::Iid, 11)?;
    let cfg = SearchConfig {
        q_max: 5,
        ..SearchConfig::default()
    }
    .with_seed(4);
    let part = clust2coll(&collection, ModelVariant::Iid, &cfg)?;
    println!("groups: {:?}", part.groups);
    println!("ARI against the planted groups: {:.3}", ari(&part.labels(), &groups)?);
    println!("{}", serde_json::to_string_pretty(&part.trace)?);
    Ok(())
}
