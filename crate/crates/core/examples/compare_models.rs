//! Compare the four joint variants with independent SBMs on one collection.

use colsbm::model::ModelVariant;
use colsbm::selection::{compare_variants, SearchConfig};
use colsbm::sim::scenario::table_s2_collection;

fn main() -> colsbm::Result<()> {
    let (collection, _) = table_s2_collection(0.28, 3)?;
    let cfg = SearchConfig {
        q_max: 5,
        ..SearchConfig::default()
    }
    .with_seed(2);
    let cmp = compare_variants(&collection, &cfg)?;
    for v in ModelVariant::JOINT {
        let s = cmp.search(v).expect("searched");
        println!("{:<8} Q = {}  BIC-L = {:.2}", v.name(), s.q_hat(), s.best.bic_l);
    }
    println!("{:<8} Q = {:?}  BIC-L = {:.2}", "sep", cmp.sep.iter().map(|s| s.q_hat()).collect::<Vec<_>>(), cmp.sep_total);
    println!("selected: {}; common structure: {}", cmp.selected().name(), cmp.common_structure());
    Ok(())
}
