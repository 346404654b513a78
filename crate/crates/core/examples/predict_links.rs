//! Hide links of one network and score them with joint and separate fits.

use colsbm::model::{ColSbmParams, ModelVariant, SupportMatrix};
use colsbm::network::EmissionKind;
use colsbm::predict::{run_prediction_experiment, MaskMode, PredictConfig};
use colsbm::selection::SearchConfig;
use colsbm::sim::simulate;
use ndarray::array;

fn main() -> colsbm::Result<()> {
    let params = ColSbmParams {
        variant: ModelVariant::Iid,
        support: SupportMatrix::full(3, 3),
        pi: array![[0.4, 0.3, 0.3], [0.4, 0.3, 0.3], [0.4, 0.3, 0.3]],
        alpha: array![[0.7, 0.1, 0.2], [0.1, 0.5, 0.05], [0.2, 0.05, 0.3]],
        delta: vec![1.0; 3],
    };
    let (collection, _) = simulate(&params, &[60, 60, 40], false, EmissionKind::Bernoulli, 5)?;
    let cfg = PredictConfig {
        target_network: 2,
        mode: MaskMode::Links,
        k_grid: vec![0.4, 0.8],
        replicates: 3,
        models: vec![ModelVariant::Iid, ModelVariant::Sep],
        search: SearchConfig {
            q_max: 4,
            ..SearchConfig::default()
        },
        seed: 9,
    };
    let rows = run_prediction_experiment(&collection, &cfg)?;
    colsbm::predict::write_prediction_csv(&rows, std::io::stdout())?;
    Ok(())
}
