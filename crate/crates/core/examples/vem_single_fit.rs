//! One variational EM run from a spectral start, with the bound trace.

use colsbm::model::{ModelVariant, SupportMatrix, VariationalState};
use colsbm::network::EmissionKind;
use colsbm::sim::{ari, scenario::table_s2_collection};
use colsbm::vem::{random_labels, run_vem, SpectralEmbedding, VemConfig};

fn main() -> colsbm::Result<()> {
    let (collection, truth) = table_s2_collection(0.0, 21)?;
    assert_eq!(collection.emission(), EmissionKind::Bernoulli);
    let mut rng = colsbm::rng::rng(3);
    let labels: Vec<Vec<usize>> = collection
        .networks()
        .iter()
        .enumerate()
        .map(|(m, net)| {
            if m == 0 {
                SpectralEmbedding::new(net).labels(3, &mut rng)
            } else {
                random_labels(net.n(), 3, &mut rng)
            }
        })
        .collect();
    let tau = VariationalState::from_labels(&labels, 3);
    let fit = run_vem(&collection, ModelVariant::Iid, &SupportMatrix::full(2, 3), &tau, &VemConfig::default())?;
    println!("converged: {} in {} iterations", fit.converged, fit.n_iterations);
    println!("bound trace: {:.3?}", fit.elbo_trace);
    let z = fit.state.memberships();
    for m in 0..2 {
        println!("network {m}: ARI {:.3}", ari(&z[m], &truth.memberships[m])?);
    }
    Ok(())
}
