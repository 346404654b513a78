//! Run a few replicates of a simulation scenario and print the summary table.
//!
//! Usage: `cargo run --release --example run_benchmark -- table_s1 3`

use colsbm::sim::{run_scenario, Scenario, ScenarioConfig};

fn main() -> colsbm::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("table_s2").parse()?;
    let replicates = args.next().and_then(|r| r.parse().ok()).unwrap_or(2);
    let mut cfg = ScenarioConfig::new(scenario, 1);
    cfg.replicates = replicates;
    let res = run_scenario(&cfg)?;
    res.write_summary_csv(std::io::stdout())?;
    Ok(())
}
