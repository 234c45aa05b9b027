//! Anneal cluster constraints on a synthetic four-inverter cell.
//!
//! Run with: cargo run --example sa_optimize

use cellclust::cluster::ClusterConstraints;
use cellclust::fixtures;
use cellclust::optimize::{run_sa, SAConfig};
use cellclust::tools::Session;

fn main() -> cellclust::Result<()> {
    let netlist = fixtures::four_inverter_pairs();
    let session = Session::new(netlist, ClusterConstraints::empty(), None, None)?;

    // Single-net moves are enough here: every inverter pair is reachable by
    // sampling its input or output net.
    let config = SAConfig {
        total_iterations: 2000,
        k_max: 1,
        seed: 7,
        ..SAConfig::default()
    };
    let run = run_sa(session, &config)?;

    println!("summary: {:?}", run.summary);
    println!(
        "best constraints:\n{}",
        run.best_constraints.to_final_answer_json()
    );
    assert_eq!(
        run.best_score, 2.0,
        "four gate-sharing pairs score 0.5 each"
    );
    Ok(())
}
