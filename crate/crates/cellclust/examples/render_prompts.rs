//! Render the four deterministic prompt documents.
//!
//! Run with: cargo run --example render_prompts

use cellclust::cluster::cluster_score;
use cellclust::fixtures;
use cellclust::prompts::{
    netlist_topology_prompt, physical_layout_prompt, routability_prompt, system_guidance,
    GuidanceConfig,
};

fn main() -> cellclust::Result<()> {
    let netlist = fixtures::nand2();
    let constraints = fixtures::nand2_two_clusters();
    let breakdown = cluster_score(&netlist, &constraints)?;

    println!("===== system guidance =====");
    print!("{}", system_guidance(&GuidanceConfig::default()));

    println!("\n===== netlist topology =====");
    print!(
        "{}",
        netlist_topology_prompt(&netlist, &constraints, &breakdown)
    );

    println!("\n===== physical layout =====");
    print!("{}", physical_layout_prompt(&fixtures::toy_layout()));

    println!("\n===== routability =====");
    print!("{}", routability_prompt(&fixtures::seq_routability()));
    Ok(())
}
