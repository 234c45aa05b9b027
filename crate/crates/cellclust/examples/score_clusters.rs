//! Score device clusterings and inspect the per-cluster decomposition.
//!
//! Run with: cargo run --example score_clusters

use cellclust::cluster::cluster_score;
use cellclust::fixtures;

fn main() -> cellclust::Result<()> {
    let netlist = fixtures::nand2();

    // One cluster holding the whole cell: three diffusion pairs (OUT, VDD,
    // net1) plus two common gates (A, B) over four devices.
    let one = fixtures::nand2_one_cluster();
    let breakdown = cluster_score(&netlist, &one)?;
    println!("one cluster: total {}", breakdown.total);
    for (name, cs) in &breakdown.per_cluster {
        println!(
            "  {name}: diffusion_pairs={} common_gates={} devices={} contribution={}",
            cs.diffusion_pairs, cs.common_gates, cs.devices, cs.contribution
        );
    }

    // Split by input: each cluster keeps one common gate.
    let two = fixtures::nand2_two_clusters();
    let breakdown = cluster_score(&netlist, &two)?;
    println!("two clusters: total {}", breakdown.total);
    for (name, cs) in &breakdown.per_cluster {
        println!(
            "  {name}: diffusion_pairs={} common_gates={} devices={} contribution={}",
            cs.diffusion_pairs, cs.common_gates, cs.devices, cs.contribution
        );
    }

    println!(
        "\nconstraints interchange blob:\n{}",
        two.to_final_answer_json()
    );
    Ok(())
}
