//! Merge new potential clusters and watch duplicate devices resolve.
//!
//! Run with: cargo run --example merge_clusters

use cellclust::cluster::{merge_cluster, shared_net_count, ClusterConstraints, RawConstraints};
use cellclust::fixtures;

fn main() -> cellclust::Result<()> {
    let netlist = fixtures::nand2();

    let current = ClusterConstraints::validated(
        &netlist,
        &RawConstraints(vec![("c1".into(), vec!["mp1".into(), "mn1".into()])]),
    )
    .expect("valid constraints");
    println!("current: {:?}", current.clusters());

    // mn1 is requested for the new cluster but shares more nets with its
    // current cluster-mate mp1 (OUT and A) than with mn2 (net1 only), so it
    // stays put and only mn2 lands in the new cluster.
    let existing = shared_net_count(&netlist, "mn1", &["mp1".into()])?;
    let incoming = shared_net_count(&netlist, "mn1", &["mn2".into()])?;
    println!("mn1 shares {existing} nets with c1, {incoming} with the new group");

    let merged = merge_cluster(&netlist, &current, &["mn1".into(), "mn2".into()])?;
    println!("merged: {:?}", merged.clusters());

    // Merging a cluster that already exists resolves every device away and
    // fails; the caller's state is untouched.
    let err = merge_cluster(&netlist, &merged, &["mn2".into()]).unwrap_err();
    println!("re-merging [mn2]: {err}");
    Ok(())
}
