//! Parse a netlist document and inspect its nets and terminal statistics.
//!
//! Run with: cargo run --example parse_netlist

use cellclust::fixtures;
use cellclust::netlist::{devices_on_nets, net_statistics, parse_netlist, serialize_netlist};

fn main() -> cellclust::Result<()> {
    let netlist = parse_netlist(fixtures::NAND2_DOC)?;

    println!("devices:");
    for dev in netlist.devices() {
        println!("  {}", dev.device_line());
    }

    println!("\nnet index:");
    for (net, terminals) in netlist.net_index() {
        let occurrences: Vec<String> = terminals
            .iter()
            .map(|(device, terminal)| format!("{device}.{terminal}"))
            .collect();
        println!("  {net}: {}", occurrences.join(", "));
    }

    println!("\nterminal statistics (diffusion P/N, gate P/N, degree):");
    let stats = net_statistics(&netlist);
    for (net, stat) in &stats.0 {
        println!(
            "  {net}: {}/{} {}/{} degree {}",
            stat.diffusion_pmos,
            stat.diffusion_nmos,
            stat.gate_pmos,
            stat.gate_nmos,
            stat.degree()
        );
    }

    let group = devices_on_nets(&netlist, &["OUT".into()])?;
    println!("\ndevices on OUT: {}", group.join(", "));

    // The canonical serialization round-trips exactly.
    let round = parse_netlist(&serialize_netlist(&netlist))?;
    assert_eq!(round, netlist);
    println!("\nserialize/parse round-trip: ok");
    Ok(())
}
