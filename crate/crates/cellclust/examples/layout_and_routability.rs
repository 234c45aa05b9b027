//! Ingest a layout snapshot and routability report; derive break-adjacent nets.
//!
//! Run with: cargo run --example layout_and_routability

use cellclust::fixtures;
use cellclust::layout::{diffusion_break_adjacent_nets, parse_layout};

fn main() -> cellclust::Result<()> {
    let netlist = fixtures::inverter();
    let layout = fixtures::toy_layout();
    println!(
        "layout {}: {} columns x {} rows, {} placed sites",
        layout.cell,
        layout.columns,
        layout.rows,
        layout.placed_count()
    );

    // The toy grid is fully packed, so no net abuts a diffusion break.
    println!(
        "break-adjacent nets: {:?}",
        diffusion_break_adjacent_nets(&layout)
    );

    // Widen the grid so a dummy column separates the sources from the edge.
    let doc = r#"{"cell": "inv", "columns": 3, "rows": 2, "sites": [
        {"x": 1, "y": 0, "net": "VDD", "device": "mp1", "terminal": "s"},
        {"x": 2, "y": 0, "net": "A", "device": "mp1", "terminal": "g"},
        {"x": 1, "y": 1, "net": "VSS", "device": "mn1", "terminal": "s"},
        {"x": 2, "y": 1, "net": "A", "device": "mn1", "terminal": "g"}]}"#;
    let padded = parse_layout(doc, Some(&netlist))?;
    println!(
        "with a leading dummy column: {:?}",
        diffusion_break_adjacent_nets(&padded)
    );

    let report = fixtures::seq_routability();
    for entry in &report.unrouted {
        println!(
            "unrouted {} across x pairs {:?}, region devices {:?}",
            entry.net, entry.terminal_x_pairs, entry.region_devices
        );
    }
    Ok(())
}
