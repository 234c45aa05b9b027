//! Canonical in-crate fixtures shared by tests, examples, and the golden
//! regeneration command.

use crate::cluster::{ClusterConstraints, RawConstraints};
use crate::layout::{parse_layout, parse_routability, Layout, RoutabilityReport};
use crate::netlist::{parse_netlist, Netlist};

/// Two-input NAND, the worked example used across the crate.
pub const NAND2_DOC: &str = "\
mp1 d:OUT g:A s:VDD pmos
mp2 d:OUT g:B s:VDD pmos
mn1 d:OUT g:A s:net1 nmos
mn2 d:net1 g:B s:VSS nmos
";

/// Single inverter matching [`TOY_LAYOUT_DOC`].
pub const INVERTER_DOC: &str = "\
cell inv
mp1 d:OUT g:A s:VDD pmos
mn1 d:OUT g:A s:VSS nmos
";

/// 2x2 placed grid for the inverter: sources in column 0, gates in column 1.
pub const TOY_LAYOUT_DOC: &str = r#"{
  "cell": "inv",
  "columns": 2,
  "rows": 2,
  "sites": [
    { "x": 0, "y": 0, "net": "VDD", "device": "mp1", "terminal": "s" },
    { "x": 1, "y": 0, "net": "A", "device": "mp1", "terminal": "g" },
    { "x": 0, "y": 1, "net": "VSS", "device": "mn1", "terminal": "s" },
    { "x": 1, "y": 1, "net": "A", "device": "mn1", "terminal": "g" }
  ]
}"#;

/// Routability report with a single unrouted net region.
pub const SEQ_ROUTABILITY_DOC: &str = r#"{
  "unrouted": [
    {
      "net": "NET042",
      "terminal_x_pairs": [[3, 9]],
      "region_devices": ["mm7", "mm9"]
    }
  ]
}"#;

pub fn nand2() -> Netlist {
    parse_netlist(NAND2_DOC).expect("nand2 fixture parses")
}

pub fn inverter() -> Netlist {
    parse_netlist(INVERTER_DOC).expect("inverter fixture parses")
}

pub fn toy_layout() -> Layout {
    let netlist = inverter();
    parse_layout(TOY_LAYOUT_DOC, Some(&netlist)).expect("toy layout fixture parses")
}

pub fn seq_routability() -> RoutabilityReport {
    parse_routability(SEQ_ROUTABILITY_DOC, None).expect("routability fixture parses")
}

/// `{c1: [mp1, mn1], c2: [mp2, mn2]}`, the two-cluster nand2 example
/// scoring 1.0.
pub fn nand2_two_clusters() -> ClusterConstraints {
    let raw = RawConstraints(vec![
        ("c1".into(), vec!["mp1".into(), "mn1".into()]),
        ("c2".into(), vec!["mp2".into(), "mn2".into()]),
    ]);
    ClusterConstraints::validated(&nand2(), &raw).expect("fixture constraints are valid")
}

/// `{c1: [mp1, mp2, mn1, mn2]}`, the one-cluster nand2 example scoring 1.25.
pub fn nand2_one_cluster() -> ClusterConstraints {
    let raw = RawConstraints(vec![(
        "c1".into(),
        vec!["mp1".into(), "mp2".into(), "mn1".into(), "mn2".into()],
    )]);
    ClusterConstraints::validated(&nand2(), &raw).expect("fixture constraints are valid")
}

/// Eight devices forming four inverters with fully disjoint net sets.
///
/// The best partition is the four `{mp_i, mn_i}` pairs, each contributing
/// 0.5 through its common gate, for a total score of 2.0.
pub fn four_inverter_pairs() -> Netlist {
    let mut doc = String::from("cell inv4\n");
    for i in 1..=4 {
        doc.push_str(&format!("mp{i} d:OUT{i} g:IN{i} s:VDD{i} pmos\n"));
        doc.push_str(&format!("mn{i} d:OUT{i} g:IN{i} s:VSS{i} nmos\n"));
    }
    parse_netlist(&doc).expect("four-inverter fixture parses")
}
