//! Externally produced layout snapshots and routability reports.
//!
//! A layout is a coordinate grid: x in half contacted-poly-pitch units, y in
//! half cell-row units. Each occupied site names the net, device, and
//! terminal placed there; coordinates absent from the document are dummy
//! sites. Layouts and routability reports are ingested for prompting and
//! net weighting, never produced.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{Netlist, Terminal};

/// A non-dummy grid site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedSite {
    pub net: String,
    pub device: String,
    pub terminal: Terminal,
}

/// Placed-terminal grid for one cell. Immutable after parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub cell: String,
    pub columns: usize,
    pub rows: usize,
    sites: BTreeMap<(usize, usize), PlacedSite>,
}

#[derive(Serialize, Deserialize)]
struct SiteDoc {
    x: usize,
    y: usize,
    net: String,
    device: String,
    terminal: Terminal,
}

#[derive(Serialize, Deserialize)]
struct LayoutDoc {
    cell: String,
    columns: usize,
    rows: usize,
    sites: Vec<SiteDoc>,
}

impl Layout {
    pub fn new(
        cell: String,
        columns: usize,
        rows: usize,
        placed: Vec<(usize, usize, PlacedSite)>,
    ) -> Result<Self> {
        let mut sites = BTreeMap::new();
        for (x, y, site) in placed {
            if x >= columns || y >= rows {
                return Err(Error::SiteOutOfBounds {
                    x,
                    y,
                    columns,
                    rows,
                });
            }
            if sites.insert((x, y), site).is_some() {
                return Err(Error::DuplicateSite { x, y });
            }
        }
        Ok(Layout {
            cell,
            columns,
            rows,
            sites,
        })
    }

    /// The placed site at `(x, y)`, or `None` for a dummy coordinate.
    pub fn site(&self, x: usize, y: usize) -> Option<&PlacedSite> {
        self.sites.get(&(x, y))
    }

    /// True when the in-bounds coordinate holds no placed terminal.
    pub fn is_dummy(&self, x: usize, y: usize) -> bool {
        !self.sites.contains_key(&(x, y))
    }

    /// Placed sites in column-major order (x ascending, then y).
    pub fn placed_sites(&self) -> impl Iterator<Item = (usize, usize, &PlacedSite)> {
        self.sites.iter().map(|(&(x, y), site)| (x, y, site))
    }

    pub fn placed_count(&self) -> usize {
        self.sites.len()
    }

    /// Checks every site against the netlist: the device must exist and the
    /// site's net must equal the device's net at the stated terminal.
    pub fn validate_against(&self, netlist: &Netlist) -> Result<()> {
        for (x, y, site) in self.placed_sites() {
            let dev =
                netlist
                    .device(&site.device)
                    .ok_or_else(|| Error::SiteContradictsNetlist {
                        x,
                        y,
                        detail: format!("device {} not in netlist", site.device),
                    })?;
            let expected = dev.terminal_net(site.terminal);
            if expected != site.net {
                return Err(Error::SiteContradictsNetlist {
                    x,
                    y,
                    detail: format!(
                        "net {} at {}.{} but the netlist has {}",
                        site.net, site.device, site.terminal, expected
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Parses layout JSON, optionally cross-checking sites against a netlist.
pub fn parse_layout(text: &str, netlist: Option<&Netlist>) -> Result<Layout> {
    let doc: LayoutDoc = serde_json::from_str(text)?;
    let placed = doc
        .sites
        .into_iter()
        .map(|s| {
            (
                s.x,
                s.y,
                PlacedSite {
                    net: s.net,
                    device: s.device,
                    terminal: s.terminal,
                },
            )
        })
        .collect();
    let layout = Layout::new(doc.cell, doc.columns, doc.rows, placed)?;
    if let Some(n) = netlist {
        layout.validate_against(n)?;
    }
    Ok(layout)
}

/// Serializes a layout back to JSON with sites in column-major order.
pub fn serialize_layout(layout: &Layout) -> String {
    let doc = LayoutDoc {
        cell: layout.cell.clone(),
        columns: layout.columns,
        rows: layout.rows,
        sites: layout
            .placed_sites()
            .map(|(x, y, site)| SiteDoc {
                x,
                y,
                net: site.net.clone(),
                device: site.device.clone(),
                terminal: site.terminal,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("layout serializes")
}

/// Nets on source/drain sites horizontally adjacent to a dummy site.
///
/// Only explicit in-grid dummy coordinates count as diffusion breaks; grid
/// edges do not, and gate sites never qualify.
pub fn diffusion_break_adjacent_nets(layout: &Layout) -> BTreeSet<String> {
    let mut nets = BTreeSet::new();
    for (x, y, site) in layout.placed_sites() {
        if !site.terminal.is_diffusion() {
            continue;
        }
        let left_dummy = x > 0 && layout.is_dummy(x - 1, y);
        let right_dummy = x + 1 < layout.columns && layout.is_dummy(x + 1, y);
        if left_dummy || right_dummy {
            nets.insert(site.net.clone());
        }
    }
    nets
}

/// One unrouted net with its terminal x-coordinate pairs and the devices
/// placed inside the unrouted region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnroutedNet {
    pub net: String,
    pub terminal_x_pairs: Vec<(i64, i64)>,
    pub region_devices: Vec<String>,
}

/// Routability report from the external router; empty means fully routed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutabilityReport {
    pub unrouted: Vec<UnroutedNet>,
}

impl RoutabilityReport {
    pub fn unrouted_net_names(&self) -> BTreeSet<&str> {
        self.unrouted.iter().map(|u| u.net.as_str()).collect()
    }
}

/// Parses a routability report, optionally resolving names against a netlist.
pub fn parse_routability(text: &str, netlist: Option<&Netlist>) -> Result<RoutabilityReport> {
    let report: RoutabilityReport = serde_json::from_str(text)?;
    for entry in &report.unrouted {
        for &(x1, x2) in &entry.terminal_x_pairs {
            if x1 > x2 {
                return Err(Error::InvalidTerminalPair {
                    net: entry.net.clone(),
                    x1,
                    x2,
                });
            }
        }
        if let Some(n) = netlist {
            let mut unknown_nets = Vec::new();
            if !n.contains_net(&entry.net) {
                unknown_nets.push(entry.net.clone());
            }
            if !unknown_nets.is_empty() {
                return Err(Error::UnknownNets {
                    names: unknown_nets,
                });
            }
            let unknown_devices: Vec<String> = entry
                .region_devices
                .iter()
                .filter(|d| !n.contains_device(d))
                .cloned()
                .collect();
            if !unknown_devices.is_empty() {
                return Err(Error::UnknownDevices {
                    names: unknown_devices,
                });
            }
        }
    }
    Ok(report)
}

pub fn serialize_routability(report: &RoutabilityReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Externally reported cell metrics, ingested for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    pub cell_width_cpp: u64,
    pub total_wirelength: u64,
}

pub fn parse_metrics(text: &str) -> Result<LayoutMetrics> {
    Ok(serde_json::from_str(text)?)
}
