//! Knowledge extraction: deterministic prompt documents for the agent.
//!
//! All builders are pure text renderers; byte-stable output is pinned by the
//! golden files under `goldens/`.

use std::fmt::Write as _;

use crate::cluster::{ClusterConstraints, ScoreBreakdown};
use crate::layout::{Layout, RoutabilityReport};
use crate::netlist::Netlist;

/// Designer-expertise preamble; the wording is configurable because each
/// team phrases its own guidance.
#[derive(Debug, Clone)]
pub struct GuidanceConfig {
    pub guidance_text: String,
}

pub const DEFAULT_GUIDANCE: &str = "\
You are an expert standard cell layout designer. Your task is to improve the
device cluster constraints for a transistor-level netlist so the layout
generator can build a smaller, routable cell.

Design guidance:
- Diffusion sharing: devices in the same cluster that share source/drain
  nets can share diffusion, reducing diffusion breaks and cell area.
- High-connection nets: devices connected to nets with many terminals are
  strong clustering candidates.
- Routability: in regions with unrouted nets, reduce pin density by
  clustering devices that share common terminals across PMOS and NMOS,
  enabling common gates and diffusion sharing.
";

const TOOL_USAGE_AND_SCAFFOLD: &str = "\
You interact with the netlist through four tools: evaluate_clusters,
get_group_devices_from_nets, save_potential_cluster, get_best_cluster_result.

Work in repeated Thought-Action-Observation steps. In each step, write your
reasoning after \"Thought:\", then choose exactly one action as a JSON blob:

{\"action\": \"<tool name>\", \"action_input\": <arguments object>}

The tool output appears after \"Observation:\". When the constraints are good
enough, finish with the \"Final Answer\" action whose action_input is the
cluster constraints:

{\"action\": \"Final Answer\", \"action_input\": {\"<cluster name>\": [\"<device name>\", ...]}}
";

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            guidance_text: DEFAULT_GUIDANCE.to_string(),
        }
    }
}

/// Scores are printed with three decimals, round-half-even.
pub fn format_score(score: f64) -> String {
    format!("{score:.3}")
}

/// Guidance text followed by the fixed tool-usage and scaffold description.
pub fn system_guidance(config: &GuidanceConfig) -> String {
    let mut out = config.guidance_text.clone();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push('\n');
    out.push_str(TOOL_USAGE_AND_SCAFFOLD);
    out
}

/// Device lines, the previous constraints as a Final-Answer blob, and the
/// score summary.
pub fn netlist_topology_prompt(
    netlist: &Netlist,
    constraints: &ClusterConstraints,
    score: &ScoreBreakdown,
) -> String {
    let mut out = String::from("MOSFET connection and description:\n");
    for dev in netlist.devices() {
        out.push_str(&dev.device_line());
        out.push('\n');
    }
    out.push_str("\nPrevious cluster constraints:\n");
    out.push_str(&constraints.to_final_answer_json());
    out.push('\n');
    let _ = write!(
        out,
        "\nCluster score: {}\nNumber of clusters: {}\n",
        format_score(score.total),
        constraints.len()
    );
    out
}

/// One line per coordinate in column-major order; dummies rendered as such.
pub fn physical_layout_prompt(layout: &Layout) -> String {
    let mut out = format!(
        "Physical layout (x unit: half CPP, y unit: half cell row; {} columns, {} rows):\n",
        layout.columns, layout.rows
    );
    for x in 0..layout.columns {
        for y in 0..layout.rows {
            match layout.site(x, y) {
                Some(site) => {
                    let _ = writeln!(
                        out,
                        "(x={x}, y={y}): net={} device={} terminal={}",
                        site.net, site.device, site.terminal
                    );
                }
                None => {
                    let _ = writeln!(out, "(x={x}, y={y}): net=dummy device=dummy terminal=-");
                }
            }
        }
    }
    out
}

/// Unrouted nets with their terminal x-pairs and in-region devices.
pub fn routability_prompt(report: &RoutabilityReport) -> String {
    let mut out = String::from("Routability report:\n");
    if report.unrouted.is_empty() {
        out.push_str("All nets routed.\n");
        return out;
    }
    for entry in &report.unrouted {
        let pairs = entry
            .terminal_x_pairs
            .iter()
            .map(|(x1, x2)| format!("({x1}, {x2})"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            out,
            "Unrouted net {}: terminal x-coordinate pairs: {pairs}",
            entry.net
        );
        let devices = if entry.region_devices.is_empty() {
            "none".to_string()
        } else {
            entry.region_devices.join(", ")
        };
        let _ = writeln!(out, "Devices in unrouted region: {devices}");
    }
    out
}
