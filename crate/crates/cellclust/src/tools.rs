//! The four agent-facing netlist tools and the session state behind them.
//!
//! A [`Session`] holds the netlist, the optional layout and routability
//! snapshots, and an append-only history of saved cluster states.
//! `save_potential_cluster` is the only state-mutating tool;
//! `get_best_cluster_result` restores the best snapshot by appending a copy.
//! Failed calls never mutate the session, so the agent can probe safely.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cluster::{
    cluster_score, merge_cluster, ClusterConstraints, RawConstraints, ScoreBreakdown,
};
use crate::error::{Error, Result};
use crate::layout::{serialize_layout, serialize_routability, Layout, RoutabilityReport};
use crate::netlist::{devices_on_nets, serialize_netlist, Netlist};
use crate::prompts::format_score;

/// A parsed tool invocation with schema-checked arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tool", content = "arguments", rename_all = "snake_case")]
pub enum ToolCall {
    /// Score the supplied constraints, or the current ones when omitted.
    EvaluateClusters {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraints: Option<RawConstraints>,
    },
    /// List the devices touching any of the given nets.
    GetGroupDevicesFromNets { nets: Vec<String> },
    /// Merge a new potential cluster into the current constraints.
    SavePotentialCluster { devices: Vec<String> },
    /// Restore the best-scoring snapshot from the history.
    GetBestClusterResult {},
}

impl ToolCall {
    pub fn name(&self) -> &'static str {
        match self {
            ToolCall::EvaluateClusters { .. } => "evaluate_clusters",
            ToolCall::GetGroupDevicesFromNets { .. } => "get_group_devices_from_nets",
            ToolCall::SavePotentialCluster { .. } => "save_potential_cluster",
            ToolCall::GetBestClusterResult {} => "get_best_cluster_result",
        }
    }
}

/// Static descriptor for one tool, embedded in the system prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ToolSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub arguments: &'static str,
}

/// The four tools, in stable order.
pub fn list_tools() -> [ToolSpec; 4] {
    [
        ToolSpec {
            name: "evaluate_clusters",
            description: "Evaluate the quality of cluster constraints with the simple cluster \
                          score. Omit \"constraints\" to evaluate the current constraints.",
            arguments: r#"{"constraints": {"<cluster name>": ["<device name>", ...]}}"#,
        },
        ToolSpec {
            name: "get_group_devices_from_nets",
            description: "Return the group of devices connected to an arbitrary set of nets.",
            arguments: r#"{"nets": ["<net name>", ...]}"#,
        },
        ToolSpec {
            name: "save_potential_cluster",
            description: "Save a new potential cluster; devices already in another cluster are \
                          kept where they share more nets. Returns the current clusters and \
                          cluster score.",
            arguments: r#"{"devices": ["<device name>", ...]}"#,
        },
        ToolSpec {
            name: "get_best_cluster_result",
            description: "Restore and return the saved cluster constraints with the best \
                          cluster score.",
            arguments: r#"{}"#,
        },
    ]
}

/// Renders the tool list as a prompt section.
pub fn render_tool_descriptors() -> String {
    let mut out = String::from("Available tools:\n");
    for spec in list_tools() {
        let _ = writeln!(
            out,
            "- {}: {} Arguments: {}",
            spec.name, spec.description, spec.arguments
        );
    }
    out
}

/// Rendered result of a tool call; `ok = false` leaves the session untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub ok: bool,
}

/// One saved cluster state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub constraints: ClusterConstraints,
    pub score: ScoreBreakdown,
}

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    /// Header: everything needed to rebuild snapshot 0.
    Session {
        netlist: String,
        layout: Option<serde_json::Value>,
        routability: Option<serde_json::Value>,
        constraints: RawConstraints,
    },
    Call {
        #[serde(flatten)]
        call: ToolCall,
        ok: bool,
        observation: String,
        score_after: f64,
    },
    Summary {
        rejected_moves: u64,
    },
}

/// Netlist plus optional layout/routability and the saved-state history.
///
/// Confined to one logical thread of control; clone for parallel runs.
#[derive(Debug, Clone)]
pub struct Session {
    netlist: Netlist,
    layout: Option<Layout>,
    routability: Option<RoutabilityReport>,
    history: Vec<Snapshot>,
    log: Vec<LogRecord>,
}

impl Session {
    /// Initializes a session; snapshot 0 holds the initial constraints.
    pub fn new(
        netlist: Netlist,
        constraints: ClusterConstraints,
        layout: Option<Layout>,
        routability: Option<RoutabilityReport>,
    ) -> Result<Self> {
        let score = cluster_score(&netlist, &constraints)?;
        if let Some(l) = &layout {
            l.validate_against(&netlist)?;
        }
        let header = LogRecord::Session {
            netlist: serialize_netlist(&netlist),
            layout: layout
                .as_ref()
                .map(|l| serde_json::from_str(&serialize_layout(l)).expect("layout json")),
            routability: routability
                .as_ref()
                .map(|r| serde_json::from_str(&serialize_routability(r)).expect("report json")),
            constraints: constraints.to_raw(),
        };
        Ok(Session {
            netlist,
            layout,
            routability,
            history: vec![Snapshot { constraints, score }],
            log: vec![header],
        })
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn routability(&self) -> Option<&RoutabilityReport> {
        self.routability.as_ref()
    }

    pub fn current(&self) -> &ClusterConstraints {
        &self.history.last().expect("history nonempty").constraints
    }

    pub fn current_score(&self) -> &ScoreBreakdown {
        &self.history.last().expect("history nonempty").score
    }

    pub fn history(&self) -> &[Snapshot] {
        &self.history
    }

    /// Index and snapshot with the highest score; ties go to the earliest.
    pub fn best_snapshot(&self) -> (usize, &Snapshot) {
        let mut best = 0;
        for (i, snap) in self.history.iter().enumerate() {
            if snap.score.total > self.history[best].score.total {
                best = i;
            }
        }
        (best, &self.history[best])
    }

    /// Dispatches a tool call. Errors come back as `ok = false` observations
    /// with the session unchanged; every call is appended to the log.
    pub fn invoke(&mut self, call: &ToolCall) -> Observation {
        let result = self.dispatch(call);
        let observation = match result {
            Ok(text) => Observation { text, ok: true },
            Err(err) => Observation {
                text: err.to_string(),
                ok: false,
            },
        };
        self.log.push(LogRecord::Call {
            call: call.clone(),
            ok: observation.ok,
            observation: observation.text.clone(),
            score_after: self.current_score().total,
        });
        observation
    }

    fn dispatch(&mut self, call: &ToolCall) -> Result<String> {
        match call {
            ToolCall::EvaluateClusters { constraints } => {
                let (cc, sb) = match constraints {
                    Some(raw) => {
                        let cc = ClusterConstraints::validated(&self.netlist, raw)
                            .map_err(Error::InvalidConstraints)?;
                        let sb = cluster_score(&self.netlist, &cc)?;
                        (cc, sb)
                    }
                    None => {
                        let last = self.history.last().expect("history nonempty");
                        (last.constraints.clone(), last.score.clone())
                    }
                };
                Ok(render_evaluation(&cc, &sb))
            }
            ToolCall::GetGroupDevicesFromNets { nets } => {
                if nets.is_empty() {
                    return Err(Error::InvalidConfig("nets must be nonempty".into()));
                }
                let devices = devices_on_nets(&self.netlist, nets)?;
                Ok(devices.join(", "))
            }
            ToolCall::SavePotentialCluster { devices } => {
                let merged = merge_cluster(&self.netlist, self.current(), devices)?;
                let score = cluster_score(&self.netlist, &merged)?;
                let text = format!(
                    "Saved. Current cluster constraints:\n{}\nCluster score: {}",
                    merged.to_final_answer_json(),
                    format_score(score.total)
                );
                self.history.push(Snapshot {
                    constraints: merged,
                    score,
                });
                Ok(text)
            }
            ToolCall::GetBestClusterResult {} => {
                let (index, snap) = self.best_snapshot();
                let snap = snap.clone();
                let text = format!(
                    "Restored best cluster constraints (snapshot {index}):\n{}\nCluster score: {}",
                    snap.constraints.to_final_answer_json(),
                    format_score(snap.score.total)
                );
                self.history.push(snap);
                Ok(text)
            }
        }
    }

    /// Appends the rejected-move counter recorded by annealing runs.
    pub fn append_summary(&mut self, rejected_moves: u64) {
        self.log.push(LogRecord::Summary { rejected_moves });
    }

    pub fn log_records(&self) -> &[LogRecord] {
        &self.log
    }

    /// The session log as JSON lines.
    pub fn log_to_string(&self) -> String {
        let mut out = String::new();
        for record in &self.log {
            out.push_str(&serde_json::to_string(record).expect("log record serializes"));
            out.push('\n');
        }
        out
    }
}

fn render_evaluation(constraints: &ClusterConstraints, score: &ScoreBreakdown) -> String {
    let mut out = format!(
        "Cluster score: {}\nNumber of clusters: {}",
        format_score(score.total),
        constraints.len()
    );
    for (name, cs) in &score.per_cluster {
        let _ = write!(
            out,
            "\n{name}: devices={}, diffusion_pairs={}, common_gates={}, contribution={}",
            cs.devices,
            cs.diffusion_pairs,
            cs.common_gates,
            format_score(cs.contribution)
        );
    }
    out
}
