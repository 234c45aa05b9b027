//! Cluster-constraint exploration for standard-cell transistor netlists.
//!
//! The crate parses technology-independent MOSFET netlists, scores device
//! clusterings with a simple diffusion-sharing/common-gate metric, and
//! explores clusterings two ways: a simulated annealer with an adaptive Lam
//! schedule and weighted net sampling, and a ReAct-style agent loop driving
//! four netlist tools through a chat-completion backend. It also renders the
//! deterministic prompt documents the agent consumes and emits the cluster
//! constraint files an external layout generator ingests.
//!
//! Start with the runnable programs under `examples/`; each one exercises a
//! major capability end to end.

pub mod agent;
pub mod batch;
pub mod cluster;
pub mod error;
pub mod fixtures;
pub mod layout;
pub mod netlist;
pub mod optimize;
pub mod prompts;
pub mod tools;

pub use cluster::{
    cluster_score, merge_cluster, shared_net_count, validate_constraints, ClusterConstraints,
    RawConstraints, ScoreBreakdown, ValidationReport,
};
pub use error::{Error, Result};
pub use layout::{
    diffusion_break_adjacent_nets, parse_layout, parse_routability, Layout, RoutabilityReport,
};
pub use netlist::{
    devices_on_nets, net_statistics, parse_netlist, serialize_netlist, Mosfet, Netlist,
};
pub use tools::{list_tools, Observation, Session, ToolCall};
