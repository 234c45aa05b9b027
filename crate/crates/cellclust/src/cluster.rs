//! Cluster constraints and the simple cluster score.
//!
//! A cluster constraint names a disjoint group of devices that the layout
//! generator should place together. The score rewards potential diffusion
//! sharing (same-net source/drain terminal pairs, PMOS and NMOS counted
//! separately) and potential common gates (same gate net on both a PMOS and
//! an NMOS), each normalized by cluster size:
//!
//! ```text
//! score = sum over clusters c of
//!         ( sum over diffusion nets n  floor(P_n/2) + floor(N_n/2)
//!         + sum over gate nets n       min(P_n, N_n) ) / T_c
//! ```
//!
//! where `P_n`/`N_n` count terminal occurrences of net `n` on PMOS/NMOS
//! devices of the cluster and `T_c` is the cluster's device count. A device
//! with source and drain on the same net contributes two occurrences.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::netlist::{MosKind, Netlist, Terminal};

/// Unvalidated cluster constraints as read from JSON, duplicates and all.
///
/// Accepts both the bare object form `{"c1": ["mp1", ...]}` and the
/// Final-Answer blob `{"action": "Final Answer", "action_input": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConstraints(pub Vec<(String, Vec<String>)>);

impl RawConstraints {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Serialize for RawConstraints {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, members) in &self.0 {
            map.serialize_entry(name, members)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for RawConstraints {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RawVisitor;

        impl<'de> Visitor<'de> for RawVisitor {
            type Value = RawConstraints;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a cluster map or a Final Answer action blob")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut pairs: Vec<(String, Vec<String>)> = Vec::new();
                let mut blob_action: Option<String> = None;
                let mut blob_input: Option<RawConstraints> = None;
                let mut first = true;

                while let Some(key) = map.next_key::<String>()? {
                    if first && key == "action" {
                        // Distinguish the action blob from a cluster that
                        // happens to be named "action" by the value type.
                        let value: serde_json::Value = map.next_value()?;
                        match value {
                            serde_json::Value::String(s) => {
                                if s != "Final Answer" {
                                    return Err(serde::de::Error::custom(format!(
                                        "expected action \"Final Answer\", got \"{s}\""
                                    )));
                                }
                                blob_action = Some(s);
                            }
                            serde_json::Value::Array(items) => {
                                let members = items
                                    .into_iter()
                                    .map(|v| match v {
                                        serde_json::Value::String(s) => Ok(s),
                                        other => Err(serde::de::Error::custom(format!(
                                            "device names must be strings, got {other}"
                                        ))),
                                    })
                                    .collect::<std::result::Result<Vec<_>, A::Error>>()?;
                                pairs.push((key, members));
                            }
                            other => {
                                return Err(serde::de::Error::custom(format!(
                                    "unexpected value for \"action\": {other}"
                                )))
                            }
                        }
                    } else if blob_action.is_some() {
                        if key != "action_input" {
                            return Err(serde::de::Error::custom(format!(
                                "unexpected key \"{key}\" in action blob"
                            )));
                        }
                        blob_input = Some(map.next_value()?);
                    } else {
                        pairs.push((key, map.next_value()?));
                    }
                    first = false;
                }

                match (blob_action, blob_input) {
                    (Some(_), Some(inner)) => Ok(inner),
                    (Some(_), None) => Err(serde::de::Error::custom(
                        "action blob is missing \"action_input\"",
                    )),
                    (None, _) => Ok(RawConstraints(pairs)),
                }
            }
        }

        deserializer.deserialize_map(RawVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    UnknownDevice,
    DuplicateDevice,
    EmptyCluster,
    DuplicateClusterName,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueKind::UnknownDevice => "unknown_device",
            IssueKind::DuplicateDevice => "duplicate_device",
            IssueKind::EmptyCluster => "empty_cluster",
            IssueKind::DuplicateClusterName => "duplicate_cluster_name",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub detail: String,
}

/// Every problem found in a raw constraint set; valid iff no issues.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", issue.kind, issue.detail)?;
        }
        Ok(())
    }
}

/// Checks a raw constraint set against a netlist, reporting every issue.
pub fn validate_constraints(netlist: &Netlist, raw: &RawConstraints) -> ValidationReport {
    let mut issues = Vec::new();

    let mut seen_names: Vec<&str> = Vec::new();
    for (name, members) in &raw.0 {
        if seen_names.contains(&name.as_str()) {
            issues.push(Issue {
                kind: IssueKind::DuplicateClusterName,
                detail: name.clone(),
            });
        } else {
            seen_names.push(name);
        }
        if members.is_empty() {
            issues.push(Issue {
                kind: IssueKind::EmptyCluster,
                detail: name.clone(),
            });
        }
    }

    // Device occurrences across all clusters, in first-appearance order.
    let mut occurrences: IndexMap<&str, Vec<&str>> = IndexMap::new();
    for (name, members) in &raw.0 {
        for dev in members {
            occurrences.entry(dev).or_default().push(name);
            if !netlist.contains_device(dev) {
                issues.push(Issue {
                    kind: IssueKind::UnknownDevice,
                    detail: format!("{dev} (cluster {name})"),
                });
            }
        }
    }
    for (dev, clusters) in &occurrences {
        if clusters.len() > 1 {
            issues.push(Issue {
                kind: IssueKind::DuplicateDevice,
                detail: format!("{dev} in {}", clusters.join(",")),
            });
        }
    }

    ValidationReport { issues }
}

/// Validated, disjoint cluster constraints in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterConstraints {
    clusters: IndexMap<String, Vec<String>>,
}

impl ClusterConstraints {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds constraints from raw input, returning the full report on any
    /// validation failure.
    pub fn validated(
        netlist: &Netlist,
        raw: &RawConstraints,
    ) -> std::result::Result<Self, ValidationReport> {
        let report = validate_constraints(netlist, raw);
        if !report.valid() {
            return Err(report);
        }
        let clusters = raw
            .0
            .iter()
            .map(|(name, members)| (name.clone(), members.clone()))
            .collect();
        Ok(ClusterConstraints { clusters })
    }

    pub fn from_json_str(netlist: &Netlist, text: &str) -> Result<Self> {
        let raw = RawConstraints::from_json_str(text)?;
        Self::validated(netlist, &raw).map_err(Error::InvalidConstraints)
    }

    pub fn clusters(&self) -> &IndexMap<String, Vec<String>> {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// The cluster currently holding `device`, if any.
    pub fn cluster_of(&self, device: &str) -> Option<&str> {
        self.clusters
            .iter()
            .find(|(_, members)| members.iter().any(|m| m == device))
            .map(|(name, _)| name.as_str())
    }

    pub fn to_raw(&self) -> RawConstraints {
        RawConstraints(
            self.clusters
                .iter()
                .map(|(name, members)| (name.clone(), members.clone()))
                .collect(),
        )
    }

    /// Renders the canonical Final-Answer JSON blob with two-space
    /// indentation and insertion order.
    pub fn to_final_answer_json(&self) -> String {
        #[derive(Serialize)]
        struct Blob<'a> {
            action: &'a str,
            action_input: &'a IndexMap<String, Vec<String>>,
        }
        serde_json::to_string_pretty(&Blob {
            action: "Final Answer",
            action_input: &self.clusters,
        })
        .expect("constraints serialize")
    }
}

impl Serialize for ClusterConstraints {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.clusters.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClusterConstraints {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        // Structural checks only; netlist-dependent validation happens in
        // `validated`.
        let raw = RawConstraints::deserialize(deserializer)?;
        let mut clusters: IndexMap<String, Vec<String>> = IndexMap::new();
        for (name, members) in raw.0 {
            if clusters.insert(name.clone(), members).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate cluster name {name}"
                )));
            }
        }
        Ok(ClusterConstraints { clusters })
    }
}

/// Per-cluster score terms plus the exact contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterScore {
    pub diffusion_pairs: u64,
    pub common_gates: u64,
    pub devices: u64,
    pub contribution: f64,
}

/// The score decomposition: one record per cluster plus the total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub total: f64,
    pub per_cluster: IndexMap<String, ClusterScore>,
}

/// Scores constraints with the default empty net-exclusion list.
pub fn cluster_score(
    netlist: &Netlist,
    constraints: &ClusterConstraints,
) -> Result<ScoreBreakdown> {
    cluster_score_with_exclusions(netlist, constraints, &BTreeSet::new())
}

/// Scores constraints, ignoring terminals on any net in `excluded_nets`.
///
/// Devices outside every cluster contribute nothing. Errors if the
/// constraints do not validate against the netlist.
pub fn cluster_score_with_exclusions(
    netlist: &Netlist,
    constraints: &ClusterConstraints,
    excluded_nets: &BTreeSet<String>,
) -> Result<ScoreBreakdown> {
    let report = validate_constraints(netlist, &constraints.to_raw());
    if !report.valid() {
        return Err(Error::InvalidConstraints(report));
    }

    let mut per_cluster = IndexMap::new();
    let mut total = 0.0f64;
    for (name, members) in constraints.clusters() {
        // Terminal occurrence counts per net: (PMOS, NMOS).
        let mut diffusion: IndexMap<&str, (u64, u64)> = IndexMap::new();
        let mut gates: IndexMap<&str, (u64, u64)> = IndexMap::new();
        for member in members {
            let dev = netlist.device(member).expect("validated above");
            for terminal in [Terminal::Drain, Terminal::Gate, Terminal::Source] {
                let net = dev.terminal_net(terminal);
                if excluded_nets.contains(net) {
                    continue;
                }
                let bucket = if terminal.is_diffusion() {
                    diffusion.entry(net).or_insert((0, 0))
                } else {
                    gates.entry(net).or_insert((0, 0))
                };
                match dev.kind {
                    MosKind::Pmos => bucket.0 += 1,
                    MosKind::Nmos => bucket.1 += 1,
                }
            }
        }
        let diffusion_pairs: u64 = diffusion.values().map(|&(p, n)| p / 2 + n / 2).sum();
        let common_gates: u64 = gates.values().map(|&(p, n)| p.min(n)).sum();
        let devices = members.len() as u64;
        let contribution = (diffusion_pairs + common_gates) as f64 / devices as f64;
        total += contribution;
        per_cluster.insert(
            name.clone(),
            ClusterScore {
                diffusion_pairs,
                common_gates,
                devices,
                contribution,
            },
        );
    }

    Ok(ScoreBreakdown { total, per_cluster })
}

/// Number of distinct nets shared between `device` and any device in
/// `members`, with `device` itself excluded from `members`.
pub fn shared_net_count(netlist: &Netlist, device: &str, members: &[String]) -> Result<usize> {
    let mut unknown: Vec<String> = Vec::new();
    if !netlist.contains_device(device) {
        unknown.push(device.to_string());
    }
    for m in members {
        if !netlist.contains_device(m) && !unknown.contains(m) {
            unknown.push(m.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownDevices { names: unknown });
    }

    let dev = netlist.device(device).expect("checked above");
    let dev_nets: BTreeSet<&str> = dev.nets().into_iter().collect();
    let mut member_nets: BTreeSet<&str> = BTreeSet::new();
    for m in members {
        if m == device {
            continue;
        }
        member_nets.extend(netlist.device(m).expect("checked above").nets());
    }
    Ok(dev_nets.intersection(&member_nets).count())
}

/// Adds `new_members` as a fresh `cluster_<k>` cluster, resolving devices
/// that already belong to another cluster.
///
/// Each duplicated device goes to whichever cluster (its current one or the
/// new one, both counted without the device itself, memberships as they were
/// before resolution) shares more nets with it; ties keep it in its current
/// cluster. Clusters emptied by resolution are dropped. If resolution leaves
/// the new cluster itself empty the merge fails and nothing changes.
pub fn merge_cluster(
    netlist: &Netlist,
    current: &ClusterConstraints,
    new_members: &[String],
) -> Result<ClusterConstraints> {
    let mut members: Vec<String> = Vec::new();
    for m in new_members {
        if !members.contains(m) {
            members.push(m.clone());
        }
    }
    if members.is_empty() {
        return Err(Error::MergeProducedEmptyCluster);
    }
    let unknown: Vec<String> = members
        .iter()
        .filter(|m| !netlist.contains_device(m))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownDevices { names: unknown });
    }

    // Decide every duplicated device against the pre-merge memberships.
    let mut kept_in_new: Vec<String> = Vec::new();
    let mut removals: Vec<(String, String)> = Vec::new(); // (cluster, device)
    for device in &members {
        match current.cluster_of(device) {
            None => kept_in_new.push(device.clone()),
            Some(owner) => {
                let existing_members = &current.clusters()[owner];
                let existing_count = shared_net_count(netlist, device, existing_members)?;
                let new_count = shared_net_count(netlist, device, &members)?;
                if new_count > existing_count {
                    removals.push((owner.to_string(), device.clone()));
                    kept_in_new.push(device.clone());
                }
            }
        }
    }
    if kept_in_new.is_empty() {
        return Err(Error::MergeProducedEmptyCluster);
    }

    let mut clusters: IndexMap<String, Vec<String>> = IndexMap::new();
    for (name, cluster_members) in current.clusters() {
        let survivors: Vec<String> = cluster_members
            .iter()
            .filter(|m| !removals.iter().any(|(c, d)| c == name && d == *m))
            .cloned()
            .collect();
        if !survivors.is_empty() {
            clusters.insert(name.clone(), survivors);
        }
    }

    let mut k = current.clusters().len() + 1;
    while clusters.contains_key(&format!("cluster_{k}"))
        || current.clusters().contains_key(&format!("cluster_{k}"))
    {
        k += 1;
    }
    clusters.insert(format!("cluster_{k}"), kept_in_new);

    Ok(ClusterConstraints { clusters })
}
