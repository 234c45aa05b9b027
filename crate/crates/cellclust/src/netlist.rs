//! Technology-independent transistor netlists.
//!
//! A netlist document is UTF-8 text with one device per line:
//!
//! ```text
//! # optional comment (also `*` at line start)
//! cell nand2
//! mp1 d:OUT g:A s:VDD pmos
//! mn1 d:OUT g:A s:net1 nmos
//! ```
//!
//! The `d:`/`g:`/`s:` terminal tokens may appear in any order after the
//! device name; an optional `b:` bulk token is retained but excluded from
//! scoring and statistics. Device and net names are case-sensitive
//! identifiers over `[A-Za-z0-9_./:]`.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terminal of a MOSFET. Bulk is tracked on the device but never indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    #[serde(rename = "d")]
    Drain,
    #[serde(rename = "g")]
    Gate,
    #[serde(rename = "s")]
    Source,
}

impl Terminal {
    pub fn letter(self) -> char {
        match self {
            Terminal::Drain => 'd',
            Terminal::Gate => 'g',
            Terminal::Source => 's',
        }
    }

    /// True for source/drain terminals, which sit on diffusion.
    pub fn is_diffusion(self) -> bool {
        matches!(self, Terminal::Drain | Terminal::Source)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MosKind {
    #[serde(rename = "pmos")]
    Pmos,
    #[serde(rename = "nmos")]
    Nmos,
}

impl fmt::Display for MosKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MosKind::Pmos => write!(f, "pmos"),
            MosKind::Nmos => write!(f, "nmos"),
        }
    }
}

/// A single transistor with its three indexed terminal nets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mosfet {
    pub name: String,
    pub drain: String,
    pub gate: String,
    pub source: String,
    pub kind: MosKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<String>,
}

impl Mosfet {
    pub fn terminal_net(&self, terminal: Terminal) -> &str {
        match terminal {
            Terminal::Drain => &self.drain,
            Terminal::Gate => &self.gate,
            Terminal::Source => &self.source,
        }
    }

    /// The drain/gate/source nets in device-line order. Bulk excluded.
    pub fn nets(&self) -> [&str; 3] {
        [&self.drain, &self.gate, &self.source]
    }

    /// Renders the canonical device line, `name d:.. g:.. s:.. [b:..] kind`.
    pub fn device_line(&self) -> String {
        match &self.bulk {
            Some(b) => format!(
                "{} d:{} g:{} s:{} b:{} {}",
                self.name, self.drain, self.gate, self.source, b, self.kind
            ),
            None => format!(
                "{} d:{} g:{} s:{} {}",
                self.name, self.drain, self.gate, self.source, self.kind
            ),
        }
    }
}

/// Per-net terminal occurrence counts, split by terminal role and device kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetStat {
    pub diffusion_pmos: u32,
    pub diffusion_nmos: u32,
    pub gate_pmos: u32,
    pub gate_nmos: u32,
}

impl NetStat {
    pub fn degree(&self) -> u32 {
        self.diffusion_pmos + self.diffusion_nmos + self.gate_pmos + self.gate_nmos
    }
}

/// Terminal statistics for every net, in net first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetStats(pub IndexMap<String, NetStat>);

impl NetStats {
    /// Sum of all net degrees; always `3 * device_count`.
    pub fn total_degree(&self) -> u32 {
        self.0.values().map(NetStat::degree).sum()
    }
}

/// An immutable parsed netlist with a derived net-to-terminal index.
#[derive(Debug, Clone)]
pub struct Netlist {
    cell_name: Option<String>,
    devices: Vec<Mosfet>,
    net_index: IndexMap<String, Vec<(String, Terminal)>>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.cell_name == other.cell_name && self.devices == other.devices
    }
}

impl Eq for Netlist {}

impl Netlist {
    /// Builds a netlist from devices, checking name uniqueness and rebuilding
    /// the net index.
    pub fn new(cell_name: Option<String>, devices: Vec<Mosfet>) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::NoDevices);
        }
        let mut by_name = HashMap::new();
        for (i, dev) in devices.iter().enumerate() {
            if by_name.insert(dev.name.clone(), i).is_some() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("duplicate device name `{}`", dev.name),
                });
            }
        }
        let net_index = build_net_index(&devices);
        Ok(Netlist {
            cell_name,
            devices,
            net_index,
            by_name,
        })
    }

    pub fn cell_name(&self) -> Option<&str> {
        self.cell_name.as_deref()
    }

    pub fn devices(&self) -> &[Mosfet] {
        &self.devices
    }

    pub fn device(&self, name: &str) -> Option<&Mosfet> {
        self.by_name.get(name).map(|&i| &self.devices[i])
    }

    pub fn contains_device(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn contains_net(&self, net: &str) -> bool {
        self.net_index.contains_key(net)
    }

    /// Net name -> `(device, terminal)` occurrences, nets in first-appearance
    /// order, occurrences in device order with d/g/s within a device.
    pub fn net_index(&self) -> &IndexMap<String, Vec<(String, Terminal)>> {
        &self.net_index
    }

    /// Net names in first-appearance order.
    pub fn nets(&self) -> impl Iterator<Item = &str> {
        self.net_index.keys().map(String::as_str)
    }
}

fn build_net_index(devices: &[Mosfet]) -> IndexMap<String, Vec<(String, Terminal)>> {
    let mut index: IndexMap<String, Vec<(String, Terminal)>> = IndexMap::new();
    for dev in devices {
        for terminal in [Terminal::Drain, Terminal::Gate, Terminal::Source] {
            index
                .entry(dev.terminal_net(terminal).to_string())
                .or_default()
                .push((dev.name.clone(), terminal));
        }
    }
    index
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | ':'))
}

/// Parses a device-line document into a [`Netlist`].
///
/// Blank lines and lines starting with `#` or `*` are ignored. A single
/// `cell <name>` header line is accepted anywhere before duplication.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut cell_name: Option<String> = None;
    let mut devices: Vec<Mosfet> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] == "cell" && tokens.len() == 2 {
            if cell_name.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "duplicate cell header".into(),
                });
            }
            if !is_identifier(tokens[1]) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("invalid cell name `{}`", tokens[1]),
                });
            }
            cell_name = Some(tokens[1].to_string());
            continue;
        }
        let dev = parse_device_line(&tokens, line_no)?;
        if let Some(&first) = seen.get(&dev.name) {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "duplicate device name `{}` (first defined on line {})",
                    dev.name, first
                ),
            });
        }
        seen.insert(dev.name.clone(), line_no);
        devices.push(dev);
    }

    if devices.is_empty() {
        return Err(Error::NoDevices);
    }
    Netlist::new(cell_name, devices)
}

fn parse_device_line(tokens: &[&str], line: usize) -> Result<Mosfet> {
    let parse_err = |message: String| Error::Parse { line, message };

    let name = tokens[0];
    if !is_identifier(name) {
        return Err(parse_err(format!("invalid device name `{name}`")));
    }

    let mut drain = None;
    let mut gate = None;
    let mut source = None;
    let mut bulk = None;
    let mut kind = None;

    for tok in &tokens[1..] {
        let slot = match tok.get(..2) {
            Some("d:") => Some((&mut drain, "d")),
            Some("g:") => Some((&mut gate, "g")),
            Some("s:") => Some((&mut source, "s")),
            Some("b:") => Some((&mut bulk, "b")),
            _ => None,
        };
        if let Some((slot, prefix)) = slot {
            let net = &tok[2..];
            if !is_identifier(net) {
                return Err(parse_err(format!("invalid net name in token `{tok}`")));
            }
            if slot.replace(net.to_string()).is_some() {
                return Err(parse_err(format!("duplicate `{prefix}:` token `{tok}`")));
            }
            continue;
        }
        let parsed_kind = match tok.to_ascii_lowercase().as_str() {
            "pmos" => MosKind::Pmos,
            "nmos" => MosKind::Nmos,
            _ => return Err(parse_err(format!("unknown kind token `{tok}`"))),
        };
        if kind.replace(parsed_kind).is_some() {
            return Err(parse_err(format!("unexpected extra kind token `{tok}`")));
        }
    }

    let missing = |what: &str| parse_err(format!("device `{name}` is missing {what}"));
    Ok(Mosfet {
        name: name.to_string(),
        drain: drain.ok_or_else(|| missing("a `d:` terminal"))?,
        gate: gate.ok_or_else(|| missing("a `g:` terminal"))?,
        source: source.ok_or_else(|| missing("an `s:` terminal"))?,
        kind: kind.ok_or_else(|| missing("a device kind"))?,
        bulk,
    })
}

/// Renders the canonical document; `parse_netlist` of the result reproduces
/// the netlist exactly.
pub fn serialize_netlist(netlist: &Netlist) -> String {
    let mut out = String::new();
    if let Some(cell) = netlist.cell_name() {
        out.push_str("cell ");
        out.push_str(cell);
        out.push('\n');
    }
    for dev in netlist.devices() {
        out.push_str(&dev.device_line());
        out.push('\n');
    }
    out
}

/// All devices touching at least one of `nets` with a d/g/s terminal,
/// deduplicated, in netlist order.
pub fn devices_on_nets(netlist: &Netlist, nets: &[String]) -> Result<Vec<String>> {
    let mut unknown: Vec<String> = Vec::new();
    for net in nets {
        if !netlist.contains_net(net) && !unknown.contains(net) {
            unknown.push(net.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownNets { names: unknown });
    }
    let mut out = Vec::new();
    for dev in netlist.devices() {
        if dev.nets().iter().any(|n| nets.iter().any(|q| q == n)) {
            out.push(dev.name.clone());
        }
    }
    Ok(out)
}

/// Exact terminal counts per net, split by terminal role and device kind.
pub fn net_statistics(netlist: &Netlist) -> NetStats {
    let mut stats: IndexMap<String, NetStat> = IndexMap::new();
    for dev in netlist.devices() {
        for terminal in [Terminal::Drain, Terminal::Gate, Terminal::Source] {
            let stat = stats
                .entry(dev.terminal_net(terminal).to_string())
                .or_default();
            match (terminal.is_diffusion(), dev.kind) {
                (true, MosKind::Pmos) => stat.diffusion_pmos += 1,
                (true, MosKind::Nmos) => stat.diffusion_nmos += 1,
                (false, MosKind::Pmos) => stat.gate_pmos += 1,
                (false, MosKind::Nmos) => stat.gate_nmos += 1,
            }
        }
    }
    NetStats(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_single_device_line() {
        let n = parse_netlist("mp1 d:OUT g:A s:VDD pmos").unwrap();
        let dev = &n.devices()[0];
        assert_eq!(dev.name, "mp1");
        assert_eq!(dev.drain, "OUT");
        assert_eq!(dev.gate, "A");
        assert_eq!(dev.source, "VDD");
        assert_eq!(dev.kind, MosKind::Pmos);
        assert_eq!(dev.bulk, None);
    }

    #[test]
    fn empty_document_is_an_error() {
        assert!(matches!(parse_netlist(""), Err(Error::NoDevices)));
        assert!(matches!(
            parse_netlist("# just a comment\n\n"),
            Err(Error::NoDevices)
        ));
    }

    #[test]
    fn nand2_net_index() {
        let n = fixtures::nand2();
        let out = &n.net_index()["OUT"];
        assert_eq!(
            out,
            &vec![
                ("mp1".to_string(), Terminal::Drain),
                ("mp2".to_string(), Terminal::Drain),
                ("mn1".to_string(), Terminal::Drain),
            ]
        );
    }

    #[test]
    fn terminal_tokens_in_any_order() {
        let n = parse_netlist("m1 s:VSS g:A d:OUT NMOS").unwrap();
        let dev = &n.devices()[0];
        assert_eq!(dev.drain, "OUT");
        assert_eq!(dev.kind, MosKind::Nmos);
    }

    #[test]
    fn bulk_token_is_retained() {
        let n = parse_netlist("m1 d:OUT g:A s:VSS b:VNW nmos").unwrap();
        assert_eq!(n.devices()[0].bulk.as_deref(), Some("VNW"));
        let round = parse_netlist(&serialize_netlist(&n)).unwrap();
        assert_eq!(round, n);
    }

    #[test]
    fn duplicate_device_reports_name_and_line() {
        let err = parse_netlist("m1 d:a g:b s:c pmos\nm1 d:a g:b s:c nmos").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("m1"), "{msg}");
    }

    #[test]
    fn unknown_kind_token_is_reported() {
        let err = parse_netlist("m1 d:a g:b s:c jfet").unwrap_err();
        assert!(err.to_string().contains("unknown kind token `jfet`"));
    }

    #[test]
    fn malformed_line_reports_offending_token() {
        let err = parse_netlist("m1 d:a g:b nmos").unwrap_err();
        assert!(err.to_string().contains("missing an `s:` terminal"));
        let err = parse_netlist("m1 d:a g:b s: nmos").unwrap_err();
        assert!(err.to_string().contains("`s:`"), "{err}");
    }

    #[test]
    fn cell_header_round_trips() {
        let n = parse_netlist("cell nand2\nm1 d:a g:b s:c pmos").unwrap();
        assert_eq!(n.cell_name(), Some("nand2"));
        let text = serialize_netlist(&n);
        assert!(text.starts_with("cell nand2\n"));
        assert_eq!(parse_netlist(&text).unwrap(), n);
    }

    #[test]
    fn serialize_is_byte_identical_for_canonical_fixtures() {
        let text = fixtures::NAND2_DOC;
        let n = parse_netlist(text).unwrap();
        assert_eq!(serialize_netlist(&n), text);
    }

    #[test]
    fn devices_on_nets_matches_fixture_scan() {
        let n = fixtures::nand2();
        assert_eq!(
            devices_on_nets(&n, &["OUT".into()]).unwrap(),
            vec!["mp1", "mp2", "mn1"]
        );
        assert_eq!(
            devices_on_nets(&n, &["net1".into()]).unwrap(),
            vec!["mn1", "mn2"]
        );
    }

    #[test]
    fn devices_on_nets_lists_all_unknown_names() {
        let n = fixtures::nand2();
        let err = devices_on_nets(&n, &["NOPE".into()]).unwrap_err();
        assert_eq!(err.to_string(), "unknown nets: NOPE");
        let err = devices_on_nets(&n, &["NOPE".into(), "OUT".into(), "ALSO".into()]).unwrap_err();
        assert_eq!(err.to_string(), "unknown nets: NOPE, ALSO");
    }

    #[test]
    fn net_statistics_counts_fixture_terminals() {
        let n = fixtures::nand2();
        let stats = net_statistics(&n);
        let out = &stats.0["OUT"];
        assert_eq!(out.diffusion_pmos, 2);
        assert_eq!(out.diffusion_nmos, 1);
        assert_eq!(out.gate_pmos + out.gate_nmos, 0);
        assert_eq!(out.degree(), 3);
        let a = &stats.0["A"];
        assert_eq!((a.gate_pmos, a.gate_nmos), (1, 1));
        assert_eq!(a.degree(), 2);
        assert_eq!(stats.total_degree(), 3 * n.devices().len() as u32);
    }

    #[test]
    fn drain_equals_source_counts_both_occurrences() {
        let n = parse_netlist("m1 d:X g:A s:X nmos").unwrap();
        let stats = net_statistics(&n);
        assert_eq!(stats.0["X"].diffusion_nmos, 2);
        assert_eq!(n.net_index()["X"].len(), 2);
    }
}
