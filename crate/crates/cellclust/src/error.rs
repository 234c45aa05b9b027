//! Crate-wide error type.

use thiserror::Error;

use crate::cluster::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A document line could not be parsed as a device line or header.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no devices")]
    NoDevices,

    #[error("unknown nets: {}", names.join(", "))]
    UnknownNets { names: Vec<String> },

    #[error("unknown devices: {}", names.join(", "))]
    UnknownDevices { names: Vec<String> },

    /// Cluster constraints failed validation; the report lists every issue.
    #[error("invalid cluster constraints:\n{0}")]
    InvalidConstraints(ValidationReport),

    #[error("merge produced empty cluster")]
    MergeProducedEmptyCluster,

    #[error("site ({x}, {y}) out of bounds for {columns}x{rows} grid")]
    SiteOutOfBounds {
        x: usize,
        y: usize,
        columns: usize,
        rows: usize,
    },

    #[error("duplicate site at ({x}, {y})")]
    DuplicateSite { x: usize, y: usize },

    #[error("site ({x}, {y}) contradicts netlist: {detail}")]
    SiteContradictsNetlist { x: usize, y: usize, detail: String },

    #[error("unrouted net {net}: terminal x pair ({x1}, {x2}) has x1 > x2")]
    InvalidTerminalPair { net: String, x1: i64, x2: i64 },

    #[error("iteration {iteration} out of range for a {total}-iteration schedule")]
    IterationOutOfRange { iteration: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
