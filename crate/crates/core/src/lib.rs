//! Linear network coding for satellite constellations with time-varying
//! topology.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`constellation`] propagates a circular-orbit constellation and derives
//!    the time-indexed range / line-of-sight matrix.
//! 2. [`linkbudget`] turns ranges into SNR, SNR into Shannon capacity, and
//!    capacity into a unit-capacity directed multigraph.
//! 3. [`graph`] finds per-sink max-flow and edge-disjoint paths (greedy
//!    shortest-path with a Ford-Fulkerson fallback) and prunes unused edges.
//! 4. [`plg`] builds the paths line-graph over edge copies, tests it for
//!    cycles, and produces an upstream-to-downstream order.
//! 5. [`code`] constructs a linear multicast over GF(2^m) on the paths
//!    line-graph, extracts local encoding kernels, verifies sink ranks and
//!    simulates transmission.
//! 6. [`dynamics`] evaluates instantaneous / static / intersection / interval
//!    coding schemes over a whole range series and recommends one via the
//!    maxRa threshold test.
//!
//! [`pipeline`] wires steps 2-5 together for a single topology snapshot and
//! [`synth`] provides seeded instance generators used by tests and
//! benchmarks.

pub mod code;
pub mod constellation;
pub mod dynamics;
pub mod gf;
pub mod graph;
pub mod linkbudget;
pub mod pipeline;
pub mod plg;
pub mod synth;

pub use code::NetworkCode;
pub use constellation::{ConstellationSpec, RangeSeries};
pub use graph::{MultiGraph, PathSet};
pub use linkbudget::{CapacityGraph, LinkParams};
pub use plg::Plg;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric precondition was violated (non-positive distance, bad field
    /// degree, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A path references an edge copy that does not exist in the graph it is
    /// paired with.
    #[error("inconsistent path set: {0}")]
    PathInconsistency(String),

    /// The paths line-graph contains a directed cycle, so no upstream-to-
    /// downstream order exists and a convolutional code would be required.
    /// The cycle is reported as a list of node labels.
    #[error("paths line-graph is cyclic (convolutional code required); cycle: {}", .cycle.join(" -> "))]
    CyclicPlg { cycle: Vec<String> },

    /// The kernel scan ran out of field elements while trying to keep every
    /// listed sink's frontier independent.
    #[error("field exhausted while encoding for sinks {0:?} (1-based); use a larger field")]
    FieldExhausted(Vec<usize>),

    /// No sink is reachable from the source, so there is no rate to encode at.
    #[error("no eligible sinks: every requested sink has max-flow 0")]
    NoEligibleSinks,

    /// A quantity the computation divides by is zero (or an airtime came out
    /// non-positive).
    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    /// Internal invariant violation; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
