//! Linear-multicast construction on an acyclic paths line-graph.
//!
//! Every PLG edge node (= edge copy of the pruned graph) is assigned a
//! single global encoding kernel (GEK), an r-dimensional vector over
//! GF(2^m). The sweep walks the PLG in upstream-to-downstream order and
//! keeps, per sink, the invariant that the r vectors currently "live" on
//! that sink's r paths stay linearly independent. A kernel candidate is a
//! linear combination of the live vectors of the paths crossing the node,
//! scanned in lexicographic coefficient order, so the whole construction
//! is deterministic.
//!
//! Local encoding kernels (LEKs) are recovered afterwards by solving the
//! per-node mixing equation, restricted to inputs that come earlier in
//! the sweep so the schedule stays realizable even when the underlying
//! graph is cyclic.

use std::collections::BTreeMap;
use std::io::Write;

use crate::gf::{self, Field};
use crate::graph::{EdgeCopy, MultiGraph, PathSet};
use crate::plg::{Plg, PlgNode, TopoOrder};
use crate::{Error, Result};

/// How a node's mixing matrix is fed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelInputs {
    /// The source's r imaginary links, carrying the natural basis.
    Imaginary(usize),
    /// Incoming edge copies of the pruned graph, ascending.
    Edges(Vec<EdgeCopy>),
}

impl KernelInputs {
    pub fn len(&self) -> usize {
        match self {
            KernelInputs::Imaginary(r) => *r,
            KernelInputs::Edges(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Local encoding kernel of one node: an |In| x |Out| matrix mixing input
/// symbols into each outgoing edge copy.
#[derive(Debug, Clone)]
pub struct NodeKernel {
    pub node: usize,
    pub inputs: KernelInputs,
    pub outputs: Vec<EdgeCopy>,
    /// k[d][e]: weight of input d on output e.
    pub k: Vec<Vec<u16>>,
}

/// A complete linear network code on a pruned multigraph.
#[derive(Debug, Clone)]
pub struct NetworkCode {
    pub rate: usize,
    pub field: Field,
    pub source: usize,
    pub sinks: Vec<usize>,
    /// Global encoding kernel per edge copy.
    pub gek: BTreeMap<EdgeCopy, Vec<u16>>,
    /// Local encoding kernel per node with outgoing copies; empty until
    /// [`extract_lek`] has run.
    pub lek: BTreeMap<usize, NodeKernel>,
    /// Edge copies in upstream-to-downstream sweep order.
    pub sweep: Vec<EdgeCopy>,
}

/// Per-sink decodability verdicts.
#[derive(Debug, Clone)]
pub struct SinkReport {
    pub rate: usize,
    pub entries: Vec<SinkVerdict>,
}

#[derive(Debug, Clone)]
pub struct SinkVerdict {
    pub sink: usize,
    pub incoming: Vec<EdgeCopy>,
    pub rank: usize,
    pub decodable: bool,
}

impl SinkReport {
    pub fn all_decodable(&self) -> bool {
        self.entries.iter().all(|e| e.decodable)
    }
}

/// Tracks one sink's r live path vectors as the rows of a matrix B while
/// maintaining A = B^-1, so "does replacing row i by f keep B invertible"
/// is an O(r^2) question: (f^T A)_i != 0.
struct FrontierTracker {
    rows: Vec<Vec<u16>>,
    inv: Vec<Vec<u16>>,
}

impl FrontierTracker {
    /// Starts from a permuted identity: path slot p holds basis vector
    /// e_{basis[p]}.
    fn new(r: usize, basis: &[usize]) -> Self {
        let mut rows = vec![vec![0u16; r]; r];
        let mut inv = vec![vec![0u16; r]; r];
        for p in 0..r {
            rows[p][basis[p]] = 1;
            inv[basis[p]][p] = 1;
        }
        FrontierTracker { rows, inv }
    }

    fn current(&self, slot: usize) -> &[u16] {
        &self.rows[slot]
    }

    /// (f^T A)_slot; nonzero iff replacing `slot` by f keeps the rows
    /// independent.
    fn weight(&self, field: &Field, f: &[u16], slot: usize) -> u16 {
        let mut acc = 0;
        for (i, &fi) in f.iter().enumerate() {
            acc = field.mul_add(fi, self.inv[i][slot], acc);
        }
        acc
    }

    /// Replaces row `slot` by f and updates the inverse with a rank-one
    /// (Sherman-Morrison) correction. Caller must have checked weight != 0.
    fn replace(&mut self, field: &Field, slot: usize, f: &[u16]) {
        let r = self.rows.len();
        let mut w = vec![0u16; r];
        for (c, wc) in w.iter_mut().enumerate() {
            let mut acc = 0;
            for (i, &fi) in f.iter().enumerate() {
                acc = field.mul_add(fi, self.inv[i][c], acc);
            }
            *wc = acc;
        }
        let d_inv = field.inv(w[slot]).expect("replace called with zero weight");
        let col: Vec<u16> = (0..r).map(|i| self.inv[i][slot]).collect();
        for i in 0..r {
            if col[i] == 0 {
                continue;
            }
            for c in 0..r {
                let delta = if c == slot { field.add(w[c], 1) } else { w[c] };
                if delta != 0 {
                    let adj = field.mul(col[i], field.mul(delta, d_inv));
                    self.inv[i][c] = field.add(self.inv[i][c], adj);
                }
            }
        }
        self.rows[slot] = f.to_vec();
    }
}

/// Builds the modified linear multicast on an acyclic PLG: one GEK per
/// edge copy, chosen so that every sink's live path vectors stay linearly
/// independent through the whole sweep.
///
/// `paths` must hold exactly `r` edge-disjoint paths per sink (truncate
/// first when a sink's max-flow exceeds the operating rate). Copies not
/// used by any path carry the zero kernel.
///
/// On success the returned code has its GEKs and sweep order filled in;
/// call [`extract_lek`] to recover the per-node mixing matrices.
pub fn construct_multicast(
    plg: &Plg,
    order: &TopoOrder,
    paths: &PathSet,
    r: usize,
    field: Field,
) -> Result<NetworkCode> {
    if r == 0 {
        return Err(Error::InvalidInput("rate must be at least 1".into()));
    }
    for sp in &paths.sinks {
        if sp.paths.len() != r {
            return Err(Error::InvalidInput(format!(
                "sink {} carries {} paths, expected exactly r = {r}",
                sp.sink + 1,
                sp.paths.len()
            )));
        }
    }

    // Path slot -> basis assignment: per sink, paths sorted by their first
    // hop share the basis index with any other sink entering on the same
    // copy, which keeps shared first hops conflict-free.
    let num_sinks = paths.sinks.len();
    let mut trackers: Vec<FrontierTracker> = Vec::with_capacity(num_sinks);
    for sp in &paths.sinks {
        let mut order_by_first: Vec<usize> = (0..r).collect();
        order_by_first.sort_by_key(|&p| {
            sp.paths[p].hops().next().expect("paths are non-empty")
        });
        let mut basis = vec![0usize; r];
        for (rank, &p) in order_by_first.iter().enumerate() {
            basis[p] = rank;
        }
        trackers.push(FrontierTracker::new(r, &basis));
    }

    // Copy -> participating (sink index, path slot).
    let mut participants: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (si, sp) in paths.sinks.iter().enumerate() {
        for (pi, path) in sp.paths.iter().enumerate() {
            for hop in path.hops() {
                let id = plg.copy_id(hop).ok_or_else(|| {
                    Error::PathInconsistency(format!("{hop} missing from the paths line-graph"))
                })?;
                participants.entry(id).or_default().push((si, pi));
            }
        }
    }
    for list in participants.values_mut() {
        list.sort_by_key(|&(si, _)| paths.sinks[si].sink);
    }

    let mut gek: BTreeMap<EdgeCopy, Vec<u16>> = BTreeMap::new();
    let mut sweep: Vec<EdgeCopy> = Vec::new();
    for &node_id in &order.sequence {
        let PlgNode::Edge(copy) = plg.node(node_id) else {
            continue;
        };
        sweep.push(copy);
        let Some(users) = participants.get(&node_id) else {
            // Not on any chosen path; carries nothing.
            gek.insert(copy, vec![0u16; r]);
            continue;
        };
        let prev: Vec<Vec<u16>> = users
            .iter()
            .map(|&(si, pi)| trackers[si].current(pi).to_vec())
            .collect();
        let f = scan_kernel(&field, &trackers, users, &prev, r).ok_or_else(|| {
            Error::FieldExhausted(users.iter().map(|&(si, _)| paths.sinks[si].sink + 1).collect())
        })?;
        for &(si, pi) in users {
            trackers[si].replace(&field, pi, &f);
        }
        gek.insert(copy, f);
    }

    Ok(NetworkCode {
        rate: r,
        field,
        source: paths.source,
        sinks: paths.sinks.iter().map(|sp| sp.sink).collect(),
        gek,
        lek: BTreeMap::new(),
        sweep,
    })
}

/// Scans coefficient tuples over the predecessors' live vectors in
/// lexicographic field order (first participant most significant) and
/// returns the first combination every affected sink accepts.
fn scan_kernel(
    field: &Field,
    trackers: &[FrontierTracker],
    users: &[(usize, usize)],
    prev: &[Vec<u16>],
    r: usize,
) -> Option<Vec<u16>> {
    let q = field.order() as u16;
    let k = users.len();
    let mut digits = vec![0u16; k];
    loop {
        // Odometer increment, last digit fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                return None;
            }
            pos -= 1;
            if digits[pos] + 1 < q {
                digits[pos] += 1;
                for d in &mut digits[pos + 1..] {
                    *d = 0;
                }
                break;
            }
        }
        let mut f = vec![0u16; r];
        for (j, &coeff) in digits.iter().enumerate() {
            if coeff == 0 {
                continue;
            }
            for (fi, &pj) in f.iter_mut().zip(&prev[j]) {
                *fi = field.mul_add(coeff, pj, *fi);
            }
        }
        if users
            .iter()
            .all(|&(si, pi)| trackers[si].weight(field, &f, pi) != 0)
        {
            return Some(f);
        }
    }
}

/// Solves for every node's local encoding kernel so that each outgoing
/// copy's GEK is the mixing of its inputs' GEKs. Inputs are restricted to
/// copies that precede the output in the sweep, which keeps the schedule
/// causal on cyclic graphs; weights on later inputs are zero.
pub fn extract_lek(code: &NetworkCode, pruned: &MultiGraph) -> Result<BTreeMap<usize, NodeKernel>> {
    let field = &code.field;
    let r = code.rate;
    let position: BTreeMap<EdgeCopy, usize> =
        code.sweep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let copies: Vec<EdgeCopy> = pruned.edge_copies().collect();

    let mut kernels = BTreeMap::new();
    for node in 0..pruned.node_count() {
        let outputs: Vec<EdgeCopy> = copies.iter().copied().filter(|c| c.from == node).collect();
        if outputs.is_empty() {
            continue;
        }
        let inputs: Vec<EdgeCopy> = copies.iter().copied().filter(|c| c.to == node).collect();
        let imaginary = node == code.source;
        let in_len = if imaginary { r } else { inputs.len() };
        let mut k = vec![vec![0u16; outputs.len()]; in_len];
        for (col, out) in outputs.iter().enumerate() {
            let f = code
                .gek
                .get(out)
                .ok_or_else(|| Error::Internal(format!("no GEK for {out}")))?;
            if imaginary {
                // f_e = sum_i k_i e_i means the column is f itself.
                for (i, row) in k.iter_mut().enumerate() {
                    row[col] = f[i];
                }
                continue;
            }
            let out_pos = position
                .get(out)
                .ok_or_else(|| Error::Internal(format!("{out} missing from sweep")))?;
            let usable: Vec<usize> = (0..inputs.len())
                .filter(|&d| position.get(&inputs[d]).is_some_and(|p| p < out_pos))
                .collect();
            // r equations (one per dimension), |usable| unknowns.
            let a: Vec<Vec<u16>> = (0..r)
                .map(|row| {
                    usable
                        .iter()
                        .map(|&d| code.gek[&inputs[d]][row])
                        .collect()
                })
                .collect();
            let solution = gf::solve(field, &a, f).ok_or_else(|| {
                Error::Internal(format!(
                    "GEK of {out} is not a combination of its causal inputs"
                ))
            })?;
            for (&d, &weight) in usable.iter().zip(&solution) {
                k[d][col] = weight;
            }
        }
        let inputs = if imaginary {
            KernelInputs::Imaginary(r)
        } else {
            KernelInputs::Edges(inputs)
        };
        kernels.insert(node, NodeKernel { node, inputs, outputs, k });
    }
    Ok(kernels)
}

/// Checks the mixing identity f_e = sum_d k_{d,e} f_d exactly, for every
/// node and every outgoing copy.
pub fn check_lek_consistency(code: &NetworkCode) -> bool {
    let field = &code.field;
    for kernel in code.lek.values() {
        for (col, out) in kernel.outputs.iter().enumerate() {
            let Some(expected) = code.gek.get(out) else {
                return false;
            };
            let mut acc = vec![0u16; code.rate];
            match &kernel.inputs {
                KernelInputs::Imaginary(r) => {
                    for i in 0..*r {
                        acc[i] = kernel.k[i][col];
                    }
                }
                KernelInputs::Edges(inputs) => {
                    for (d, input) in inputs.iter().enumerate() {
                        let Some(fd) = code.gek.get(input) else {
                            return false;
                        };
                        for (a, &fdi) in acc.iter_mut().zip(fd) {
                            *a = field.mul_add(kernel.k[d][col], fdi, *a);
                        }
                    }
                }
            }
            if &acc != expected {
                return false;
            }
        }
    }
    true
}

/// Rank check per sink: the incoming GEKs must span the full message
/// space. Sinks with fewer than r independent inputs are reported, not
/// rejected.
pub fn verify_multicast(
    code: &NetworkCode,
    pruned: &MultiGraph,
    sinks: &[usize],
    r: usize,
) -> SinkReport {
    let entries = sinks
        .iter()
        .map(|&t| {
            let incoming: Vec<EdgeCopy> =
                pruned.edge_copies().filter(|c| c.to == t).collect();
            let vectors: Vec<Vec<u16>> = incoming
                .iter()
                .filter_map(|c| code.gek.get(c).cloned())
                .collect();
            let rank = gf::rank(&code.field, &vectors);
            SinkVerdict { sink: t, incoming, rank, decodable: rank == r }
        })
        .collect();
    SinkReport { rate: r, entries }
}

/// Outcome of a transmission: the symbol carried by every edge copy plus
/// each sink's decoded message (None when its observation matrix is
/// singular).
#[derive(Debug, Clone)]
pub struct Transmission {
    pub symbols: BTreeMap<EdgeCopy, u16>,
    pub decoded: Vec<(usize, Option<Vec<u16>>)>,
}

/// Propagates `message` (r field elements) edge by edge in sweep order
/// using the local kernels, then lets each sink solve its incoming system.
pub fn transmit(code: &NetworkCode, message: &[u16]) -> Result<Transmission> {
    if message.len() != code.rate {
        return Err(Error::InvalidInput(format!(
            "message carries {} symbols, rate is {}",
            message.len(),
            code.rate
        )));
    }
    if code.lek.is_empty() && !code.sweep.is_empty() {
        return Err(Error::InvalidInput(
            "local kernels missing; run extract_lek before transmit".into(),
        ));
    }
    let field = &code.field;
    let mut symbols: BTreeMap<EdgeCopy, u16> = BTreeMap::new();
    for &copy in &code.sweep {
        let kernel = code
            .lek
            .get(&copy.from)
            .ok_or_else(|| Error::Internal(format!("no kernel for node {}", copy.from + 1)))?;
        let col = kernel
            .outputs
            .iter()
            .position(|&o| o == copy)
            .ok_or_else(|| Error::Internal(format!("{copy} missing from its node kernel")))?;
        let mut acc = 0u16;
        match &kernel.inputs {
            KernelInputs::Imaginary(_) => {
                for (i, &m) in message.iter().enumerate() {
                    acc = field.mul_add(kernel.k[i][col], m, acc);
                }
            }
            KernelInputs::Edges(inputs) => {
                for (d, input) in inputs.iter().enumerate() {
                    let w = kernel.k[d][col];
                    if w == 0 {
                        continue;
                    }
                    let sym = *symbols.get(input).ok_or_else(|| {
                        Error::Internal(format!("{input} consumed before being scheduled"))
                    })?;
                    acc = field.mul_add(w, sym, acc);
                }
            }
        }
        symbols.insert(copy, acc);
    }

    let decoded = code
        .sinks
        .iter()
        .map(|&t| {
            let incoming: Vec<EdgeCopy> = code
                .gek
                .keys()
                .copied()
                .filter(|c| c.to == t)
                .collect();
            let rows: Vec<Vec<u16>> = incoming.iter().map(|c| code.gek[c].clone()).collect();
            let observations: Vec<u16> = incoming.iter().map(|c| symbols[c]).collect();
            let unique = gf::rank(&code.field, &rows) == code.rate;
            let solution = if unique {
                gf::solve(&code.field, &rows, &observations)
            } else {
                None
            };
            (t, solution)
        })
        .collect();

    Ok(Transmission { symbols, decoded })
}

impl NetworkCode {
    /// Stable text dump: field, rate, per-copy GEKs in copy order, then
    /// per-node LEK matrices. Hex digits sized to the field.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let width = self.field.hex_width();
        writeln!(
            w,
            "field gf(2^{}) poly {:#x}",
            self.field.degree(),
            self.field.poly()
        )?;
        writeln!(w, "rate {}", self.rate)?;
        writeln!(w, "source {}", self.source + 1)?;
        writeln!(
            w,
            "sinks {}",
            self.sinks
                .iter()
                .map(|t| (t + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for (copy, f) in &self.gek {
            let vec = f
                .iter()
                .map(|&x| format!("{x:0width$x}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "gek {copy} = [{vec}]")?;
        }
        for kernel in self.lek.values() {
            let ins = match &kernel.inputs {
                KernelInputs::Imaginary(r) => format!("imaginary({r})"),
                KernelInputs::Edges(e) => e
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            };
            let outs = kernel
                .outputs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "lek node {} in=[{ins}] out=[{outs}]", kernel.node + 1)?;
            for row in &kernel.k {
                let cells = row
                    .iter()
                    .map(|&x| format!("{x:0width$x}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(w, "  {cells}")?;
            }
        }
        Ok(())
    }
}
