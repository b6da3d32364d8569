//! The paths line-graph (PLG): a digraph whose nodes are the source
//! marker, one marker per sink, and one node per edge copy of the pruned
//! multigraph. Arcs exist only
//!
//! 1. from the source marker to every copy leaving the source,
//! 2. from every copy entering a sink to that sink's marker, and
//! 3. between consecutive copies of some chosen path.
//!
//! A raw full-duplex graph is almost always cyclic, but the PLG induced by
//! a concrete path set may still be acyclic; that is exactly the case in
//! which an ordinary upstream-to-downstream sweep can build a linear
//! multicast without convolutional machinery.

use std::collections::BTreeMap;
use std::io::Write;

use crate::graph::{EdgeCopy, MultiGraph, PathSet};
use crate::{Error, Result};

/// A node of the paths line-graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlgNode {
    Source,
    Sink(usize),
    Edge(EdgeCopy),
}

impl std::fmt::Display for PlgNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlgNode::Source => write!(f, "src"),
            PlgNode::Sink(t) => write!(f, "sink({})", t + 1),
            PlgNode::Edge(e) => write!(f, "{e}"),
        }
    }
}

/// Paths line-graph with back-references from node ids to their origin.
#[derive(Debug, Clone)]
pub struct Plg {
    nodes: Vec<PlgNode>,
    arcs: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    copy_ids: BTreeMap<EdgeCopy, usize>,
}

/// An upstream-to-downstream order over PLG nodes.
#[derive(Debug, Clone)]
pub struct TopoOrder {
    /// Node ids, upstream first.
    pub sequence: Vec<usize>,
    /// position[v] = rank of node v in `sequence`.
    pub position: Vec<usize>,
}

impl Plg {
    /// Builds the PLG for a pruned graph and the path set that pruned it.
    /// Errors when a path references a copy the graph does not carry.
    pub fn build(pruned: &MultiGraph, source: usize, sinks: &[usize], paths: &PathSet) -> Result<Plg> {
        let mut nodes = vec![PlgNode::Source];
        let mut sink_ids = BTreeMap::new();
        for &t in sinks {
            sink_ids.insert(t, nodes.len());
            nodes.push(PlgNode::Sink(t));
        }
        let mut copy_ids = BTreeMap::new();
        for copy in pruned.edge_copies() {
            copy_ids.insert(copy, nodes.len());
            nodes.push(PlgNode::Edge(copy));
        }

        let mut arcs = std::collections::BTreeSet::new();
        // Rule 1: source marker feeds every copy leaving the source.
        for (&copy, &id) in &copy_ids {
            if copy.from == source {
                arcs.insert((0usize, id));
            }
        }
        // Rule 2: every copy entering a sink feeds that sink's marker.
        for (&copy, &id) in &copy_ids {
            if let Some(&tid) = sink_ids.get(&copy.to) {
                arcs.insert((id, tid));
            }
        }
        // Rule 3: transitions used by some path.
        for sp in &paths.sinks {
            for path in &sp.paths {
                let hops: Vec<EdgeCopy> = path.hops().collect();
                for pair in hops.windows(2) {
                    let a = *copy_ids.get(&pair[0]).ok_or_else(|| {
                        Error::PathInconsistency(format!("{} not present in pruned graph", pair[0]))
                    })?;
                    let b = *copy_ids.get(&pair[1]).ok_or_else(|| {
                        Error::PathInconsistency(format!("{} not present in pruned graph", pair[1]))
                    })?;
                    arcs.insert((a, b));
                }
                for hop in &hops {
                    if !copy_ids.contains_key(hop) {
                        return Err(Error::PathInconsistency(format!(
                            "{hop} not present in pruned graph"
                        )));
                    }
                }
            }
        }

        let arcs: Vec<(usize, usize)> = arcs.into_iter().collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(a, b) in &arcs {
            adj[a].push(b);
        }
        Ok(Plg { nodes, arcs, adj, copy_ids })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: usize) -> PlgNode {
        self.nodes[id]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn out_neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    /// PLG node id of an edge copy, if the copy exists.
    pub fn copy_id(&self, copy: EdgeCopy) -> Option<usize> {
        self.copy_ids.get(&copy).copied()
    }

    /// Edge-copy nodes in ascending copy order.
    pub fn edge_nodes(&self) -> impl Iterator<Item = (EdgeCopy, usize)> + '_ {
        self.copy_ids.iter().map(|(&c, &id)| (c, id))
    }

    /// True iff the PLG has no directed cycle.
    pub fn is_generalized_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Some directed cycle as a node-id sequence (first == last), if any.
    /// Iterative DFS with an explicit stack; deterministic.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut color = vec![0u8; n];
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            color[start] = 1;
            while let Some(frame) = stack.last_mut() {
                let v = frame.0;
                if frame.1 < self.adj[v].len() {
                    let w = self.adj[v][frame.1];
                    frame.1 += 1;
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => {
                            // Unwind the stack back to w to report the cycle.
                            let mut cycle: Vec<usize> =
                                stack.iter().map(|&(u, _)| u).skip_while(|&u| u != w).collect();
                            cycle.push(w);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Human-readable labels for a node-id sequence.
    pub fn labels(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&id| self.nodes[id].to_string()).collect()
    }

    /// Deterministic upstream-to-downstream order (ties broken towards the
    /// smallest node id). Errors with the offending cycle when none exists.
    pub fn topo_order(&self) -> Result<TopoOrder> {
        match topological_order(self.nodes.len(), &self.arcs) {
            Some(sequence) => {
                let mut position = vec![0; sequence.len()];
                for (rank, &v) in sequence.iter().enumerate() {
                    position[v] = rank;
                }
                Ok(TopoOrder { sequence, position })
            }
            None => {
                let cycle = self.find_cycle().expect("no topo order implies a cycle");
                Err(Error::CyclicPlg { cycle: self.labels(&cycle) })
            }
        }
    }

    /// Writes the arc list as CSV with display labels.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "from,to")?;
        for &(a, b) in &self.arcs {
            writeln!(w, "{},{}", self.nodes[a], self.nodes[b])?;
        }
        Ok(())
    }
}

/// Kahn's algorithm with a min-heap, i.e. the lexicographically smallest
/// topological order. None when the digraph is cyclic.
pub fn topological_order(n: usize, arcs: &[(usize, usize)]) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut indeg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in arcs {
        indeg[b] += 1;
        adj[a].push(b);
    }
    let mut heap: BinaryHeap<Reverse<usize>> = indeg
        .iter()
        .enumerate()
        .filter_map(|(v, &d)| (d == 0).then_some(Reverse(v)))
        .collect();
    let mut sequence = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        sequence.push(v);
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                heap.push(Reverse(w));
            }
        }
    }
    (sequence.len() == n).then_some(sequence)
}

/// Checks that `sequence` is a bijective upstream-to-downstream order:
/// every node appears exactly once and every arc points forward.
pub fn is_valid_order(n: usize, arcs: &[(usize, usize)], sequence: &[usize]) -> bool {
    if sequence.len() != n {
        return false;
    }
    let mut position = vec![usize::MAX; n];
    for (rank, &v) in sequence.iter().enumerate() {
        if v >= n || position[v] != usize::MAX {
            return false;
        }
        position[v] = rank;
    }
    arcs.iter().all(|&(a, b)| position[a] < position[b])
}
