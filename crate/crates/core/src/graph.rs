//! Directed unit-capacity multigraphs and the path machinery on them:
//! max-flow, greedy shortest-path routing, Ford-Fulkerson flow
//! decomposition, and pruning down to the edges a path set actually uses.
//!
//! Multiplicities play the role of parallel unit-capacity channels, so
//! "edge-disjoint" always counts copies: a multiplicity-3 edge can carry
//! three paths of the same sink.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use crate::{Error, Result};

/// Directed multigraph stored as a dense multiplicity matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    mult: Vec<u32>,
}

/// One specific parallel copy of a directed edge. Copies are numbered from
/// zero within each (from, to) bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeCopy {
    pub from: usize,
    pub to: usize,
    pub copy: usize,
}

impl fmt::Display for EdgeCopy {
    /// External label; node ids and copy index are printed 1-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "edge({},{},{})", self.from + 1, self.to + 1, self.copy + 1)
    }
}

/// A simple path: node sequence plus the edge-copy index used on each hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub copies: Vec<usize>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn hops(&self) -> impl Iterator<Item = EdgeCopy> + '_ {
        self.nodes
            .windows(2)
            .zip(&self.copies)
            .map(|(w, &copy)| EdgeCopy { from: w[0], to: w[1], copy })
    }
}

/// Paths found for one sink, plus whether the greedy pass had to be
/// replaced by the flow-decomposition fallback.
#[derive(Debug, Clone)]
pub struct SinkPaths {
    pub sink: usize,
    pub max_flow: u32,
    pub paths: Vec<Path>,
    pub used_fallback: bool,
}

impl SinkPaths {
    pub fn achieves_max_flow(&self) -> bool {
        self.paths.len() as u32 == self.max_flow
    }
}

/// Per-sink edge-disjoint path sets from a common source.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub source: usize,
    pub sinks: Vec<SinkPaths>,
}

impl PathSet {
    /// Keeps only the first `r` paths of every sink. Copy indices stay
    /// contiguous because they were assigned in path order.
    pub fn truncate(&self, r: usize) -> PathSet {
        PathSet {
            source: self.source,
            sinks: self
                .sinks
                .iter()
                .map(|sp| SinkPaths {
                    sink: sp.sink,
                    max_flow: sp.max_flow,
                    paths: sp.paths.iter().take(r).cloned().collect(),
                    used_fallback: sp.used_fallback,
                })
                .collect(),
        }
    }
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        MultiGraph { n, mult: vec![0; n * n] }
    }

    /// Builds from (from, to, multiplicity) triples, 0-based.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u32)]) -> Self {
        let mut g = MultiGraph::new(n);
        for &(i, j, m) in edges {
            g.set(i, j, m);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.mult[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, m: u32) {
        assert!(i != j || m == 0, "self-loops are not allowed");
        self.mult[i * self.n + j] = m;
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.mult.iter().map(|&m| m as u64).sum()
    }

    /// Directed edges with non-zero multiplicity, ascending (from, to).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter_map(move |j| {
                let m = self.get(i, j);
                (m > 0).then_some((i, j, m))
            })
        })
    }

    /// All edge copies, ascending (from, to, copy).
    pub fn edge_copies(&self) -> impl Iterator<Item = EdgeCopy> + '_ {
        self.edges().flat_map(|(from, to, m)| {
            (0..m as usize).map(move |copy| EdgeCopy { from, to, copy })
        })
    }

    /// Elementwise minimum; both graphs must have the same node count.
    pub fn intersect(&self, other: &MultiGraph) -> MultiGraph {
        assert_eq!(self.n, other.n);
        MultiGraph {
            n: self.n,
            mult: self
                .mult
                .iter()
                .zip(&other.mult)
                .map(|(&a, &b)| a.min(b))
                .collect(),
        }
    }

    pub fn intersect_in_place(&mut self, other: &MultiGraph) {
        assert_eq!(self.n, other.n);
        for (a, &b) in self.mult.iter_mut().zip(&other.mult) {
            *a = (*a).min(b);
        }
    }

    /// Relabels nodes: new id of `v` is `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> MultiGraph {
        let mut g = MultiGraph::new(self.n);
        for (i, j, m) in self.edges() {
            g.set(perm[i], perm[j], m);
        }
        g
    }

    /// True when some directed cycle exists (iterative coloring DFS).
    pub fn has_directed_cycle(&self) -> bool {
        let n = self.n;
        let mut color = vec![0u8; n]; // 0 unseen, 1 on stack, 2 done
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(frame) = stack.last_mut() {
                let v = frame.0;
                if frame.1 < n {
                    let w = frame.1;
                    frame.1 += 1;
                    if self.get(v, w) == 0 {
                        continue;
                    }
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return true,
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        false
    }

    /// Writes the edge list as CSV (`i,j,mult`, 1-based).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,mult")?;
        for (i, j, m) in self.edges() {
            writeln!(w, "{},{},{}", i + 1, j + 1, m)?;
        }
        Ok(())
    }

    /// Reads an edge-list CSV (`i,j,mult`, 1-based, header optional).
    /// `min_nodes` pads the node count for graphs with isolated tail nodes.
    pub fn read_csv<R: BufRead>(r: R, min_nodes: usize) -> Result<MultiGraph> {
        let mut edges = Vec::new();
        let mut n = min_nodes;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("i,") || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!(
                    "graph csv line {}: expected `i,j,mult`, got `{line}`",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("graph csv line {}: bad number `{s}`", lineno + 1)))
            };
            let i = parse(parts[0])?;
            let j = parse(parts[1])?;
            let m = parse(parts[2])? as u32;
            if i == 0 || j == 0 {
                return Err(Error::Parse(format!(
                    "graph csv line {}: node ids are 1-based",
                    lineno + 1
                )));
            }
            n = n.max(i).max(j);
            edges.push((i - 1, j - 1, m));
        }
        Ok(MultiGraph::from_edges(n, &edges))
    }
}

/// Value of the maximum s->t flow, treating multiplicity as capacity.
/// Edmonds-Karp with bottleneck augmentation; antiparallel bundles are
/// handled by cancelling opposing flow before adding forward flow.
pub fn max_flow(g: &MultiGraph, s: usize, t: usize) -> u32 {
    assert_ne!(s, t, "max_flow requires distinct endpoints");
    flow_matrix(g, s, t).0
}

/// Runs Edmonds-Karp and returns (value, flow) where flow[i*n+j] is the
/// per-bundle flow, already cancelled so flow[ij] and flow[ji] are never
/// both positive.
fn flow_matrix(g: &MultiGraph, s: usize, t: usize) -> (u32, Vec<u32>) {
    let n = g.node_count();
    let mut flow = vec![0i64; n * n];
    let cap = |i: usize, j: usize| g.get(i, j) as i64;
    let mut total = 0u32;
    let mut parent = vec![usize::MAX; n];
    loop {
        // BFS in the residual graph; smallest-index neighbors first for
        // deterministic augmenting paths.
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[s] = s;
        let mut q = VecDeque::new();
        q.push_back(s);
        'bfs: while let Some(u) = q.pop_front() {
            for v in 0..n {
                if parent[v] != usize::MAX {
                    continue;
                }
                let residual = cap(u, v) - flow[u * n + v] + flow[v * n + u];
                if residual > 0 {
                    parent[v] = u;
                    if v == t {
                        break 'bfs;
                    }
                    q.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            break;
        }
        // Bottleneck along the found path.
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let u = parent[v];
            bottleneck = bottleneck.min(cap(u, v) - flow[u * n + v] + flow[v * n + u]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            // Cancel opposing flow first, then push forward.
            let back = flow[v * n + u].min(bottleneck);
            flow[v * n + u] -= back;
            flow[u * n + v] += bottleneck - back;
            v = u;
        }
        total += bottleneck as u32;
    }
    (total, flow.into_iter().map(|f| f as u32).collect())
}

/// Greedy shortest-path routing: up to `k` edge-disjoint paths, hop-count
/// metric, removing one multiplicity unit per hop after each path. Among
/// equal-length routes the lexicographically smallest node sequence wins.
/// May return fewer than `k` paths even when the max-flow admits `k`.
pub fn dijkstra_paths(g: &MultiGraph, s: usize, t: usize, k: usize) -> SinkPaths {
    let mut work = g.clone();
    let mut paths = Vec::new();
    let mut used = UsageCounter::new(g.node_count());
    for _ in 0..k {
        let Some(nodes) = shortest_path(&work, s, t) else {
            break;
        };
        for w in nodes.windows(2) {
            let m = work.get(w[0], w[1]);
            work.set(w[0], w[1], m - 1);
        }
        paths.push(used.assign(nodes));
    }
    SinkPaths { sink: t, max_flow: 0, paths, used_fallback: false }
}

/// Lexicographically smallest shortest path by hop count, or None when t is
/// unreachable. Built from a reverse BFS distance field.
fn shortest_path(g: &MultiGraph, s: usize, t: usize) -> Option<Vec<usize>> {
    let n = g.node_count();
    let mut dist = vec![u32::MAX; n];
    dist[t] = 0;
    let mut q = VecDeque::new();
    q.push_back(t);
    while let Some(v) = q.pop_front() {
        for u in 0..n {
            if g.get(u, v) > 0 && dist[u] == u32::MAX {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
        }
    }
    if dist[s] == u32::MAX {
        return None;
    }
    let mut nodes = vec![s];
    let mut u = s;
    while u != t {
        let next = (0..n)
            .find(|&v| g.get(u, v) > 0 && dist[v] != u32::MAX && dist[v] + 1 == dist[u])
            .expect("distance field guarantees a descending neighbor");
        nodes.push(next);
        u = next;
    }
    Some(nodes)
}

/// Assigns copy indices within one sink: the c-th use of a bundle across
/// the sink's paths (in discovery order) takes copy c.
struct UsageCounter {
    n: usize,
    used: Vec<usize>,
}

impl UsageCounter {
    fn new(n: usize) -> Self {
        UsageCounter { n, used: vec![0; n * n] }
    }

    fn assign(&mut self, nodes: Vec<usize>) -> Path {
        let copies = nodes
            .windows(2)
            .map(|w| {
                let slot = &mut self.used[w[0] * self.n + w[1]];
                let c = *slot;
                *slot += 1;
                c
            })
            .collect();
        Path { nodes, copies }
    }
}

/// Exactly max-flow edge-disjoint paths via integral flow decomposition.
/// Loops in the raw decomposition are cancelled so every returned path is
/// simple.
pub fn ford_fulkerson_paths(g: &MultiGraph, s: usize, t: usize) -> SinkPaths {
    let n = g.node_count();
    let (value, mut flow) = flow_matrix(g, s, t);
    let mut paths = Vec::new();
    let mut used = UsageCounter::new(n);
    for _ in 0..value {
        // Walk from s along positive flow, smallest index first; cancel any
        // loop we close so the walk stays simple.
        let mut nodes = vec![s];
        let mut pos = vec![usize::MAX; n];
        pos[s] = 0;
        let mut u = s;
        while u != t {
            let v = (0..n)
                .find(|&v| flow[u * n + v] > 0)
                .expect("flow conservation guarantees an outgoing unit");
            flow[u * n + v] -= 1;
            if pos[v] != usize::MAX {
                // Closed a loop v ... u -> v: drop it (its flow is consumed).
                for w in nodes.drain(pos[v] + 1..) {
                    pos[w] = usize::MAX;
                }
                u = v;
                continue;
            }
            pos[v] = nodes.len();
            nodes.push(v);
            u = v;
        }
        paths.push(used.assign(nodes));
    }
    SinkPaths { sink: t, max_flow: value, paths, used_fallback: false }
}

/// Per-sink path finding: greedy shortest-path first, Ford-Fulkerson
/// decomposition when the greedy pass falls short of the sink's max-flow.
/// Every sink is routed on the full graph independently.
pub fn find_paths(g: &MultiGraph, s: usize, sinks: &[usize]) -> PathSet {
    let sinks = sinks
        .iter()
        .map(|&t| {
            let h = max_flow(g, s, t);
            if h == 0 {
                return SinkPaths { sink: t, max_flow: 0, paths: Vec::new(), used_fallback: false };
            }
            let mut sp = dijkstra_paths(g, s, t, h as usize);
            sp.max_flow = h;
            if sp.paths.len() as u32 == h {
                sp
            } else {
                let mut sp = ford_fulkerson_paths(g, s, t);
                sp.used_fallback = true;
                sp
            }
        })
        .collect();
    PathSet { source: s, sinks }
}

/// Keeps only the edge copies some path uses. Distinct paths of one sink
/// need distinct copies, while different sinks may share a copy (a single
/// channel carries one coded symbol towards several sinks), so the pruned
/// multiplicity of a bundle is the maximum per-sink usage count.
pub fn prune(g: &MultiGraph, p: &PathSet) -> MultiGraph {
    let n = g.node_count();
    let mut pruned = MultiGraph::new(n);
    for sp in &p.sinks {
        let mut usage = vec![0u32; n * n];
        for path in &sp.paths {
            for hop in path.hops() {
                usage[hop.from * n + hop.to] += 1;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if usage[i * n + j] > pruned.get(i, j) {
                    pruned.set(i, j, usage[i * n + j]);
                }
            }
        }
    }
    pruned
}

/// Checks a path set against a graph: paths run source -> sink, hop copies
/// exist, and each sink's paths are pairwise copy-disjoint.
pub fn validate_paths(g: &MultiGraph, p: &PathSet) -> Result<()> {
    for sp in &p.sinks {
        let mut seen = std::collections::BTreeSet::new();
        for path in &sp.paths {
            if path.nodes.first() != Some(&p.source) || path.nodes.last() != Some(&sp.sink) {
                return Err(Error::PathInconsistency(format!(
                    "path for sink {} does not run source->sink",
                    sp.sink + 1
                )));
            }
            for hop in path.hops() {
                if hop.copy as u32 >= g.get(hop.from, hop.to) {
                    return Err(Error::PathInconsistency(format!(
                        "{hop} exceeds multiplicity {}",
                        g.get(hop.from, hop.to)
                    )));
                }
                if !seen.insert((sp.sink, hop)) {
                    return Err(Error::PathInconsistency(format!(
                        "{hop} reused within sink {}",
                        sp.sink + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Fig.-2-style butterfly: source 1, relay chain 4->5, sinks 6 and 7
/// (0-based internally). Used all over the tests.
pub fn butterfly() -> MultiGraph {
    MultiGraph::from_edges(
        7,
        &[
            (0, 1, 1), // 1->2
            (0, 2, 1), // 1->3
            (1, 3, 1), // 2->4
            (2, 3, 1), // 3->4
            (3, 4, 1), // 4->5
            (4, 5, 1), // 5->6
            (4, 6, 1), // 5->7
            (1, 5, 1), // 2->6
            (2, 6, 1), // 3->7
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterfly_max_flow_is_two_per_sink() {
        let g = butterfly();
        assert_eq!(max_flow(&g, 0, 5), 2);
        assert_eq!(max_flow(&g, 0, 6), 2);
        assert_eq!(max_flow(&g, 0, 3), 2);
        // The relay tail is fed by the single 4->5 edge.
        assert_eq!(max_flow(&g, 0, 4), 1);
    }

    #[test]
    fn source_without_outgoing_edges_has_zero_flow() {
        let mut g = MultiGraph::new(3);
        g.set(1, 2, 4);
        assert_eq!(max_flow(&g, 0, 2), 0);
    }

    #[test]
    fn multiplicity_counts_as_capacity() {
        let mut g = MultiGraph::new(2);
        g.set(0, 1, 3);
        assert_eq!(max_flow(&g, 0, 1), 3);
    }

    #[test]
    fn greedy_finds_the_butterfly_pair() {
        let g = butterfly();
        let sp = dijkstra_paths(&g, 0, 5, 2);
        let node_seqs: Vec<&[usize]> = sp.paths.iter().map(|p| p.nodes.as_slice()).collect();
        assert_eq!(node_seqs, vec![&[0, 1, 5][..], &[0, 2, 3, 4, 5][..]]);
        // Shortest-first implies non-decreasing lengths.
        assert!(sp.paths.windows(2).all(|w| w[0].len() <= w[1].len()));
    }

    #[test]
    fn greedy_on_single_chain_returns_it() {
        let g = MultiGraph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]);
        let sp = dijkstra_paths(&g, 0, 3, 1);
        assert_eq!(sp.paths.len(), 1);
        assert_eq!(sp.paths[0].nodes, vec![0, 1, 2, 3]);
    }

    /// Ten-node trap: the unique shortest path 0->1->8->9 consumes the
    /// first hop of one long route and the last hop of the other, so the
    /// greedy pass stalls at one path although the max-flow is two.
    fn trap_instance() -> MultiGraph {
        MultiGraph::from_edges(
            10,
            &[
                (0, 1, 1),
                (1, 2, 1),
                (2, 3, 1),
                (3, 4, 1),
                (4, 9, 1),
                (0, 5, 1),
                (5, 6, 1),
                (6, 7, 1),
                (7, 8, 1),
                (8, 9, 1),
                (1, 8, 1),
            ],
        )
    }

    #[test]
    fn greedy_blocks_on_trap_and_fallback_recovers() {
        let g = trap_instance();
        assert_eq!(max_flow(&g, 0, 9), 2);
        let greedy = dijkstra_paths(&g, 0, 9, 2);
        assert_eq!(greedy.paths.len(), 1);
        assert_eq!(greedy.paths[0].nodes, vec![0, 1, 8, 9]);
        let ff = ford_fulkerson_paths(&g, 0, 9);
        assert_eq!(ff.paths.len(), 2);
        let ps = find_paths(&g, 0, &[9]);
        assert!(ps.sinks[0].used_fallback);
        assert!(ps.sinks[0].achieves_max_flow());
        validate_paths(&g, &ps).unwrap();
    }

    #[test]
    fn find_paths_flags_unreachable_sink() {
        let mut g = MultiGraph::new(4);
        g.set(0, 1, 1);
        let ps = find_paths(&g, 0, &[1, 3]);
        assert_eq!(ps.sinks[1].max_flow, 0);
        assert!(ps.sinks[1].paths.is_empty());
    }

    #[test]
    fn disconnected_pair_yields_empty_decomposition() {
        let g = MultiGraph::new(3);
        let sp = ford_fulkerson_paths(&g, 0, 2);
        assert!(sp.paths.is_empty());
    }

    #[test]
    fn prune_butterfly_keeps_every_edge() {
        let g = butterfly();
        let ps = find_paths(&g, 0, &[5, 6]);
        let pruned = prune(&g, &ps);
        assert_eq!(pruned, g);
    }

    #[test]
    fn prune_of_empty_path_set_is_empty() {
        let g = butterfly();
        let ps = PathSet { source: 0, sinks: vec![] };
        assert_eq!(prune(&g, &ps).total_multiplicity(), 0);
    }

    #[test]
    fn prune_takes_max_usage_over_sinks() {
        // 0 -> 1 with multiplicity 2, then 1 -> 2 and 1 -> 3.
        let g = MultiGraph::from_edges(4, &[(0, 1, 2), (1, 2, 2), (1, 3, 1)]);
        // Sink 2 uses 0->1 twice, sink 3 once.
        let ps = find_paths(&g, 0, &[2, 3]);
        assert_eq!(ps.sinks[0].paths.len(), 2);
        assert_eq!(ps.sinks[1].paths.len(), 1);
        let pruned = prune(&g, &ps);
        assert_eq!(pruned.get(0, 1), 2);
        assert_eq!(pruned.get(1, 2), 2);
        assert_eq!(pruned.get(1, 3), 1);
    }

    #[test]
    fn rerouting_on_pruned_graph_reproduces_max_flow() {
        let g = trap_instance();
        let ps = find_paths(&g, 0, &[9]);
        let pruned = prune(&g, &ps);
        assert_eq!(max_flow(&pruned, 0, 9), 2);
    }

    #[test]
    fn cycle_detection() {
        let mut g = MultiGraph::new(3);
        g.set(0, 1, 1);
        g.set(1, 2, 1);
        assert!(!g.has_directed_cycle());
        g.set(2, 0, 1);
        assert!(g.has_directed_cycle());
        let mut two = MultiGraph::new(2);
        two.set(0, 1, 1);
        two.set(1, 0, 1);
        assert!(two.has_directed_cycle());
    }

    #[test]
    fn csv_round_trip() {
        let g = butterfly();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = MultiGraph::read_csv(std::io::Cursor::new(buf), 0).unwrap();
        assert_eq!(back, g);
    }
}
