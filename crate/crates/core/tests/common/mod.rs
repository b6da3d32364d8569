//! Oracles shared by the integration suites. These deliberately avoid the
//! library's flow machinery: the cut side enumerates every s-t partition,
//! and the packing side certifies achievability with explicit
//! backtracking over simple paths.

use satnc::graph::MultiGraph;

/// Minimum s-t cut by exhaustive enumeration of the 2^(n-2) partitions.
/// By integral max-flow/min-cut duality this equals the maximum number of
/// copy-disjoint s->t paths.
pub fn min_cut_enumeration(g: &MultiGraph, s: usize, t: usize) -> u32 {
    let n = g.node_count();
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = u32::MAX;
    for mask in 0..(1u32 << others.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (b, &v) in others.iter().enumerate() {
            side[v] = mask & (1 << b) != 0;
        }
        let mut cut = 0;
        for i in 0..n {
            for j in 0..n {
                if side[i] && !side[j] {
                    cut += g.get(i, j);
                }
            }
        }
        best = best.min(cut);
    }
    best
}

/// Tries to place `target` copy-disjoint s->t paths by backtracking over
/// simple paths, shortest candidates first. Returns true when a packing
/// of that size exists.
pub fn pack_disjoint_paths(g: &MultiGraph, s: usize, t: usize, target: u32) -> bool {
    let mut caps: Vec<u32> = (0..g.node_count())
        .flat_map(|i| (0..g.node_count()).map(move |j| g.get(i, j)))
        .collect();
    let n = g.node_count();
    let mut budget = 2_000_000u64;
    pack(&mut caps, n, s, t, target, &mut budget)
}

fn pack(caps: &mut [u32], n: usize, s: usize, t: usize, remaining: u32, budget: &mut u64) -> bool {
    if remaining == 0 {
        return true;
    }
    if *budget == 0 {
        panic!("path packing budget exhausted; oracle instance too adversarial");
    }
    *budget -= 1;
    let mut candidates = Vec::new();
    let mut visited = vec![false; n];
    visited[s] = true;
    enumerate_simple_paths(caps, n, s, t, &mut vec![s], &mut visited, &mut candidates);
    candidates.sort_by_key(|p| p.len());
    for path in candidates {
        for w in path.windows(2) {
            caps[w[0] * n + w[1]] -= 1;
        }
        if pack(caps, n, s, t, remaining - 1, budget) {
            return true;
        }
        for w in path.windows(2) {
            caps[w[0] * n + w[1]] += 1;
        }
    }
    false
}

fn enumerate_simple_paths(
    caps: &[u32],
    n: usize,
    u: usize,
    t: usize,
    prefix: &mut Vec<usize>,
    visited: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    if u == t {
        out.push(prefix.clone());
        return;
    }
    for v in 0..n {
        if !visited[v] && caps[u * n + v] > 0 {
            visited[v] = true;
            prefix.push(v);
            enumerate_simple_paths(caps, n, v, t, prefix, visited, out);
            prefix.pop();
            visited[v] = false;
        }
    }
}

/// Loads a fixture CSV from tests/fixtures.
pub fn fixture(name: &str) -> MultiGraph {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let file = std::fs::File::open(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    MultiGraph::read_csv(std::io::BufReader::new(file), 0).unwrap()
}
