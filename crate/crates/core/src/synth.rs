//! Seeded random instance generators for tests and benchmarks. All
//! randomness is ChaCha-seeded, so a given seed always produces the same
//! instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{max_flow, MultiGraph};

/// Random directed multigraph: every ordered pair (i, j), i != j, gets an
/// edge with probability `p` and multiplicity 1..=max_mult.
pub fn random_digraph(seed: u64, n: usize, p: f64, max_mult: u32) -> MultiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = MultiGraph::new(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(p) {
                g.set(i, j, rng.gen_range(1..=max_mult));
            }
        }
    }
    g
}

/// Random DAG in natural topological order (edges only i -> j for i < j),
/// which makes every induced paths line-graph acyclic.
pub fn random_dag(seed: u64, n: usize, p: f64, max_mult: u32) -> MultiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = MultiGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                g.set(i, j, rng.gen_range(1..=max_mult));
            }
        }
    }
    g
}

/// A multicast test instance: graph, source, sinks and operating rate.
#[derive(Debug, Clone)]
pub struct MulticastInstance {
    pub graph: MultiGraph,
    pub source: usize,
    pub sinks: Vec<usize>,
    pub rate: usize,
}

/// Draws a random DAG instance whose sinks all support at least rate 1;
/// the rate is the sink max-flow minimum, clamped to `max_rate`. Returns
/// None when the drawn graph has no usable sink (caller retries with the
/// next seed).
pub fn random_dag_instance(seed: u64, max_n: usize, max_rate: usize) -> Option<MulticastInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.gen_range(5..=max_n.max(5));
    let graph = random_dag(seed, n, 0.5, 3);
    let source = 0;
    let reachable: Vec<(usize, u32)> = (1..n)
        .map(|t| (t, max_flow(&graph, source, t)))
        .filter(|&(_, h)| h >= 1)
        .collect();
    if reachable.is_empty() {
        return None;
    }
    let num_sinks = rng.gen_range(1..=reachable.len().min(3));
    // Prefer far sinks; they have the more interesting path structure.
    let mut sinks: Vec<usize> = reachable
        .iter()
        .rev()
        .take(num_sinks)
        .map(|&(t, _)| t)
        .collect();
    sinks.sort_unstable();
    let h_min = sinks
        .iter()
        .map(|&t| max_flow(&graph, source, t))
        .min()
        .unwrap();
    let rate = (h_min as usize).min(max_rate);
    Some(MulticastInstance { graph, source, sinks, rate })
}

/// Deterministic node permutation of 0..n (Fisher-Yates).
pub fn random_permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seed_deterministic() {
        assert_eq!(random_digraph(7, 6, 0.4, 3), random_digraph(7, 6, 0.4, 3));
        assert_eq!(random_dag(7, 6, 0.4, 3), random_dag(7, 6, 0.4, 3));
        assert_eq!(random_permutation(7, 10), random_permutation(7, 10));
    }

    #[test]
    fn dags_are_acyclic() {
        for seed in 0..20 {
            assert!(!random_dag(seed, 8, 0.6, 3).has_directed_cycle());
        }
    }

    #[test]
    fn instances_have_positive_rate() {
        let mut found = 0;
        for seed in 0..50 {
            if let Some(inst) = random_dag_instance(seed, 10, 3) {
                assert!(inst.rate >= 1);
                for &t in &inst.sinks {
                    assert!(max_flow(&inst.graph, inst.source, t) as usize >= inst.rate);
                }
                found += 1;
            }
        }
        assert!(found > 30);
    }
}
