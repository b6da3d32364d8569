//! Snapshot pipeline: multigraph -> paths -> prune -> paths line-graph ->
//! multicast code -> verification, in one call. This is what the `code`
//! CLI subcommand and the per-snapshot tests drive.

use crate::code::{self, NetworkCode, SinkReport};
use crate::gf::Field;
use crate::graph::{self, MultiGraph, PathSet};
use crate::plg::{Plg, TopoOrder};
use crate::synth::random_permutation;
use crate::{Error, Result};

/// Knobs for [`build_snapshot_code`].
#[derive(Debug, Clone)]
pub struct CodeOptions {
    /// GF(2^m) degree.
    pub field_m: u32,
    /// Shrink the field to the smallest order exceeding the number of
    /// eligible sinks instead of using `field_m`.
    pub min_field: bool,
    /// When the paths line-graph comes out cyclic, redo path finding this
    /// many times with permuted tie-breaking before giving up.
    pub retry_paths: u32,
    /// Seed for the permuted retries.
    pub seed: u64,
}

impl Default for CodeOptions {
    fn default() -> Self {
        CodeOptions { field_m: 8, min_field: false, retry_paths: 0, seed: 0 }
    }
}

/// Everything the snapshot pipeline produced.
#[derive(Debug, Clone)]
pub struct SnapshotCode {
    pub rate: usize,
    /// Sinks that carry at least one path; the code is built for these.
    pub eligible: Vec<usize>,
    /// Requested sinks with max-flow zero.
    pub unreachable: Vec<usize>,
    pub paths: PathSet,
    pub pruned: MultiGraph,
    pub plg: Plg,
    pub order: TopoOrder,
    pub code: NetworkCode,
    pub report: SinkReport,
    /// Which retry produced the acyclic PLG (0 = first attempt).
    pub attempt: u32,
}

/// Runs paths -> prune -> PLG -> order -> code -> verify on one topology.
/// The operating rate is the minimum max-flow over reachable sinks; sinks
/// with larger max-flow keep only their first `rate` paths.
pub fn build_snapshot_code(
    g: &MultiGraph,
    source: usize,
    sinks: &[usize],
    opts: &CodeOptions,
) -> Result<SnapshotCode> {
    if sinks.is_empty() {
        return Err(Error::InvalidInput("sink list is empty".into()));
    }
    if sinks.contains(&source) {
        return Err(Error::InvalidInput("the source cannot be its own sink".into()));
    }

    let probe = graph::find_paths(g, source, sinks);
    let unreachable: Vec<usize> =
        probe.sinks.iter().filter(|sp| sp.max_flow == 0).map(|sp| sp.sink).collect();
    let eligible: Vec<usize> =
        probe.sinks.iter().filter(|sp| sp.max_flow > 0).map(|sp| sp.sink).collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleSinks);
    }
    let rate = probe
        .sinks
        .iter()
        .filter(|sp| sp.max_flow > 0)
        .map(|sp| sp.max_flow)
        .min()
        .unwrap() as usize;

    let field_m = if opts.min_field {
        Field::smallest_exceeding(eligible.len())?.degree()
    } else {
        opts.field_m
    };

    let mut last_cycle = None;
    for attempt in 0..=opts.retry_paths {
        let paths = if attempt == 0 {
            prepare_paths(g, source, &eligible, rate, None)
        } else {
            let perm = random_permutation(opts.seed.wrapping_add(attempt as u64), g.node_count());
            prepare_paths(g, source, &eligible, rate, Some(&perm))
        };
        graph::validate_paths(g, &paths)?;
        let pruned = graph::prune(g, &paths);
        let plg = Plg::build(&pruned, source, &eligible, &paths)?;
        let order = match plg.topo_order() {
            Ok(order) => order,
            Err(err) => {
                last_cycle = Some(err);
                continue;
            }
        };
        let field = Field::new(field_m)?;
        let mut code = code::construct_multicast(&plg, &order, &paths, rate, field)?;
        code.lek = code::extract_lek(&code, &pruned)?;
        let report = code::verify_multicast(&code, &pruned, sinks, rate);
        return Ok(SnapshotCode {
            rate,
            eligible,
            unreachable,
            paths,
            pruned,
            plg,
            order,
            code,
            report,
            attempt,
        });
    }
    Err(last_cycle.expect("loop ran at least once"))
}

/// Path finding with optional node-relabelling (used to randomize
/// tie-breaking on retries), truncated to `rate` paths per sink.
fn prepare_paths(
    g: &MultiGraph,
    source: usize,
    sinks: &[usize],
    rate: usize,
    perm: Option<&[usize]>,
) -> PathSet {
    let paths = match perm {
        None => graph::find_paths(g, source, sinks),
        Some(perm) => {
            let relabeled = g.permuted(perm);
            let mut inverse = vec![0usize; perm.len()];
            for (orig, &new) in perm.iter().enumerate() {
                inverse[new] = orig;
            }
            let mapped_sinks: Vec<usize> = sinks.iter().map(|&t| perm[t]).collect();
            let found = graph::find_paths(&relabeled, perm[source], &mapped_sinks);
            PathSet {
                source,
                sinks: found
                    .sinks
                    .into_iter()
                    .map(|sp| graph::SinkPaths {
                        sink: inverse[sp.sink],
                        max_flow: sp.max_flow,
                        used_fallback: sp.used_fallback,
                        paths: sp
                            .paths
                            .into_iter()
                            .map(|p| graph::Path {
                                nodes: p.nodes.iter().map(|&v| inverse[v]).collect(),
                                copies: p.copies,
                            })
                            .collect(),
                    })
                    .collect(),
            }
        }
    };
    paths.truncate(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{check_lek_consistency, transmit};
    use crate::graph::butterfly;

    #[test]
    fn butterfly_end_to_end() {
        let g = butterfly();
        let out =
            build_snapshot_code(&g, 0, &[5, 6], &CodeOptions { field_m: 1, ..Default::default() })
                .unwrap();
        assert_eq!(out.rate, 2);
        assert!(out.unreachable.is_empty());
        assert!(out.report.all_decodable());
        assert!(check_lek_consistency(&out.code));
        let tx = transmit(&out.code, &[1, 0]).unwrap();
        for (_, decoded) in &tx.decoded {
            assert_eq!(decoded.as_deref(), Some(&[1u16, 0][..]));
        }
    }

    #[test]
    fn unreachable_sink_is_reported_and_skipped() {
        let mut g = butterfly();
        // Node 7 (id 6) loses both feeds.
        g.set(4, 6, 0);
        g.set(2, 6, 0);
        let out = build_snapshot_code(&g, 0, &[5, 6], &CodeOptions::default()).unwrap();
        assert_eq!(out.unreachable, vec![6]);
        assert_eq!(out.eligible, vec![5]);
        let verdict = out.report.entries.iter().find(|e| e.sink == 6).unwrap();
        assert!(!verdict.decodable);
    }

    #[test]
    fn all_sinks_unreachable_is_an_error() {
        let g = MultiGraph::new(4);
        assert!(matches!(
            build_snapshot_code(&g, 0, &[1, 2], &CodeOptions::default()),
            Err(Error::NoEligibleSinks)
        ));
    }

    #[test]
    fn min_field_shrinks_to_sink_bound() {
        let g = butterfly();
        let opts = CodeOptions { field_m: 8, min_field: true, ..Default::default() };
        let out = build_snapshot_code(&g, 0, &[5, 6], &opts).unwrap();
        // Two sinks: smallest order exceeding 2 is 4.
        assert_eq!(out.code.field.order(), 4);
        assert!(out.report.all_decodable());
    }

    #[test]
    fn source_in_sinks_is_rejected() {
        let g = butterfly();
        assert!(build_snapshot_code(&g, 0, &[0, 5], &CodeOptions::default()).is_err());
    }
}
