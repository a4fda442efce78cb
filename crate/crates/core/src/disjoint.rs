//! Turning `k` sampled trees into pairwise edge-disjoint spanning trees.
//!
//! Each edge a tree shares with an earlier tree is swapped out for an edge
//! that appears nowhere in the running union `G`. The swap crosses the cut
//! left by removing the repeated edge, so the tree stays spanning. When the
//! two sides of the cut are already completely joined in `G`, the repeated
//! edge is kept and the repair is recorded as a fallback.
//!
//! All choices are deterministic: trees are processed in index order,
//! repeated edges in canonical order, the replacement endpoint on the first
//! side is the vertex with the fewest `G`-neighbors across the cut (smallest
//! index on ties), and the second endpoint is the smallest non-neighbor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{graph_union, Edge, GraphError, SimpleGraph, SpanningTree, VertexId};
use crate::sampler::{sample_k_trees, RngStream, SamplerError, SamplerKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("edge {0} is not in the tree")]
    EdgeNotInTree(Edge),
    #[error("graph has {graph} vertices but the tree has {tree}")]
    SizeMismatch { graph: usize, tree: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// The two sides of `tree - e`; `c1` holds the smaller endpoint of `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub c1: Vec<VertexId>,
    pub c2: Vec<VertexId>,
}

fn side_mask(tree: &SpanningTree, e: Edge) -> Result<Vec<bool>, RepairError> {
    if !tree.contains(e) {
        return Err(RepairError::EdgeNotInTree(e));
    }
    let mut in_c1 = vec![false; tree.n()];
    let start = e.u();
    in_c1[start.index()] = true;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in tree.neighbors(x) {
            if !in_c1[y.index()] && !(x == e.u() && y == e.v()) {
                in_c1[y.index()] = true;
                stack.push(y);
            }
        }
    }
    Ok(in_c1)
}

pub fn split_components(tree: &SpanningTree, e: Edge) -> Result<Components, RepairError> {
    let in_c1 = side_mask(tree, e)?;
    let (c1, c2): (Vec<usize>, Vec<usize>) = (0..tree.n()).partition(|&v| in_c1[v]);
    Ok(Components {
        c1: c1.into_iter().map(VertexId).collect(),
        c2: c2.into_iter().map(VertexId).collect(),
    })
}

/// Picks the edge that replaces `e` in `tree`, or returns `e` itself when
/// every pair across the cut is already an edge of `g`.
pub fn get_replacement_edge(g: &SimpleGraph, tree: &SpanningTree, e: Edge) -> Result<Edge, RepairError> {
    if g.n() != tree.n() {
        return Err(RepairError::SizeMismatch {
            graph: g.n(),
            tree: tree.n(),
        });
    }
    let in_c1 = side_mask(tree, e)?;
    let c2_size = in_c1.iter().filter(|&&b| !b).count();

    let mut best: Option<(usize, VertexId)> = None;
    for v in (0..tree.n()).filter(|&v| in_c1[v]).map(VertexId) {
        let across = g.neighbors(v).iter().filter(|w| !in_c1[w.index()]).count();
        if best.map_or(true, |(d, _)| across < d) {
            best = Some((across, v));
            if across == 0 {
                break;
            }
        }
    }
    let (degree, v_star) = best.expect("c1 contains an endpoint of e");
    if degree == c2_size {
        return Ok(e);
    }
    let nbrs = g.neighbors(v_star);
    let w = (0..tree.n())
        .map(VertexId)
        .find(|w| !in_c1[w.index()] && !nbrs.contains(w))
        .expect("a non-neighbor exists when the cut is not complete");
    Ok(Edge::new(v_star, w)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Swap {
    /// 1-based tree index.
    pub tree: usize,
    pub removed: Edge,
    pub inserted: Edge,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepairLog {
    pub n: usize,
    pub k: usize,
    pub repeats_found: usize,
    pub repaired: usize,
    pub fallbacks: usize,
    pub swaps: Vec<Swap>,
}

impl RepairLog {
    fn record(&mut self, tree: usize, removed: Edge, inserted: Edge) {
        let fallback = removed == inserted;
        self.repeats_found += 1;
        if fallback {
            self.fallbacks += 1;
        } else {
            self.repaired += 1;
        }
        self.swaps.push(Swap {
            tree: tree + 1,
            removed,
            inserted,
            fallback,
        });
    }
}

/// `K_n` can only hold `k` edge-disjoint spanning trees if `k(n-1) <= C(n,2)`.
pub fn packing_possible(n: usize, k: usize) -> bool {
    k * n.saturating_sub(1) <= n * n.saturating_sub(1) / 2
}

/// Makes the trees pairwise edge-disjoint where possible. The first tree is
/// never modified; for later trees the repeated edges are recomputed against
/// the already-repaired earlier trees.
pub fn disjointify(trees: Vec<SpanningTree>) -> Result<(Vec<SpanningTree>, RepairLog), RepairError> {
    let mut g = graph_union(&trees)?;
    let n = g.n();
    let mut log = RepairLog {
        n,
        k: trees.len(),
        ..RepairLog::default()
    };
    let mut trees = trees;
    let mut earlier = SimpleGraph::empty(n);
    for i in 0..trees.len() {
        if i > 0 {
            let repeats: Vec<Edge> = trees[i]
                .edges()
                .iter()
                .copied()
                .filter(|&e| earlier.has_edge(e))
                .collect();
            for e in repeats {
                let replacement = get_replacement_edge(&g, &trees[i], e)?;
                if replacement != e {
                    trees[i].swap_edge(e, replacement)?;
                    g.add_edge(replacement);
                }
                log.record(i, e, replacement);
            }
        }
        for &e in trees[i].edges() {
            earlier.add_edge(e);
        }
    }
    debug_assert_eq!(g, graph_union(&trees)?);
    Ok((trees, log))
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: SimpleGraph,
    pub trees: Vec<SpanningTree>,
    pub log: RepairLog,
}

/// Samples `k` uniform trees, repairs their overlaps and returns the union.
pub fn generate_k_connected(
    n: usize,
    k: usize,
    kind: SamplerKind,
    stream: &RngStream,
) -> Result<Generated, RepairError> {
    let sampled = sample_k_trees(n, k, kind, stream)?;
    let (trees, log) = disjointify(sampled)?;
    let graph = graph_union(&trees)?;
    Ok(Generated { graph, trees, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prufer::{prufer_decode, PruferSeq};

    fn e(a: usize, b: usize) -> Edge {
        Edge::new(a, b).unwrap()
    }

    fn tree(edges: &[(usize, usize)], n: usize) -> SpanningTree {
        SpanningTree::validate(edges.iter().map(|&(a, b)| e(a, b)), n).unwrap()
    }

    fn ids(v: &[usize]) -> Vec<VertexId> {
        v.iter().copied().map(VertexId).collect()
    }

    #[test]
    fn split_path_and_star() {
        let path = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let c = split_components(&path, e(1, 2)).unwrap();
        assert_eq!((c.c1, c.c2), (ids(&[0, 1]), ids(&[2, 3])));

        let star = tree(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5);
        let c = split_components(&star, e(0, 4)).unwrap();
        assert_eq!((c.c1, c.c2), (ids(&[0, 1, 2, 3]), ids(&[4])));

        assert_eq!(
            split_components(&star, e(1, 2)),
            Err(RepairError::EdgeNotInTree(e(1, 2)))
        );
    }

    #[test]
    fn replacement_prefers_min_cross_degree() {
        // tree: 0-1, 1-2, 2-3, 3-4; cut at {1,2} gives C1 = {0,1}, C2 = {2,3,4}
        let t = tree(&[(0, 1), (1, 2), (2, 3), (3, 4)], 5);
        let mut g = SimpleGraph::from_edges(5, t.edges().iter().copied()).unwrap();
        g.add_edge(e(0, 2));
        g.add_edge(e(0, 3));
        // vertex 0 sees {2,3} across, vertex 1 sees {2}: pick 1, first non-neighbor 3
        assert_eq!(get_replacement_edge(&g, &t, e(1, 2)).unwrap(), e(1, 3));
    }

    #[test]
    fn replacement_falls_back_on_complete_cut() {
        let t = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let mut g = SimpleGraph::complete(4);
        assert_eq!(get_replacement_edge(&g, &t, e(1, 2)).unwrap(), e(1, 2));
        // a single vertex on the far side, adjacent to everything in C1
        let star = tree(&[(0, 1), (0, 2), (0, 3)], 4);
        g.remove_edge(e(1, 2));
        assert_eq!(get_replacement_edge(&g, &star, e(0, 3)).unwrap(), e(0, 3));
    }

    #[test]
    fn replacement_size_mismatch() {
        let t = tree(&[(0, 1)], 2);
        assert!(matches!(
            get_replacement_edge(&SimpleGraph::empty(3), &t, e(0, 1)),
            Err(RepairError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn single_tree_untouched() {
        let t = tree(&[(0, 1), (1, 2)], 3);
        let (out, log) = disjointify(vec![t.clone()]).unwrap();
        assert_eq!(out, vec![t]);
        assert_eq!(log.repeats_found, 0);
        assert!(log.swaps.is_empty());
    }

    #[test]
    fn duplicated_path_is_fully_repaired() {
        let p = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let (out, log) = disjointify(vec![p.clone(), p.clone()]).unwrap();
        assert_eq!(out[0], p);
        assert!(out[1].edges().is_disjoint(p.edges()));
        assert_eq!(out[1], tree(&[(0, 2), (1, 3), (0, 3)], 4));
        assert_eq!((log.repeats_found, log.repaired, log.fallbacks), (3, 3, 0));
        assert_eq!(graph_union(&out).unwrap(), SimpleGraph::complete(4));
        let inserted: Vec<Edge> = log.swaps.iter().map(|s| s.inserted).collect();
        assert_eq!(inserted, vec![e(0, 2), e(1, 3), e(0, 3)]);
    }

    #[test]
    fn two_vertices_always_fall_back() {
        let t = tree(&[(0, 1)], 2);
        let (out, log) = disjointify(vec![t.clone(), t.clone()]).unwrap();
        assert_eq!(out, vec![t.clone(), t]);
        assert_eq!((log.repeats_found, log.repaired, log.fallbacks), (1, 0, 1));
        assert!(log.swaps[0].fallback);
        assert_eq!(graph_union(&out).unwrap().edge_count(), 1);
    }

    #[test]
    fn every_pair_on_four_vertices() {
        // A star uses every edge at its center, so no tree of K_4 avoids it;
        // those pairs must fall back. Every other pair exhausts K_4.
        let all: Vec<SpanningTree> = PruferSeq::enumerate(4)
            .map(|s| prufer_decode(&s, 4).unwrap())
            .collect();
        let mut fallback_pairs = 0;
        for a in &all {
            let star = (0..4).any(|v| a.degree(VertexId(v)) == 3);
            for b in &all {
                let (out, log) = disjointify(vec![a.clone(), b.clone()]).unwrap();
                let union = graph_union(&out).unwrap();
                assert_eq!(log.fallbacks > 0, star);
                if star {
                    fallback_pairs += 1;
                    assert!(union.edge_count() < 6);
                } else {
                    assert_eq!(union.edge_count(), 6);
                }
                assert!(crate::connectivity::edge_connectivity(&union).unwrap().lambda >= 2);
            }
        }
        assert_eq!(fallback_pairs, 64);
    }

    #[test]
    fn log_json_shape() {
        let p = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let (_, log) = disjointify(vec![p.clone(), p]).unwrap();
        let json = serde_json::to_value(&log).unwrap();
        assert_eq!(json["swaps"][0]["tree"], 2);
        assert_eq!(json["swaps"][0]["removed"], serde_json::json!([1, 2]));
        let back: RepairLog = serde_json::from_value(json).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_k_connected(40, 4, SamplerKind::Wilson, &RngStream::new(3, 0)).unwrap();
        let b = generate_k_connected(40, 4, SamplerKind::Wilson, &RngStream::new(3, 0)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn packing_feasibility() {
        assert!(packing_possible(4, 2));
        assert!(!packing_possible(4, 3));
        assert!(packing_possible(10, 5));
        assert!(!packing_possible(10, 6));
    }
}
