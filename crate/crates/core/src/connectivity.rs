//! Edge connectivity via unit-capacity max-flow, with a minimum cut as a
//! certificate, plus an exhaustive cut search used as an independent check
//! on small graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, SimpleGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConnectivityError {
    #[error("need at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("source and sink coincide ({0})")]
    SameVertex(VertexId),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("exhaustive search would visit {0} edge subsets")]
    TooLarge(u128),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutMethod {
    Maxflow,
    Bruteforce,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityCertificate {
    pub lambda: usize,
    pub method: CutMethod,
    /// A cut of size `lambda`; empty when the graph is already disconnected.
    pub witness_cut: Vec<Edge>,
}

impl ConnectivityCertificate {
    /// True if deleting the witness edges disconnects `g`.
    pub fn witness_disconnects(&self, g: &SimpleGraph) -> bool {
        let mut h = g.clone();
        for &e in &self.witness_cut {
            h.remove_edge(e);
        }
        !h.is_connected()
    }
}

/// Residual network of an undirected unit-capacity graph. Arc `2i` is
/// `u -> v` and arc `2i + 1` is `v -> u` for the `i`-th edge; each is the
/// other's reverse.
struct UnitFlow {
    heads: Vec<usize>,
    out: Vec<Vec<usize>>,
    cap: Vec<u8>,
    edges: Vec<Edge>,
}

impl UnitFlow {
    fn new(g: &SimpleGraph) -> Self {
        let edges: Vec<Edge> = g.edges().collect();
        let mut heads = Vec::with_capacity(2 * edges.len());
        let mut out = vec![Vec::new(); g.n()];
        for (i, e) in edges.iter().enumerate() {
            let (u, v) = e.endpoints();
            heads.push(v);
            heads.push(u);
            out[u].push(2 * i);
            out[v].push(2 * i + 1);
        }
        UnitFlow {
            cap: vec![1; heads.len()],
            heads,
            out,
            edges,
        }
    }

    fn reset(&mut self) {
        self.cap.iter_mut().for_each(|c| *c = 1);
    }

    /// Augments along shortest paths until no path remains or `limit` units
    /// have been pushed.
    fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let n = self.out.len();
        let mut flow = 0;
        let mut via = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        while flow < limit {
            via.iter_mut().for_each(|x| *x = usize::MAX);
            via[s] = usize::MAX - 1;
            queue.clear();
            queue.push_back(s);
            'bfs: while let Some(x) = queue.pop_front() {
                for &a in &self.out[x] {
                    let y = self.heads[a];
                    if self.cap[a] > 0 && via[y] == usize::MAX {
                        via[y] = a;
                        if y == t {
                            break 'bfs;
                        }
                        queue.push_back(y);
                    }
                }
            }
            if via[t] == usize::MAX {
                break;
            }
            let mut y = t;
            while y != s {
                let a = via[y];
                self.cap[a] -= 1;
                self.cap[a ^ 1] += 1;
                y = self.heads[a ^ 1];
            }
            flow += 1;
        }
        flow
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &a in &self.out[x] {
                let y = self.heads[a];
                if self.cap[a] > 0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    fn cut(&self, side: &[bool]) -> Vec<Edge> {
        self.edges
            .iter()
            .copied()
            .filter(|e| {
                let (u, v) = e.endpoints();
                side[u] != side[v]
            })
            .collect()
    }
}

/// `lambda(G)` as the minimum over `t != 0` of the `0`-`t` max-flow.
pub fn edge_connectivity(g: &SimpleGraph) -> Result<ConnectivityCertificate, ConnectivityError> {
    let n = g.n();
    if n < 2 {
        return Err(ConnectivityError::TooFewVertices(n));
    }
    if !g.is_connected() {
        return Ok(ConnectivityCertificate {
            lambda: 0,
            method: CutMethod::Maxflow,
            witness_cut: Vec::new(),
        });
    }
    let mut net = UnitFlow::new(g);
    let mut best = usize::MAX;
    let mut witness = Vec::new();
    for t in 1..n {
        net.reset();
        // a flow that reaches the current best cannot improve it
        let f = net.max_flow(0, t, best);
        if f < best {
            best = f;
            witness = net.cut(&net.reachable(0));
        }
    }
    debug_assert_eq!(witness.len(), best);
    Ok(ConnectivityCertificate {
        lambda: best,
        method: CutMethod::Maxflow,
        witness_cut: witness,
    })
}

/// Maximum number of edge-disjoint `u`-`v` paths.
pub fn count_disjoint_paths(g: &SimpleGraph, u: VertexId, v: VertexId) -> Result<usize, ConnectivityError> {
    for x in [u, v] {
        if x.index() >= g.n() {
            return Err(ConnectivityError::VertexOutOfRange { vertex: x, n: g.n() });
        }
    }
    if u == v {
        return Err(ConnectivityError::SameVertex(u));
    }
    Ok(UnitFlow::new(g).max_flow(u.index(), v.index(), usize::MAX))
}

/// Subsets visited before the exhaustive search gives up.
pub const BRUTE_FORCE_MAX_SUBSETS: u128 = 1 << 24;

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn connected_without(n: usize, adj: &[u64], edges: &[(usize, usize)], removed: &[usize]) -> bool {
    let mut adj = adj.to_vec();
    for &i in removed {
        let (u, v) = edges[i];
        adj[u] &= !(1 << v);
        adj[v] &= !(1 << u);
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut seen = 1u64;
    let mut frontier = 1u64;
    while frontier != 0 {
        let x = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[x] & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == full
}

/// Smallest edge subset whose removal disconnects `g`, by trying every
/// subset in order of size. Only sizes up to the minimum degree are
/// searched, since the edges at a minimum-degree vertex always form a cut.
pub fn brute_force_certificate(g: &SimpleGraph) -> Result<ConnectivityCertificate, ConnectivityError> {
    let n = g.n();
    if n < 2 {
        return Err(ConnectivityError::TooFewVertices(n));
    }
    if n > 64 {
        return Err(ConnectivityError::TooLarge(u128::MAX));
    }
    let all: Vec<Edge> = g.edges().collect();
    let edges: Vec<(usize, usize)> = all.iter().map(|e| e.endpoints()).collect();
    let m = edges.len();
    let delta = g.min_degree();
    let budget: u128 = (0..=delta).map(|j| binom(m, j)).sum();
    if budget > BRUTE_FORCE_MAX_SUBSETS {
        return Err(ConnectivityError::TooLarge(budget));
    }
    let mut adj = vec![0u64; n];
    for &(u, v) in &edges {
        adj[u] |= 1 << v;
        adj[v] |= 1 << u;
    }
    for j in 0..=delta {
        let mut idx: Vec<usize> = (0..j).collect();
        loop {
            if !connected_without(n, &adj, &edges, &idx) {
                return Ok(ConnectivityCertificate {
                    lambda: j,
                    method: CutMethod::Bruteforce,
                    witness_cut: idx.iter().map(|&i| all[i]).collect(),
                });
            }
            // next j-combination of 0..m in lexicographic order
            let mut pos = j;
            while pos > 0 && idx[pos - 1] == m - j + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..j {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    unreachable!("the edges at a minimum-degree vertex disconnect it")
}

pub fn brute_force_connectivity(g: &SimpleGraph) -> Result<usize, ConnectivityError> {
    brute_force_certificate(g).map(|c| c.lambda)
}
