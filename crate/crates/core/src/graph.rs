//! Vertex, edge, tree and simple-graph types shared by the rest of the crate.
//!
//! Vertices are 0-based internally. Everything that crosses an I/O boundary
//! (edge-list text, JSON, DOT) is rendered 1-based.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("wrong edge count: expected {expected}, found {found}")]
    WrongEdgeCount { expected: usize, found: usize },
    #[error("edge set is disconnected")]
    Disconnected,
    #[error("trees disagree on vertex count ({0} vs {1})")]
    MismatchedN(usize, usize),
    #[error("empty tree list")]
    Empty,
    #[error("edge {0} is not in the tree")]
    MissingEdge(Edge),
    #[error("edge {0} is already in the tree")]
    DuplicateEdge(Edge),
    #[error("edge-list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A vertex of `[n]`, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

impl fmt::Display for VertexId {
    /// 1-based, matching the `[n] = {1, ..., n}` labeling.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// Undirected edge with endpoints in canonical order (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    u: VertexId,
    v: VertexId,
}

impl Edge {
    pub fn new(a: impl Into<VertexId>, b: impl Into<VertexId>) -> Result<Edge, GraphError> {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(GraphError::SelfLoop(a.0));
        }
        Ok(Edge {
            u: a.min(b),
            v: a.max(b),
        })
    }

    /// Like [`Edge::new`] but also checks both endpoints are below `n`.
    pub fn in_range(a: usize, b: usize, n: usize) -> Result<Edge, GraphError> {
        for x in [a, b] {
            if x >= n {
                return Err(GraphError::VertexOutOfRange { vertex: x, n });
            }
        }
        Edge::new(a, b)
    }

    #[inline]
    pub fn u(self) -> VertexId {
        self.u
    }

    #[inline]
    pub fn v(self) -> VertexId {
        self.v
    }

    #[inline]
    pub fn endpoints(self) -> (usize, usize) {
        (self.u.0, self.v.0)
    }

    /// True when the two edges share exactly one endpoint.
    pub fn is_adjacent(self, other: Edge) -> bool {
        self != other
            && (self.u == other.u || self.u == other.v || self.v == other.u || self.v == other.v)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.u, self.v)
    }
}

// Serialized as a 1-based `[u, v]` pair.
impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.u.0 + 1, self.v.0 + 1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b] = <[usize; 2]>::deserialize(d)?;
        if a == 0 || b == 0 {
            return Err(serde::de::Error::custom("vertex labels are 1-based"));
        }
        Edge::new(a - 1, b - 1).map_err(serde::de::Error::custom)
    }
}

fn is_connected(n: usize, adjacency: &[Vec<VertexId>]) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for y in &adjacency[x] {
            if !seen[y.0] {
                seen[y.0] = true;
                count += 1;
                queue.push_back(y.0);
            }
        }
    }
    count == n
}

/// A spanning tree of `K_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    n: usize,
    edges: BTreeSet<Edge>,
    adjacency: Vec<Vec<VertexId>>,
}

impl SpanningTree {
    /// Validates that `edges` forms a spanning tree on `[n]`.
    ///
    /// Check order: endpoint range, repeated input edges (reported as a
    /// wrong edge count), connectivity, then the exact `n - 1` count.
    pub fn validate(edges: impl IntoIterator<Item = Edge>, n: usize) -> Result<Self, GraphError> {
        let raw: Vec<Edge> = edges.into_iter().collect();
        for e in &raw {
            if e.v.0 >= n {
                return Err(GraphError::VertexOutOfRange { vertex: e.v.0, n });
            }
        }
        let expected = n.saturating_sub(1);
        let edges: BTreeSet<Edge> = raw.iter().copied().collect();
        if edges.len() != raw.len() {
            return Err(GraphError::WrongEdgeCount {
                expected,
                found: edges.len(),
            });
        }
        let adjacency = build_adjacency(n, &edges);
        if !is_connected(n, &adjacency) {
            return Err(GraphError::Disconnected);
        }
        if edges.len() != expected {
            return Err(GraphError::WrongEdgeCount {
                expected,
                found: edges.len(),
            });
        }
        Ok(SpanningTree {
            n,
            edges,
            adjacency,
        })
    }

    /// Builds from a parent array rooted anywhere (`parent[root] == root`).
    /// Edges are assumed to already form a tree; used by the samplers.
    pub(crate) fn from_parents_unchecked(parent: &[usize]) -> Self {
        let n = parent.len();
        let edges: BTreeSet<Edge> = parent
            .iter()
            .enumerate()
            .filter(|&(x, &p)| x != p)
            .map(|(x, &p)| Edge::new(x, p).expect("parent arrays have no self-loops"))
            .collect();
        debug_assert_eq!(edges.len(), n.saturating_sub(1));
        let adjacency = build_adjacency(n, &edges);
        SpanningTree {
            n,
            edges,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    /// Parent array rooted at `root`; `parent[root] == root`.
    pub fn parents(&self, root: VertexId) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.n];
        parent[root.0] = root.0;
        let mut stack = vec![root.0];
        while let Some(x) = stack.pop() {
            for y in &self.adjacency[x] {
                if parent[y.0] == usize::MAX {
                    parent[y.0] = x;
                    stack.push(y.0);
                }
            }
        }
        parent
    }

    /// Replaces `remove` by `insert`. The result must still be a spanning tree,
    /// otherwise the tree is left untouched and an error is returned.
    pub fn swap_edge(&mut self, remove: Edge, insert: Edge) -> Result<(), GraphError> {
        if remove == insert {
            return if self.contains(remove) {
                Ok(())
            } else {
                Err(GraphError::MissingEdge(remove))
            };
        }
        if !self.edges.contains(&remove) {
            return Err(GraphError::MissingEdge(remove));
        }
        if self.edges.contains(&insert) {
            return Err(GraphError::DuplicateEdge(insert));
        }
        if insert.v.0 >= self.n {
            return Err(GraphError::VertexOutOfRange {
                vertex: insert.v.0,
                n: self.n,
            });
        }
        let mut edges = self.edges.clone();
        edges.remove(&remove);
        edges.insert(insert);
        let adjacency = build_adjacency(self.n, &edges);
        if !is_connected(self.n, &adjacency) {
            return Err(GraphError::Disconnected);
        }
        self.edges = edges;
        self.adjacency = adjacency;
        Ok(())
    }
}

fn build_adjacency(n: usize, edges: &BTreeSet<Edge>) -> Vec<Vec<VertexId>> {
    let mut adjacency = vec![Vec::new(); n];
    for e in edges {
        adjacency[e.u.0].push(e.v);
        adjacency[e.v.0].push(e.u);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    adjacency
}

/// A simple undirected graph on `[n]` with sorted neighbor sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimpleGraph {
    n: usize,
    adjacency: Vec<BTreeSet<VertexId>>,
    edge_count: usize,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        SimpleGraph {
            n,
            adjacency: vec![BTreeSet::new(); n],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = SimpleGraph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(Edge::new(u, v).unwrap());
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut g = SimpleGraph::empty(n);
        for e in edges {
            if e.v.0 >= n {
                return Err(GraphError::VertexOutOfRange { vertex: e.v.0, n });
            }
            g.add_edge(e);
        }
        Ok(g)
    }

    /// Adds `e`; returns false if it was already present.
    pub fn add_edge(&mut self, e: Edge) -> bool {
        let fresh = self.adjacency[e.u.0].insert(e.v);
        if fresh {
            self.adjacency[e.v.0].insert(e.u);
            self.edge_count += 1;
        }
        fresh
    }

    pub fn remove_edge(&mut self, e: Edge) -> bool {
        let present = self.adjacency[e.u.0].remove(&e.v);
        if present {
            self.adjacency[e.v.0].remove(&e.u);
            self.edge_count -= 1;
        }
        present
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.adjacency[e.u.0].contains(&e.v)
    }

    pub fn neighbors(&self, v: VertexId) -> &BTreeSet<VertexId> {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).min().unwrap_or(0)
    }

    /// Edges in ascending canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            nbrs.range(VertexId(u + 1)..).map(move |&v| Edge {
                u: VertexId(u),
                v,
            })
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for y in &self.adjacency[x] {
                if !seen[y.0] {
                    seen[y.0] = true;
                    count += 1;
                    stack.push(y.0);
                }
            }
        }
        count == self.n
    }

    /// Renders the `# n=<n> m=<m>` edge-list format, 1-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={} m={}\n", self.n, self.edge_count);
        for e in self.edges() {
            out.push_str(&format!("{} {}\n", e.u, e.v));
        }
        out
    }

    /// Parses the edge-list format. Blank lines are ignored; the header is
    /// mandatory and its `m` must match the number of distinct edges.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let (n, m) = parse_header(header).ok_or_else(|| GraphError::Parse {
            line: hline,
            msg: format!("expected `# n=<n> m=<m>`, got `{header}`"),
        })?;
        let mut g = SimpleGraph::empty(n);
        for (line, text) in lines {
            let err = |msg: String| GraphError::Parse { line, msg };
            let mut parts = text.split_whitespace();
            let mut next = || -> Result<usize, GraphError> {
                let tok = parts.next().ok_or_else(|| err("expected two labels".into()))?;
                let x: usize = tok
                    .parse()
                    .map_err(|_| err(format!("bad vertex label `{tok}`")))?;
                if x == 0 || x > n {
                    return Err(err(format!("label {x} outside 1..={n}")));
                }
                Ok(x - 1)
            };
            let (a, b) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(err("trailing tokens".into()));
            }
            let e = Edge::new(a, b).map_err(|e| err(e.to_string()))?;
            g.add_edge(e);
        }
        if g.edge_count != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header says m={m} but {} edges were read", g.edge_count),
            });
        }
        Ok(g)
    }

    /// Undirected DOT, 1-based labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph {\n");
        for v in 0..self.n {
            out.push_str(&format!("  {};\n", v + 1));
        }
        for e in self.edges() {
            out.push_str(&format!("  {} -- {};\n", e.u, e.v));
        }
        out.push_str("}\n");
        out
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let mut n = None;
    let mut m = None;
    for tok in rest.split_whitespace() {
        if let Some(x) = tok.strip_prefix("n=") {
            n = Some(x.parse().ok()?);
        } else if let Some(x) = tok.strip_prefix("m=") {
            m = Some(x.parse().ok()?);
        } else {
            return None;
        }
    }
    Some((n?, m?))
}

/// Union of the trees' edge sets; repeated edges collapse to one.
pub fn graph_union(trees: &[SpanningTree]) -> Result<SimpleGraph, GraphError> {
    let first = trees.first().ok_or(GraphError::Empty)?;
    let mut g = SimpleGraph::empty(first.n);
    for t in trees {
        if t.n != first.n {
            return Err(GraphError::MismatchedN(first.n, t.n));
        }
        for &e in &t.edges {
            g.add_edge(e);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: usize, b: usize) -> Edge {
        Edge::new(a, b).unwrap()
    }

    #[test]
    fn edge_canonicalizes() {
        assert_eq!(e(3, 1).endpoints(), (1, 3));
        assert_eq!(e(0, 5).endpoints(), (0, 5));
        assert_eq!(e(3, 1), e(1, 3));
        assert_eq!(Edge::new(2, 2), Err(GraphError::SelfLoop(2)));
    }

    #[test]
    fn tree_validation() {
        let path = SpanningTree::validate([e(0, 1), e(1, 2)], 3).unwrap();
        assert_eq!(path.degree(VertexId(1)), 2);
        assert_eq!(
            SpanningTree::validate([e(0, 1), e(0, 1)], 3),
            Err(GraphError::WrongEdgeCount {
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            SpanningTree::validate([e(0, 1), e(2, 3)], 4),
            Err(GraphError::Disconnected)
        );
        assert_eq!(
            SpanningTree::validate([e(0, 1), e(1, 5)], 3),
            Err(GraphError::VertexOutOfRange { vertex: 5, n: 3 })
        );
    }

    #[test]
    fn cycles_are_wrong_count() {
        assert_eq!(
            SpanningTree::validate([e(0, 1), e(1, 2), e(0, 2), e(2, 3)], 4),
            Err(GraphError::WrongEdgeCount {
                expected: 3,
                found: 4
            })
        );
        // right count, but a triangle leaves vertex 3 isolated
        assert_eq!(
            SpanningTree::validate([e(0, 1), e(1, 2), e(0, 2)], 4),
            Err(GraphError::Disconnected)
        );
    }

    #[test]
    fn union_collapses_duplicates() {
        let star = SpanningTree::validate([e(0, 1), e(0, 2), e(0, 3), e(0, 4)], 5).unwrap();
        let g = graph_union(&[star.clone(), star]).unwrap();
        assert_eq!(g.edge_count(), 4);

        let a = SpanningTree::validate([e(0, 1), e(1, 2), e(2, 3)], 4).unwrap();
        let b = SpanningTree::validate([e(0, 2), e(0, 3), e(1, 3)], 4).unwrap();
        assert_eq!(graph_union(&[a, b]).unwrap(), SimpleGraph::complete(4));

        let path = SpanningTree::validate([e(0, 1), e(1, 2)], 3).unwrap();
        let star1 = SpanningTree::validate([e(1, 0), e(1, 2)], 3).unwrap();
        let other = SpanningTree::validate([e(0, 2), e(1, 2)], 3).unwrap();
        assert_eq!(graph_union(&[path.clone(), star1]).unwrap().edge_count(), 2);
        assert_eq!(graph_union(&[path, other]).unwrap().edge_count(), 3);
    }

    #[test]
    fn union_rejects_mismatch() {
        let a = SpanningTree::validate([e(0, 1)], 2).unwrap();
        let b = SpanningTree::validate([e(0, 1), e(1, 2)], 3).unwrap();
        assert_eq!(graph_union(&[a, b]), Err(GraphError::MismatchedN(2, 3)));
        assert_eq!(graph_union(&[]), Err(GraphError::Empty));
    }

    #[test]
    fn swap_keeps_tree_or_refuses() {
        let mut t = SpanningTree::validate([e(0, 1), e(1, 2), e(2, 3)], 4).unwrap();
        assert_eq!(t.swap_edge(e(0, 1), e(2, 0)), Ok(()));
        assert!(t.contains(e(0, 2)) && !t.contains(e(0, 1)));
        // would leave 3 hanging off a cycle
        assert_eq!(t.swap_edge(e(2, 3), e(0, 1)), Err(GraphError::Disconnected));
        assert!(t.contains(e(2, 3)));
    }

    #[test]
    fn parents_cover_tree() {
        let t = SpanningTree::validate([e(0, 1), e(1, 2), e(1, 3)], 4).unwrap();
        assert_eq!(t.parents(VertexId(0)), vec![0, 0, 1, 1]);
        assert_eq!(SpanningTree::from_parents_unchecked(&[0, 0, 1, 1]), t);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = SimpleGraph::complete(4);
        let text = g.to_edge_list();
        assert!(text.starts_with("# n=4 m=6\n1 2\n1 3\n"));
        assert_eq!(SimpleGraph::parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_errors() {
        assert!(SimpleGraph::parse_edge_list("").is_err());
        assert!(SimpleGraph::parse_edge_list("1 2\n").is_err());
        assert!(SimpleGraph::parse_edge_list("# n=3 m=1\n1 4\n").is_err());
        assert!(SimpleGraph::parse_edge_list("# n=3 m=1\n2 2\n").is_err());
        assert!(SimpleGraph::parse_edge_list("# n=3 m=2\n1 2\n").is_err());
        assert!(SimpleGraph::parse_edge_list("# n=3 m=1\n0 2\n").is_err());
    }

    #[test]
    fn dot_is_undirected() {
        let dot = SimpleGraph::complete(3).to_dot();
        assert!(dot.starts_with("graph {"));
        assert!(dot.contains("1 -- 2;"));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn edge_json_is_one_based() {
        assert_eq!(serde_json::to_string(&e(0, 4)).unwrap(), "[1,5]");
        let back: Edge = serde_json::from_str("[5,1]").unwrap();
        assert_eq!(back, e(0, 4));
        assert!(serde_json::from_str::<Edge>("[0,1]").is_err());
    }
}
