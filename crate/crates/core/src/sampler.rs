//! Uniform spanning-tree samplers for the complete graph `K_n`.
//!
//! Three samplers produce the same (uniform) distribution over the
//! `n^(n-2)` labeled trees:
//!
//! * [`SamplerKind::Prufer`] draws `n - 2` independent uniform labels and
//!   decodes them, `O(n)` per tree.
//! * [`SamplerKind::AldousBroder`] runs a simple random walk on `K_n` and keeps
//!   the first-entrance edge of every vertex.
//! * [`SamplerKind::Wilson`] builds the tree from loop-erased random walks
//!   towards a growing root component.
//!
//! The walk-based samplers exploit the clique structure: the next vertex is
//! uniform over `[n] \ {current}`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SpanningTree;
use crate::prufer::decode_parents;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplerError {
    #[error("need at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("need at least one tree")]
    NoTrees,
    #[error("unknown sampler `{0}` (expected prufer, aldous-broder or wilson)")]
    UnknownKind(String),
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The generator is ChaCha8, whose output is fixed across platforms, seeded
/// from a splitmix64 mix of the two identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    fn mixed(&self) -> u64 {
        splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(GOLDEN_GAMMA)))
    }

    /// An independent child stream, e.g. one per trial or per tree.
    pub fn substream(&self, id: u64) -> RngStream {
        RngStream {
            seed: self.mixed(),
            stream_id: id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.mixed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    #[default]
    Prufer,
    AldousBroder,
    Wilson,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [
        SamplerKind::Prufer,
        SamplerKind::AldousBroder,
        SamplerKind::Wilson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Prufer => "prufer",
            SamplerKind::AldousBroder => "aldous-broder",
            SamplerKind::Wilson => "wilson",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prufer" => Ok(SamplerKind::Prufer),
            "aldous-broder" => Ok(SamplerKind::AldousBroder),
            "wilson" => Ok(SamplerKind::Wilson),
            other => Err(SamplerError::UnknownKind(other.to_string())),
        }
    }
}

/// Uniform vertex of `[n] \ {current}`.
#[inline]
fn step<R: Rng + ?Sized>(n: usize, current: usize, rng: &mut R) -> usize {
    let r = rng.gen_range(0..n - 1);
    if r >= current {
        r + 1
    } else {
        r
    }
}

fn prufer_parents<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let labels: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    decode_parents(&labels, n)
}

fn aldous_broder_parents<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let start = rng.gen_range(0..n);
    let mut parent = vec![usize::MAX; n];
    parent[start] = start;
    let mut visited = 1;
    let mut current = start;
    while visited < n {
        let next = step(n, current, rng);
        if parent[next] == usize::MAX {
            parent[next] = current;
            visited += 1;
        }
        current = next;
    }
    parent
}

fn wilson_parents<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let root = rng.gen_range(0..n);
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[root] = true;
    next[root] = root;
    for start in 0..n {
        // the walk overwrites `next`, which erases loops implicitly
        let mut u = start;
        while !in_tree[u] {
            next[u] = step(n, u, rng);
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    next
}

/// Parent-array form of one uniform tree; `n >= 2` is the caller's job.
pub(crate) fn sample_parents<R: Rng + ?Sized>(n: usize, kind: SamplerKind, rng: &mut R) -> Vec<usize> {
    if n == 2 {
        return vec![1, 1];
    }
    match kind {
        SamplerKind::Prufer => prufer_parents(n, rng),
        SamplerKind::AldousBroder => aldous_broder_parents(n, rng),
        SamplerKind::Wilson => wilson_parents(n, rng),
    }
}

/// Draws one uniform spanning tree of `K_n` from an arbitrary generator.
pub fn sample_tree_with<R: Rng + ?Sized>(
    n: usize,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<SpanningTree, SamplerError> {
    if n < 2 {
        return Err(SamplerError::TooFewVertices(n));
    }
    Ok(SpanningTree::from_parents_unchecked(&sample_parents(n, kind, rng)))
}

pub fn sample_tree(n: usize, kind: SamplerKind, stream: &RngStream) -> Result<SpanningTree, SamplerError> {
    sample_tree_with(n, kind, &mut stream.rng())
}

/// `k` independent trees, tree `i` drawn from substream `i`.
pub fn sample_k_trees(
    n: usize,
    k: usize,
    kind: SamplerKind,
    stream: &RngStream,
) -> Result<Vec<SpanningTree>, SamplerError> {
    if n < 2 {
        return Err(SamplerError::TooFewVertices(n));
    }
    if k == 0 {
        return Err(SamplerError::NoTrees);
    }
    (0..k as u64)
        .map(|i| sample_tree(n, kind, &stream.substream(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    #[test]
    fn two_vertices_single_outcome() {
        for kind in SamplerKind::ALL {
            let t = sample_tree(2, kind, &RngStream::new(5, 0)).unwrap();
            assert_eq!(t.edges().len(), 1);
            assert!(t.contains(Edge::new(0, 1).unwrap()));
        }
    }

    #[test]
    fn rejects_tiny_n() {
        assert_eq!(
            sample_tree(1, SamplerKind::Wilson, &RngStream::new(0, 0)),
            Err(SamplerError::TooFewVertices(1))
        );
        assert_eq!(
            sample_k_trees(5, 0, SamplerKind::Prufer, &RngStream::new(0, 0)),
            Err(SamplerError::NoTrees)
        );
    }

    #[test]
    fn k_trees_structural() {
        for kind in SamplerKind::ALL {
            let trees = sample_k_trees(5, 3, kind, &RngStream::new(11, 0)).unwrap();
            assert_eq!(trees.len(), 3);
            for t in &trees {
                assert_eq!(t.edges().len(), 4);
                SpanningTree::validate(t.edges().iter().copied(), 5).unwrap();
            }
        }
    }

    #[test]
    fn deterministic_per_stream() {
        for kind in SamplerKind::ALL {
            let a = sample_k_trees(30, 4, kind, &RngStream::new(99, 3)).unwrap();
            let b = sample_k_trees(30, 4, kind, &RngStream::new(99, 3)).unwrap();
            assert_eq!(a, b);
            let c = sample_k_trees(30, 4, kind, &RngStream::new(99, 4)).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn substreams_differ() {
        let s = RngStream::new(1, 0);
        assert_ne!(s.substream(0).mixed(), s.substream(1).mixed());
        assert_ne!(RngStream::new(1, 0).mixed(), RngStream::new(0, 1).mixed());
    }

    #[test]
    fn kind_parsing() {
        for kind in SamplerKind::ALL {
            assert_eq!(kind.name().parse::<SamplerKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert!("kruskal".parse::<SamplerKind>().is_err());
    }

    #[test]
    fn walk_samplers_cover_all_vertices() {
        let mut rng = RngStream::new(7, 0).rng();
        for n in 3..40 {
            for kind in [SamplerKind::AldousBroder, SamplerKind::Wilson] {
                let t = sample_tree_with(n, kind, &mut rng).unwrap();
                SpanningTree::validate(t.edges().iter().copied(), n).unwrap();
            }
        }
    }
}
