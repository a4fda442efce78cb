//! Prüfer codes: the bijection between labeled trees on `[n]` and sequences
//! of length `n - 2` over `[n]`, plus the degree-count formula that falls out
//! of it (a vertex's degree is one more than its multiplicity in the code).

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::graph::{SpanningTree, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PruferError {
    #[error("label {label} out of range for n = {n}")]
    LabelOutOfRange { label: usize, n: usize },
    #[error("sequence length {len} does not match n - 2 for n = {n}")]
    WrongLength { len: usize, n: usize },
    #[error("need at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("degree {d} out of range 1..={max}")]
    DegreeOutOfRange { d: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PruferSeq(pub Vec<usize>);

impl PruferSeq {
    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every sequence of length `n - 2` in lexicographic order
    /// (`n^(n-2)` of them).
    pub fn enumerate(n: usize) -> impl Iterator<Item = PruferSeq> {
        let len = n.saturating_sub(2);
        let mut current = Some(vec![0usize; len]);
        std::iter::from_fn(move || {
            let out = current.take()?;
            let mut next = out.clone();
            let mut i = len;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                next[i] += 1;
                if next[i] < n {
                    current = Some(next);
                    break;
                }
                next[i] = 0;
            }
            Some(PruferSeq(out))
        })
    }
}

/// Decodes a Prüfer sequence in linear time using the moving leaf pointer.
pub fn prufer_decode(seq: &PruferSeq, n: usize) -> Result<SpanningTree, PruferError> {
    if n < 2 {
        return Err(PruferError::TooFewVertices(n));
    }
    if seq.len() != n - 2 {
        return Err(PruferError::WrongLength { len: seq.len(), n });
    }
    if let Some(&label) = seq.0.iter().find(|&&x| x >= n) {
        return Err(PruferError::LabelOutOfRange { label, n });
    }
    Ok(SpanningTree::from_parents_unchecked(&decode_parents(&seq.0, n)))
}

/// Parent array of the decoded tree rooted at `n - 1`. Labels must be `< n`.
pub(crate) fn decode_parents(labels: &[usize], n: usize) -> Vec<usize> {
    let mut degree = vec![1u32; n];
    for &x in labels {
        degree[x] += 1;
    }
    let mut parent = vec![0usize; n];
    parent[n - 1] = n - 1;
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &x in labels {
        parent[leaf] = x;
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    parent[leaf] = n - 1;
    parent
}

/// Encodes a tree, always stripping the smallest current leaf.
pub fn prufer_encode(tree: &SpanningTree) -> PruferSeq {
    let n = tree.n();
    if n <= 2 {
        return PruferSeq(Vec::new());
    }
    let parent = tree.parents(VertexId(n - 1));
    let mut degree: Vec<usize> = (0..n).map(|v| tree.degree(VertexId(v))).collect();
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    let mut code = Vec::with_capacity(n - 2);
    for _ in 0..n - 2 {
        let next = parent[leaf];
        code.push(next);
        degree[next] -= 1;
        if degree[next] == 1 && next < ptr {
            leaf = next;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    PruferSeq(code)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of labeled spanning trees of `K_n` in which a fixed vertex has
/// degree `d`: `C(n-2, d-1) * (n-1)^(n-1-d)`.
pub fn count_trees_with_degree(n: usize, d: usize) -> Result<BigUint, PruferError> {
    if n < 2 {
        return Err(PruferError::TooFewVertices(n));
    }
    if d == 0 || d > n - 1 {
        return Err(PruferError::DegreeOutOfRange { d, max: n - 1 });
    }
    let power = BigUint::from(n - 1).pow((n - 1 - d) as u32);
    Ok(binomial(n - 2, d - 1) * power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn e(a: usize, b: usize) -> Edge {
        Edge::new(a, b).unwrap()
    }

    #[test]
    fn decode_small_cases() {
        let t = prufer_decode(&PruferSeq(vec![]), 2).unwrap();
        assert_eq!(t.edges().iter().copied().collect::<Vec<_>>(), vec![e(0, 1)]);

        let star = prufer_decode(&PruferSeq(vec![3, 3]), 4).unwrap();
        assert_eq!(
            star.edges().iter().copied().collect::<Vec<_>>(),
            vec![e(0, 3), e(1, 3), e(2, 3)]
        );
        assert_eq!(star.degree(VertexId(3)), 3);
    }

    #[test]
    fn encode_small_cases() {
        let single = SpanningTree::validate([e(0, 1)], 2).unwrap();
        assert!(prufer_encode(&single).is_empty());
        let star = SpanningTree::validate([e(0, 3), e(1, 3), e(2, 3)], 4).unwrap();
        assert_eq!(prufer_encode(&star), PruferSeq(vec![3, 3]));
        let path = SpanningTree::validate([e(0, 1), e(1, 2), e(2, 3)], 4).unwrap();
        assert_eq!(prufer_encode(&path), PruferSeq(vec![1, 2]));
    }

    #[test]
    fn decode_errors() {
        assert_eq!(
            prufer_decode(&PruferSeq(vec![4, 0]), 4),
            Err(PruferError::LabelOutOfRange { label: 4, n: 4 })
        );
        assert_eq!(
            prufer_decode(&PruferSeq(vec![0]), 4),
            Err(PruferError::WrongLength { len: 1, n: 4 })
        );
        assert_eq!(
            prufer_decode(&PruferSeq(vec![]), 1),
            Err(PruferError::TooFewVertices(1))
        );
    }

    #[test]
    fn round_trip_exhaustive_n4() {
        let all: Vec<_> = PruferSeq::enumerate(4).collect();
        assert_eq!(all.len(), 16);
        for s in all {
            let t = prufer_decode(&s, 4).unwrap();
            assert_eq!(prufer_encode(&t), s);
        }
    }

    #[test]
    fn enumerate_sizes() {
        assert_eq!(PruferSeq::enumerate(2).count(), 1);
        assert_eq!(PruferSeq::enumerate(3).count(), 3);
        assert_eq!(PruferSeq::enumerate(5).count(), 125);
    }

    #[test]
    fn degree_counts() {
        assert_eq!(count_trees_with_degree(4, 1).unwrap(), BigUint::from(9u32));
        assert_eq!(count_trees_with_degree(4, 3).unwrap(), BigUint::from(1u32));
        let total: BigUint = (1..=3).map(|d| count_trees_with_degree(4, d).unwrap()).sum();
        assert_eq!(total, BigUint::from(16u32));
        assert!(count_trees_with_degree(4, 0).is_err());
        assert!(count_trees_with_degree(4, 4).is_err());
    }

    #[test]
    fn degree_counts_sum_to_cayley_large() {
        // exercises the big-integer path; 30^28 overflows u64
        let n = 30;
        let total: BigUint = (1..n).map(|d| count_trees_with_degree(n, d).unwrap()).sum();
        assert_eq!(total, BigUint::from(n).pow((n - 2) as u32));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 5), BigUint::default());
        assert_eq!(binomial(0, 0), BigUint::one());
    }
}
