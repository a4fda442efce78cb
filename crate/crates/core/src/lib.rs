//! Random spanning-tree unions on the complete graph.
//!
//! Joining `k` uniform spanning trees of `K_n` and repairing the repeated
//! edges yields a `k`-edge-connected graph with at most `k(n-1)` edges. This
//! crate samples the trees, performs the repair, certifies the resulting
//! edge connectivity with max-flow, and checks the edge statistics of the
//! unrepaired union against exact closed forms, full enumeration and
//! Monte Carlo simulation.

pub mod cli;
pub mod connectivity;
pub mod disjoint;
pub mod graph;
pub mod prufer;
pub mod sampler;
pub mod stats;

pub use connectivity::{
    brute_force_connectivity, count_disjoint_paths, edge_connectivity, ConnectivityCertificate,
    CutMethod,
};
pub use disjoint::{disjointify, generate_k_connected, get_replacement_edge, split_components, RepairLog};
pub use graph::{graph_union, Edge, GraphError, SimpleGraph, SpanningTree, VertexId};
pub use prufer::{count_trees_with_degree, prufer_decode, prufer_encode, PruferSeq};
pub use sampler::{sample_k_trees, sample_tree, RngStream, SamplerKind};
pub use stats::{MultiSplicer, StatReport, Statistic};
