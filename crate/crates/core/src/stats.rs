//! Edge statistics of a union of `k` independent uniform spanning trees of
//! `K_n`.
//!
//! Three independent routes to every quantity live here:
//!
//! * closed forms evaluated in exact rational arithmetic (`exact_*`),
//! * full enumeration of all `k`-tuples of trees for small `n`
//!   ([`brute_force_oracle`]),
//! * Monte Carlo estimates with standard errors ([`McRun`]).
//!
//! Notation follows the usual multi-splicer vocabulary: `S_k` is the number
//! of distinct edges in the union, `M` the number of surplus occurrences,
//! `R_e` the surplus occurrences of a single edge and `C_L` the number of
//! edges common to every tree indexed by `L`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, GraphError, SpanningTree};
use crate::prufer::{prufer_decode, PruferSeq};
use crate::sampler::{sample_k_trees, RngStream, SamplerError, SamplerKind};

/// Monte Carlo rows pass when the estimate is within this many standard
/// errors of the exact value.
pub const PASS_SIGMAS: f64 = 5.0;

/// Upper limit on the number of tree tuples the enumeration oracle visits
/// (`125^3`, i.e. `n = 5, k = 3`).
pub const ORACLE_MAX_TUPLES: u64 = 1_953_125;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{stat} is undefined for n = {n}")]
    Undefined { stat: String, n: usize },
    #[error("enumeration of {tuples} tree tuples exceeds the oracle limit of {ORACLE_MAX_TUPLES}")]
    OracleTooLarge { tuples: u128 },
    #[error("common-edge query must be a non-empty subset of the {k} tree indices")]
    BadQuery { k: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

fn check_nk(n: usize, k: usize) -> Result<(), StatsError> {
    if n < 2 {
        return Err(StatsError::InvalidParams(format!("n = {n} < 2")));
    }
    if k < 1 {
        return Err(StatsError::InvalidParams("k = 0".into()));
    }
    Ok(())
}

/// The `k` trees together with the multiplicity of every edge in their union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSplicer {
    n: usize,
    trees: Vec<SpanningTree>,
    multiplicity: BTreeMap<Edge, u32>,
}

impl MultiSplicer {
    pub fn new(trees: Vec<SpanningTree>) -> Result<Self, StatsError> {
        let n = trees.first().ok_or(GraphError::Empty)?.n();
        let mut multiplicity = BTreeMap::new();
        for t in &trees {
            if t.n() != n {
                return Err(GraphError::MismatchedN(n, t.n()).into());
            }
            for &e in t.edges() {
                *multiplicity.entry(e).or_insert(0) += 1;
            }
        }
        Ok(MultiSplicer {
            n,
            trees,
            multiplicity,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[SpanningTree] {
        &self.trees
    }

    pub fn multiplicity(&self, e: Edge) -> u32 {
        self.multiplicity.get(&e).copied().unwrap_or(0)
    }

    pub fn multiplicities(&self) -> &BTreeMap<Edge, u32> {
        &self.multiplicity
    }

    /// `R_e`: occurrences of `e` beyond the first. `sum_i X_e^{T_i}` minus
    /// the max of the indicators, which is just `[multiplicity >= 1]`.
    pub fn repetitions(&self, e: Edge) -> u32 {
        self.multiplicity(e).saturating_sub(1)
    }

    /// `S_k`, the number of distinct edges.
    pub fn distinct_edges(&self) -> usize {
        self.multiplicity.len()
    }

    /// `M`, the total number of repeated occurrences.
    pub fn surplus(&self) -> usize {
        self.multiplicity.values().map(|&c| (c - 1) as usize).sum()
    }

    /// `C_L` for the trees selected by `query`.
    pub fn common_edges(&self, query: &CommonEdgeQuery) -> usize {
        let mut idx = query.indices.iter();
        let first = &self.trees[*idx.next().expect("query is non-empty")];
        let rest: Vec<&SpanningTree> = idx.map(|&i| &self.trees[i]).collect();
        first
            .edges()
            .iter()
            .filter(|&&e| rest.iter().all(|t| t.contains(e)))
            .count()
    }

    /// Edges of tree `i` that already occur in one of the trees before it.
    pub fn repeats_in_tree(&self, i: usize) -> Vec<Edge> {
        let earlier = &self.trees[..i];
        self.trees[i]
            .edges()
            .iter()
            .copied()
            .filter(|&e| earlier.iter().any(|t| t.contains(e)))
            .collect()
    }
}

/// Set `L` of 0-based tree indices for a common-edge count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonEdgeQuery {
    indices: BTreeSet<usize>,
}

impl CommonEdgeQuery {
    pub fn new(indices: impl IntoIterator<Item = usize>, k: usize) -> Result<Self, StatsError> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if indices.is_empty() || indices.iter().any(|&i| i >= k) {
            return Err(StatsError::BadQuery { k });
        }
        Ok(CommonEdgeQuery { indices })
    }

    /// The first `ell` trees.
    pub fn prefix(ell: usize, k: usize) -> Result<Self, StatsError> {
        CommonEdgeQuery::new(0..ell, k)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

fn pairs(n: usize) -> BigRational {
    int((n * (n - 1) / 2) as i64)
}

/// `1 - 2/n`, the probability that a fixed edge misses a uniform tree.
fn miss(n: usize) -> BigRational {
    ratio(n as i64 - 2, n as i64)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `Pr(e in T) = 2/n`.
pub fn exact_edge_probability(n: usize) -> Result<BigRational, StatsError> {
    check_nk(n, 1)?;
    Ok(ratio(2, n as i64))
}

/// `Pr(e, w in T)`: `3/n^2` for adjacent edges, `4/n^2` otherwise.
pub fn exact_pair_probability(n: usize, adjacent: bool) -> Result<BigRational, StatsError> {
    check_pair(n, adjacent, "pair probability")?;
    let num = if adjacent { 3 } else { 4 };
    Ok(ratio(num, (n * n) as i64))
}

fn check_pair(n: usize, adjacent: bool, stat: &str) -> Result<(), StatsError> {
    let needed = if adjacent { 3 } else { 4 };
    if n < needed {
        let kind = if adjacent { "adjacent" } else { "non-adjacent" };
        return Err(StatsError::Undefined {
            stat: format!("{kind} {stat}"),
            n,
        });
    }
    Ok(())
}

/// `E[C_L] = C(n,2) (2/n)^|L|`.
pub fn exact_expected_common(n: usize, ell: usize) -> Result<BigRational, StatsError> {
    check_nk(n, ell)?;
    Ok(pairs(n) * pow(&ratio(2, n as i64), ell))
}

/// `E[S_k] = C(n,2) (1 - (1 - 2/n)^k)`.
pub fn exact_expected_sk(n: usize, k: usize) -> Result<BigRational, StatsError> {
    check_nk(n, k)?;
    Ok(pairs(n) * (BigRational::one() - pow(&miss(n), k)))
}

/// `E[R_e] = 2k/n - 1 + (1 - 2/n)^k`.
pub fn exact_expected_re(n: usize, k: usize) -> Result<BigRational, StatsError> {
    check_nk(n, k)?;
    Ok(ratio(2 * k as i64, n as i64) - BigRational::one() + pow(&miss(n), k))
}

/// `E[M] = C(n,2) E[R_e]`.
pub fn exact_expected_m(n: usize, k: usize) -> Result<BigRational, StatsError> {
    Ok(pairs(n) * exact_expected_re(n, k)?)
}

/// `Var[R_e] = (2k/n)(1 - 2/n) + (1 - 2/n)^k (1 - 4k/n) - (1 - 2/n)^(2k)`.
pub fn exact_var_re(n: usize, k: usize) -> Result<BigRational, StatsError> {
    check_nk(n, k)?;
    let q = miss(n);
    let k_i = k as i64;
    let n_i = n as i64;
    Ok(ratio(2 * k_i, n_i) * &q + pow(&q, k) * (BigRational::one() - ratio(4 * k_i, n_i))
        - pow(&q, 2 * k))
}

/// `Cov(R_e, R_e')`: zero for disjoint edges; for edges sharing a vertex
/// `-k/n^2 + (2k/n^2)(1 - 2/n)^(k-1) + (1 - 4/n + 3/n^2)^k - (1 - 2/n)^(2k)`.
pub fn exact_cov_re(n: usize, k: usize, adjacent: bool) -> Result<BigRational, StatsError> {
    check_nk(n, k)?;
    check_pair(n, adjacent, "covariance")?;
    if !adjacent {
        return Ok(BigRational::zero());
    }
    let q = miss(n);
    let n2 = (n * n) as i64;
    let k_i = k as i64;
    let both_miss = ratio(((n - 1) * (n - 3)) as i64, n2);
    Ok(-ratio(k_i, n2) + ratio(2 * k_i, n2) * pow(&q, k - 1) + pow(&both_miss, k)
        - pow(&q, 2 * k))
}

/// `Var[M] = C(n,2) Var[R_e] + n(n-1)(n-2) Cov_adjacent`; the second
/// coefficient counts ordered pairs of distinct edges sharing a vertex.
pub fn exact_var_m(n: usize, k: usize) -> Result<BigRational, StatsError> {
    let own = pairs(n) * exact_var_re(n, k)?;
    if n < 3 {
        return Ok(own);
    }
    let ordered_adjacent = int((n * (n - 1) * (n - 2)) as i64);
    Ok(own + ordered_adjacent * exact_cov_re(n, k, true)?)
}

/// `E[S_k]` assembled from the common-edge expectations by inclusion and
/// exclusion: `sum_a (-1)^(a+1) C(k,a) E[C_[a]]`.
pub fn inclusion_exclusion_sk(n: usize, k: usize) -> Result<BigRational, StatsError> {
    check_nk(n, k)?;
    let mut acc = BigRational::zero();
    for a in 1..=k {
        let c = BigRational::from_integer(BigInt::from(crate::prufer::binomial(k, a)));
        let term = c * exact_expected_common(n, a)?;
        if a % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Leading-order expansions, reported next to the exact values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    /// `k(n - k)`.
    pub expected_sk: f64,
    /// `k(k-1) - k(k-1)(2k-1)/(3n)`, the expansion of the exact `E[M]`.
    pub expected_m: f64,
    /// The same expansion with a `+` on the `1/n` term.
    pub expected_m_plus: f64,
    /// `k(k-1) - (20k^3 - 33k^2 + 13k)/(6n)`.
    pub var_m: f64,
}

pub fn asymptotics(n: usize, k: usize) -> Asymptotics {
    let (n, k) = (n as f64, k as f64);
    let lead = k * (k - 1.0);
    let first_order = k * (k - 1.0) * (2.0 * k - 1.0) / (3.0 * n);
    Asymptotics {
        expected_sk: k * (n - k),
        expected_m: lead - first_order,
        expected_m_plus: lead + first_order,
        var_m: lead - (20.0 * k.powi(3) - 33.0 * k * k + 13.0 * k) / (6.0 * n),
    }
}

/// Chebyshev-type tail bound `1 / (s^2 k (k-1))` for `|M - E[M]| >= s E[M]`.
pub fn concentration_bound(k: usize, s: f64) -> Result<f64, StatsError> {
    if k < 2 {
        return Err(StatsError::InvalidParams(format!(
            "concentration bound needs k >= 2, got {k}"
        )));
    }
    if !(s > 0.0) {
        return Err(StatsError::InvalidParams(format!("s must be positive, got {s}")));
    }
    Ok(1.0 / (s * s * (k * (k - 1)) as f64))
}

// ---------------------------------------------------------------------------
// Statistic selector
// ---------------------------------------------------------------------------

/// A quantity with a closed form, an enumeration value and an estimator.
///
/// Single-edge quantities refer to `e = {1,2}`; its adjacent partner is
/// `{2,3}` and its disjoint partner `{3,4}` (1-based). Pair probabilities
/// are per tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    EdgeProbability,
    PairProbability { adjacent: bool },
    ExpectedCommon { ell: usize },
    ExpectedSk,
    ExpectedM,
    ExpectedRe,
    VarRe,
    CovRe { adjacent: bool },
    VarM,
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Statistic::EdgeProbability => "Pr(e in T)".into(),
            Statistic::PairProbability { adjacent: true } => "Pr(e,w in T) adjacent".into(),
            Statistic::PairProbability { adjacent: false } => "Pr(e,w in T) disjoint".into(),
            Statistic::ExpectedCommon { ell } => format!("E[C_L] |L|={ell}"),
            Statistic::ExpectedSk => "E[S_k]".into(),
            Statistic::ExpectedM => "E[M]".into(),
            Statistic::ExpectedRe => "E[R_e]".into(),
            Statistic::VarRe => "Var[R_e]".into(),
            Statistic::CovRe { adjacent: true } => "Cov(R_e,R_e') adjacent".into(),
            Statistic::CovRe { adjacent: false } => "Cov(R_e,R_e') disjoint".into(),
            Statistic::VarM => "Var[M]".into(),
        }
    }

    pub fn exact(&self, n: usize, k: usize) -> Result<BigRational, StatsError> {
        check_nk(n, k)?;
        match *self {
            Statistic::EdgeProbability => exact_edge_probability(n),
            Statistic::PairProbability { adjacent } => exact_pair_probability(n, adjacent),
            Statistic::ExpectedCommon { ell } => {
                if ell == 0 || ell > k {
                    return Err(StatsError::BadQuery { k });
                }
                exact_expected_common(n, ell)
            }
            Statistic::ExpectedSk => exact_expected_sk(n, k),
            Statistic::ExpectedM => exact_expected_m(n, k),
            Statistic::ExpectedRe => exact_expected_re(n, k),
            Statistic::VarRe => exact_var_re(n, k),
            Statistic::CovRe { adjacent } => exact_cov_re(n, k, adjacent),
            Statistic::VarM => exact_var_m(n, k),
        }
    }
}

// ---------------------------------------------------------------------------
// Enumeration oracle
// ---------------------------------------------------------------------------

/// Exact moments over all `(n^(n-2))^k` ordered tuples of trees.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedMoments {
    pub n: usize,
    pub k: usize,
    pub tuples: u64,
    pub edge_probability: BigRational,
    pub pair_adjacent: Option<BigRational>,
    pub pair_disjoint: Option<BigRational>,
    /// `E[C_[ell]]` for `ell = 1..=k`.
    pub expected_common: Vec<BigRational>,
    pub expected_sk: BigRational,
    pub expected_m: BigRational,
    pub var_m: BigRational,
    pub expected_re: BigRational,
    pub var_re: BigRational,
    pub cov_adjacent: Option<BigRational>,
    pub cov_disjoint: Option<BigRational>,
}

#[derive(Default)]
struct Moment {
    sum: i128,
    sum_sq: i128,
}

impl Moment {
    fn add(&mut self, x: i64) {
        self.sum += x as i128;
        self.sum_sq += (x as i128) * (x as i128);
    }

    fn mean(&self, total: u64) -> BigRational {
        BigRational::new(BigInt::from(self.sum), BigInt::from(total))
    }

    fn var(&self, total: u64) -> BigRational {
        let m = self.mean(total);
        BigRational::new(BigInt::from(self.sum_sq), BigInt::from(total)) - &m * &m
    }
}

fn edge_index(n: usize, u: usize, v: usize) -> usize {
    // row-major index into the strict upper triangle
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

/// Enumerates every `k`-tuple of labeled trees on `[n]`.
pub fn enumerate_moments(n: usize, k: usize) -> Result<EnumeratedMoments, StatsError> {
    check_nk(n, k)?;
    let per_tree = (n as u128).pow((n - 2) as u32);
    let tuples = per_tree.checked_pow(k as u32).unwrap_or(u128::MAX);
    if tuples > ORACLE_MAX_TUPLES as u128 {
        return Err(StatsError::OracleTooLarge { tuples });
    }
    let tuples = tuples as u64;
    let m_edges = n * (n - 1) / 2;
    let masks: Vec<u64> = PruferSeq::enumerate(n)
        .map(|s| {
            let t = prufer_decode(&s, n).expect("enumerated sequences are valid");
            t.edges()
                .iter()
                .map(|e| {
                    let (u, v) = e.endpoints();
                    1u64 << edge_index(n, u, v)
                })
                .fold(0, |a, b| a | b)
        })
        .collect();
    let e0 = edge_index(n, 0, 1);
    let e_adj = (n >= 3).then(|| edge_index(n, 1, 2));
    let e_dis = (n >= 4).then(|| edge_index(n, 2, 3));

    let mut hit = 0i128;
    let mut hit_adj = 0i128;
    let mut hit_dis = 0i128;
    let mut common: Vec<Moment> = (0..k).map(|_| Moment::default()).collect();
    let mut s_k = Moment::default();
    let mut surplus = Moment::default();
    let mut re = Moment::default();
    let mut re_adj = Moment::default();
    let mut re_dis = Moment::default();
    let (mut cross_adj, mut cross_dis) = (0i128, 0i128);

    let bit = |mask: u64, i: usize| (mask >> i) & 1 == 1;
    let mut digits = vec![0usize; k];
    let mut counts = vec![0i64; m_edges];
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut acc = u64::MAX;
        for (ell, &d) in digits.iter().enumerate() {
            let mask = masks[d];
            let mut rest = mask;
            while rest != 0 {
                counts[rest.trailing_zeros() as usize] += 1;
                rest &= rest - 1;
            }
            acc &= mask;
            common[ell].add(acc.count_ones() as i64);
        }
        let first = masks[digits[0]];
        hit += bit(first, e0) as i128;
        if let Some(a) = e_adj {
            hit_adj += (bit(first, e0) && bit(first, a)) as i128;
        }
        if let Some(d) = e_dis {
            hit_dis += (bit(first, e0) && bit(first, d)) as i128;
        }
        s_k.add(counts.iter().filter(|&&c| c > 0).count() as i64);
        surplus.add(counts.iter().map(|&c| (c - 1).max(0)).sum());
        let r = |i: usize| (counts[i] - 1).max(0);
        re.add(r(e0));
        if let Some(a) = e_adj {
            re_adj.add(r(a));
            cross_adj += (r(e0) * r(a)) as i128;
        }
        if let Some(d) = e_dis {
            re_dis.add(r(d));
            cross_dis += (r(e0) * r(d)) as i128;
        }

        let mut pos = k;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < masks.len() {
                break;
            }
            digits[pos] = 0;
        }
        if digits.iter().all(|&d| d == 0) {
            break;
        }
    }

    let frac = |x: i128, den: u64| BigRational::new(BigInt::from(x), BigInt::from(den));
    let cov = |cross: i128, other: &Moment| frac(cross, tuples) - re.mean(tuples) * other.mean(tuples);
    Ok(EnumeratedMoments {
        n,
        k,
        tuples,
        edge_probability: frac(hit, tuples),
        pair_adjacent: e_adj.map(|_| frac(hit_adj, tuples)),
        pair_disjoint: e_dis.map(|_| frac(hit_dis, tuples)),
        expected_common: common.iter().map(|c| c.mean(tuples)).collect(),
        expected_sk: s_k.mean(tuples),
        expected_m: surplus.mean(tuples),
        var_m: surplus.var(tuples),
        expected_re: re.mean(tuples),
        var_re: re.var(tuples),
        cov_adjacent: e_adj.map(|_| cov(cross_adj, &re_adj)),
        cov_disjoint: e_dis.map(|_| cov(cross_dis, &re_dis)),
    })
}

impl EnumeratedMoments {
    pub fn get(&self, stat: Statistic) -> Result<BigRational, StatsError> {
        let undefined = || StatsError::Undefined {
            stat: stat.name(),
            n: self.n,
        };
        Ok(match stat {
            Statistic::EdgeProbability => self.edge_probability.clone(),
            Statistic::PairProbability { adjacent: true } => {
                self.pair_adjacent.clone().ok_or_else(undefined)?
            }
            Statistic::PairProbability { adjacent: false } => {
                self.pair_disjoint.clone().ok_or_else(undefined)?
            }
            Statistic::ExpectedCommon { ell } => {
                if ell == 0 || ell > self.k {
                    return Err(StatsError::BadQuery { k: self.k });
                }
                self.expected_common[ell - 1].clone()
            }
            Statistic::ExpectedSk => self.expected_sk.clone(),
            Statistic::ExpectedM => self.expected_m.clone(),
            Statistic::ExpectedRe => self.expected_re.clone(),
            Statistic::VarRe => self.var_re.clone(),
            Statistic::CovRe { adjacent: true } => {
                self.cov_adjacent.clone().ok_or_else(undefined)?
            }
            Statistic::CovRe { adjacent: false } => {
                self.cov_disjoint.clone().ok_or_else(undefined)?
            }
            Statistic::VarM => self.var_m.clone(),
        })
    }
}

/// Exact value of `stat` by enumerating every tuple of trees.
pub fn brute_force_oracle(n: usize, k: usize, stat: Statistic) -> Result<BigRational, StatsError> {
    enumerate_moments(n, k)?.get(stat)
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Per-trial measurements of one sampled multi-splicer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialObservation {
    pub s_k: usize,
    pub m: usize,
    /// `C_[ell]` for `ell = 1..=k`.
    pub common: Vec<usize>,
    /// Fractions of the `k` trees containing `e`, `e` with its adjacent
    /// partner, and `e` with its disjoint partner.
    pub edge_hits: f64,
    pub pair_adjacent_hits: f64,
    pub pair_disjoint_hits: f64,
    pub re: f64,
    pub re_adjacent: f64,
    pub re_disjoint: f64,
}

impl TrialObservation {
    pub fn observe(ms: &MultiSplicer) -> Self {
        let n = ms.n();
        let k = ms.k();
        let e0 = Edge::new(0, 1).unwrap();
        let e_adj = (n >= 3).then(|| Edge::new(1, 2).unwrap());
        let e_dis = (n >= 4).then(|| Edge::new(2, 3).unwrap());
        let frac = |pred: &dyn Fn(&SpanningTree) -> bool| {
            ms.trees().iter().filter(|t| pred(t)).count() as f64 / k as f64
        };
        let pair = |other: Option<Edge>| {
            other.map_or(0.0, |w| frac(&|t: &SpanningTree| t.contains(e0) && t.contains(w)))
        };
        let common = (1..=k)
            .map(|ell| ms.common_edges(&CommonEdgeQuery::prefix(ell, k).unwrap()))
            .collect();
        let re_of = |e: Option<Edge>| e.map_or(0.0, |e| ms.repetitions(e) as f64);
        TrialObservation {
            s_k: ms.distinct_edges(),
            m: ms.surplus(),
            common,
            edge_hits: frac(&|t: &SpanningTree| t.contains(e0)),
            pair_adjacent_hits: pair(e_adj),
            pair_disjoint_hits: pair(e_dis),
            re: ms.repetitions(e0) as f64,
            re_adjacent: re_of(e_adj),
            re_disjoint: re_of(e_dis),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

/// Unbiased sample variance; its standard error is `sqrt((m4 - s^4) / N)`
/// with `m4` the sample fourth central moment.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Estimate {
            value: 0.0,
            std_error: 0.0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2 = m2 * n / (n - 1.0);
    Estimate {
        value: s2,
        std_error: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Sample covariance; standard error from the spread of the centered products.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Estimate {
            value: 0.0,
            std_error: 0.0,
        };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let est = mean_estimate(&prods);
    Estimate {
        value: est.value * n / (n - 1.0),
        std_error: est.std_error,
    }
}

/// One exact-versus-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub quantity: String,
    pub n: usize,
    pub k: usize,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub pass: bool,
}

impl StatReport {
    pub fn new(quantity: String, n: usize, k: usize, exact: f64, est: Estimate, trials: usize) -> Self {
        let pass = within_sigmas(est.value, exact, est.std_error);
        StatReport {
            quantity,
            n,
            k,
            exact,
            estimate: est.value,
            std_error: est.std_error,
            trials,
            pass,
        }
    }
}

/// `|estimate - exact| <= 5 SE`, with a rounding allowance when SE is zero.
pub fn within_sigmas(estimate: f64, exact: f64, std_error: f64) -> bool {
    (estimate - exact).abs() <= PASS_SIGMAS * std_error + 1e-9 * exact.abs().max(1.0)
}

/// A batch of simulated multi-splicers.
#[derive(Debug, Clone)]
pub struct McRun {
    pub n: usize,
    pub k: usize,
    pub observations: Vec<TrialObservation>,
}

impl McRun {
    /// Runs `trials` independent trials in parallel; trial `t` uses
    /// substream `t` of `stream`, so the result does not depend on the
    /// thread count.
    pub fn simulate(
        n: usize,
        k: usize,
        trials: usize,
        kind: SamplerKind,
        stream: &RngStream,
    ) -> Result<McRun, StatsError> {
        check_nk(n, k)?;
        if trials == 0 {
            return Err(StatsError::InvalidParams("trials must be >= 1".into()));
        }
        let observations = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let trees = sample_k_trees(n, k, kind, &stream.substream(t))?;
                Ok(TrialObservation::observe(&MultiSplicer::new(trees)?))
            })
            .collect::<Result<Vec<_>, StatsError>>()?;
        Ok(McRun { n, k, observations })
    }

    pub fn trials(&self) -> usize {
        self.observations.len()
    }

    fn column(&self, f: impl Fn(&TrialObservation) -> f64) -> Vec<f64> {
        self.observations.iter().map(f).collect()
    }

    pub fn estimate(&self, stat: Statistic) -> Result<Estimate, StatsError> {
        let undefined = |min: usize| -> Result<(), StatsError> {
            if self.n < min {
                Err(StatsError::Undefined {
                    stat: stat.name(),
                    n: self.n,
                })
            } else {
                Ok(())
            }
        };
        Ok(match stat {
            Statistic::EdgeProbability => mean_estimate(&self.column(|o| o.edge_hits)),
            Statistic::PairProbability { adjacent } => {
                undefined(if adjacent { 3 } else { 4 })?;
                mean_estimate(&self.column(|o| {
                    if adjacent {
                        o.pair_adjacent_hits
                    } else {
                        o.pair_disjoint_hits
                    }
                }))
            }
            Statistic::ExpectedCommon { ell } => {
                if ell == 0 || ell > self.k {
                    return Err(StatsError::BadQuery { k: self.k });
                }
                mean_estimate(&self.column(|o| o.common[ell - 1] as f64))
            }
            Statistic::ExpectedSk => mean_estimate(&self.column(|o| o.s_k as f64)),
            Statistic::ExpectedM => mean_estimate(&self.column(|o| o.m as f64)),
            Statistic::ExpectedRe => mean_estimate(&self.column(|o| o.re)),
            Statistic::VarRe => variance_estimate(&self.column(|o| o.re)),
            Statistic::CovRe { adjacent } => {
                undefined(if adjacent { 3 } else { 4 })?;
                let other = self.column(|o| if adjacent { o.re_adjacent } else { o.re_disjoint });
                covariance_estimate(&self.column(|o| o.re), &other)
            }
            Statistic::VarM => variance_estimate(&self.column(|o| o.m as f64)),
        })
    }

    pub fn report(&self, stat: Statistic) -> Result<StatReport, StatsError> {
        let exact = to_f64(&stat.exact(self.n, self.k)?);
        let est = self.estimate(stat)?;
        Ok(StatReport::new(stat.name(), self.n, self.k, exact, est, self.trials()))
    }

    /// Empirical `Pr(|M - E[M]| >= s E[M])` against the tail bound.
    pub fn concentration(&self, s: f64) -> Result<ConcentrationReport, StatsError> {
        let bound = concentration_bound(self.k, s)?;
        let mean = to_f64(&exact_expected_m(self.n, self.k)?);
        let tail = self.column(|o| ((o.m as f64 - mean).abs() >= s * mean) as u8 as f64);
        let est = mean_estimate(&tail);
        Ok(ConcentrationReport {
            n: self.n,
            k: self.k,
            s,
            empirical: est.value,
            std_error: est.std_error,
            bound,
            trials: self.trials(),
            pass: est.value <= bound + PASS_SIGMAS * est.std_error,
        })
    }
}

/// Monte Carlo estimate of one statistic with the default sampler.
pub fn mc_estimate(
    n: usize,
    k: usize,
    trials: usize,
    stat: Statistic,
    stream: &RngStream,
) -> Result<StatReport, StatsError> {
    McRun::simulate(n, k, trials, SamplerKind::Prufer, stream)?.report(stat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub k: usize,
    pub s: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    pub trials: usize,
    pub pass: bool,
}

impl ConcentrationReport {
    pub fn to_stat_report(&self) -> StatReport {
        StatReport {
            quantity: format!("Pr(|M-E[M]| >= {}E[M]) <= bound", self.s),
            n: self.n,
            k: self.k,
            exact: self.bound,
            estimate: self.empirical,
            std_error: self.std_error,
            trials: self.trials,
            pass: self.pass,
        }
    }
}

pub fn concentration_check(
    n: usize,
    k: usize,
    s: f64,
    trials: usize,
    stream: &RngStream,
) -> Result<ConcentrationReport, StatsError> {
    concentration_bound(k, s)?;
    McRun::simulate(n, k, trials, SamplerKind::Prufer, stream)?.concentration(s)
}

/// Aligned plain-text rendering of a set of reports.
pub fn render_table(rows: &[StatReport]) -> String {
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>4}  {:>3}  {:>14}  {:>14}  {:>12}  {:>8}  {}",
        "quantity", "n", "k", "exact", "estimate", "std_error", "trials", "pass"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>3}  {:>14.6}  {:>14.6}  {:>12.6}  {:>8}  {}",
            r.quantity,
            r.n,
            r.k,
            r.exact,
            r.estimate,
            r.std_error,
            r.trials,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}

/// `|a - b|` as a float, for callers comparing rationals loosely.
pub fn abs_diff(a: &BigRational, b: &BigRational) -> f64 {
    to_f64(&(a - b).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn r(num: i64, den: i64) -> BigRational {
        ratio(num, den)
    }

    fn tree(edges: &[(usize, usize)], n: usize) -> SpanningTree {
        SpanningTree::validate(edges.iter().map(|&(a, b)| Edge::new(a, b).unwrap()), n).unwrap()
    }

    #[test]
    fn repetitions_follow_multiplicity() {
        let path = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let star = tree(&[(0, 1), (0, 2), (0, 3)], 4);
        let ms = MultiSplicer::new(vec![path.clone(), path.clone(), path]).unwrap();
        assert_eq!(ms.repetitions(Edge::new(0, 1).unwrap()), 2);
        assert_eq!(ms.repetitions(Edge::new(0, 3).unwrap()), 0);

        let ms = MultiSplicer::new(vec![tree(&[(0, 1), (1, 2), (2, 3)], 4), star]).unwrap();
        assert_eq!(ms.repetitions(Edge::new(1, 2).unwrap()), 0);
        assert_eq!(ms.repetitions(Edge::new(0, 1).unwrap()), 1);
        assert_eq!(ms.distinct_edges() + ms.surplus(), 2 * 3);
        assert_eq!(ms.repeats_in_tree(1), vec![Edge::new(0, 1).unwrap()]);
        assert!(ms.repeats_in_tree(0).is_empty());
    }

    #[test]
    fn common_edge_queries() {
        let a = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let b = tree(&[(0, 1), (1, 2), (1, 3)], 4);
        let c = tree(&[(0, 1), (0, 2), (0, 3)], 4);
        let ms = MultiSplicer::new(vec![a, b, c]).unwrap();
        assert_eq!(ms.common_edges(&CommonEdgeQuery::new([0, 1], 3).unwrap()), 2);
        assert_eq!(ms.common_edges(&CommonEdgeQuery::new([0, 1, 2], 3).unwrap()), 1);
        assert_eq!(ms.common_edges(&CommonEdgeQuery::new([2], 3).unwrap()), 3);
        assert!(CommonEdgeQuery::new([], 3).is_err());
        assert!(CommonEdgeQuery::new([3], 3).is_err());
    }

    #[test]
    fn mismatched_trees_rejected() {
        let a = tree(&[(0, 1)], 2);
        let b = tree(&[(0, 1), (1, 2)], 3);
        assert!(MultiSplicer::new(vec![a, b]).is_err());
        assert!(MultiSplicer::new(vec![]).is_err());
    }

    #[test]
    fn common_closed_form_values() {
        assert_eq!(exact_expected_common(4, 2).unwrap(), r(3, 2));
        assert_eq!(exact_expected_common(9, 1).unwrap(), int(8));
        assert_eq!(exact_expected_common(2, 5).unwrap(), int(1));
    }

    #[test]
    fn sk_and_m_closed_forms() {
        assert_eq!(exact_expected_sk(4, 2).unwrap(), r(9, 2));
        assert_eq!(exact_expected_sk(17, 1).unwrap(), int(16));
        assert_eq!(exact_expected_sk(100, 3).unwrap(), r(727_749, 2500));
        assert_eq!(exact_expected_m(4, 2).unwrap(), r(3, 2));
        assert_eq!(exact_expected_m(33, 1).unwrap(), int(0));
        assert_eq!(exact_expected_m(100, 3).unwrap(), r(14_751, 2500));
        for (n, k) in [(5, 3), (40, 7), (100, 3)] {
            let total = int((k * (n - 1)) as i64);
            assert_eq!(exact_expected_sk(n, k).unwrap() + exact_expected_m(n, k).unwrap(), total);
        }
    }

    #[test]
    fn variance_and_covariance_closed_forms() {
        assert_eq!(exact_var_re(4, 2).unwrap(), r(3, 16));
        assert_eq!(exact_var_re(11, 1).unwrap(), int(0));
        assert_eq!(exact_var_re(2, 4).unwrap(), int(0));
        assert_eq!(exact_cov_re(4, 2, true).unwrap(), r(-7, 256));
        assert_eq!(exact_cov_re(9, 3, false).unwrap(), int(0));
        assert_eq!(exact_cov_re(9, 1, true).unwrap(), int(0));
        assert!(exact_cov_re(3, 2, false).is_err());
        assert!(exact_cov_re(2, 2, true).is_err());
        assert_eq!(exact_var_m(4, 2).unwrap(), r(15, 32));
        assert_eq!(exact_var_m(4, 3).unwrap(), r(225, 512));
        assert_eq!(exact_var_m(5, 2).unwrap(), r(84, 125));
        assert_eq!(exact_var_m(12, 1).unwrap(), int(0));
        assert_eq!(exact_var_m(2, 3).unwrap(), int(0));
    }

    #[test]
    fn var_m_tends_to_k_k_minus_1() {
        for k in 2..6 {
            let v = to_f64(&exact_var_m(100_000, k).unwrap());
            assert!((v - (k * (k - 1)) as f64).abs() < 1e-2, "k={k}: {v}");
        }
    }

    #[test]
    fn expected_m_first_order_term_is_negative() {
        let exact = to_f64(&exact_expected_m(100, 3).unwrap());
        let a = asymptotics(100, 3);
        assert!(exact < 6.0);
        assert!((exact - a.expected_m).abs() < (exact - a.expected_m_plus).abs());
        // the next order is O(1/n^2), so n(exact - expansion) shrinks with n
        let n = 10_000;
        let exact = to_f64(&exact_expected_m(n, 3).unwrap());
        assert!((exact - asymptotics(n, 3).expected_m).abs() * (n as f64) < 0.01);
    }

    #[test]
    fn inclusion_exclusion_matches_closed_form() {
        for n in 2..=8 {
            for k in 1..=6 {
                assert_eq!(inclusion_exclusion_sk(n, k).unwrap(), exact_expected_sk(n, k).unwrap());
            }
        }
    }

    #[test]
    fn sk_increases_in_k() {
        for n in [3, 6, 20] {
            let cap = pairs(n);
            let mut prev = BigRational::zero();
            for k in 1..12 {
                let cur = exact_expected_sk(n, k).unwrap();
                assert!(cur > prev && cur <= cap);
                prev = cur;
            }
        }
    }

    #[test]
    fn concentration_bound_values() {
        assert_eq!(concentration_bound(2, 1.0).unwrap(), 0.5);
        assert_eq!(concentration_bound(5, 2.0).unwrap(), 0.0125);
        assert!(concentration_bound(1, 1.0).is_err());
        assert!(concentration_bound(3, 0.0).is_err());
    }

    #[test]
    fn oracle_single_tree_probabilities() {
        assert_eq!(brute_force_oracle(3, 1, Statistic::EdgeProbability).unwrap(), r(2, 3));
        let m = enumerate_moments(4, 1).unwrap();
        assert_eq!(m.tuples, 16);
        assert_eq!(m.pair_adjacent, Some(r(3, 16)));
        assert_eq!(m.pair_disjoint, Some(r(4, 16)));
        assert_eq!(m.pair_adjacent, Some(exact_pair_probability(4, true).unwrap()));
    }

    #[test]
    fn oracle_guard() {
        assert!(matches!(enumerate_moments(6, 3), Err(StatsError::OracleTooLarge { .. })));
        assert!(enumerate_moments(5, 3).is_ok() || cfg!(debug_assertions));
        assert!(brute_force_oracle(3, 2, Statistic::CovRe { adjacent: false }).is_err());
    }

    #[test]
    fn oracle_matches_frozen_values() {
        // frozen from an independent enumeration over networkx spanning trees
        let m = enumerate_moments(4, 2).unwrap();
        assert_eq!(m.expected_sk, r(9, 2));
        assert_eq!(m.expected_m, r(3, 2));
        assert_eq!(m.var_m, r(15, 32));
        assert_eq!(m.var_re, r(3, 16));
        assert_eq!(m.cov_adjacent, Some(r(-7, 256)));
        assert_eq!(m.cov_disjoint, Some(int(0)));
        assert_eq!(m.expected_common, vec![int(3), r(3, 2)]);
    }

    #[test]
    fn estimators_basic() {
        let e = mean_estimate(&[1.0, 1.0, 1.0]);
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        let v = variance_estimate(&[0.0, 2.0]);
        assert_eq!(v.value, 2.0);
        let c = covariance_estimate(&[0.0, 2.0], &[0.0, -2.0]);
        assert_eq!(c.value, -2.0);
        assert!(within_sigmas(1.0, 1.0, 0.0));
        assert!(!within_sigmas(1.1, 1.0, 0.01));
    }

    #[test]
    fn small_monte_carlo_agrees() {
        let run = McRun::simulate(12, 3, 4000, SamplerKind::Prufer, &RngStream::new(1, 0)).unwrap();
        for stat in [
            Statistic::EdgeProbability,
            Statistic::PairProbability { adjacent: true },
            Statistic::PairProbability { adjacent: false },
            Statistic::ExpectedCommon { ell: 2 },
            Statistic::ExpectedSk,
            Statistic::ExpectedM,
            Statistic::VarM,
            Statistic::VarRe,
            Statistic::CovRe { adjacent: true },
        ] {
            let rep = run.report(stat).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        for o in &run.observations {
            assert_eq!(o.s_k + o.m, 3 * 11);
        }
    }

    #[test]
    fn table_has_one_row_per_report() {
        let rep = StatReport::new(
            "E[S_k]".into(),
            4,
            2,
            4.5,
            Estimate {
                value: 4.4,
                std_error: 0.1,
            },
            100,
        );
        assert!(rep.pass);
        let table = render_table(&[rep.clone(), rep]);
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains("PASS"));
    }
}
