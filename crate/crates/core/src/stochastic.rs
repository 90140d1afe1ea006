//! Edge realizations, query bookkeeping, and the omniscient optimum
//! `opt = E[w(M(realization))]`.
//!
//! Randomness is counter-based: each edge's coin is a hash of
//! `(seed, edge id)`, so a realization is a pure function of the graph and
//! seed, independent of iteration order, and trials parallelize without
//! stream splitting.

use rayon::prelude::*;

use crate::graph::{EdgeSet, Weight, WeightedGraph};
use crate::solver::max_weight_matching;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StochasticError {
    #[error("exact enumeration limited to {limit} edges, got {edges}")]
    TooLarge { edges: usize, limit: usize },
    #[error("Monte Carlo estimation needs at least 2 trials, got {0}")]
    TooFewTrials(u64),
}

/// Edge count above which exact expectation enumeration is refused.
pub const EXACT_ENUMERATION_LIMIT: usize = 20;

const fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Stream tags keep independent uses of one user seed uncorrelated.
pub mod seed_tags {
    pub const REALIZE: u64 = 0x01;
    pub const OPT_MC: u64 = 0x02;
    pub const ADAPTIVE_TRIAL: u64 = 0x03;
    pub const SUBGRAPH_EVAL: u64 = 0x04;
    pub const SWEEP_POINT: u64 = 0x05;
    pub const GENERATOR: u64 = 0x06;
}

/// Derives an independent seed from `(seed, tag, index)`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed).wrapping_add(tag)).wrapping_add(index))
}

/// Uniform draw in [0, 1) from a counter hash.
fn unit_uniform(seed: u64, edge_id: u64) -> f64 {
    let h = splitmix64(splitmix64(seed ^ 0xd6e8feb86659fd93).wrapping_add(edge_id));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The hidden set of realized edges for one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    realized: EdgeSet,
    seed: u64,
}

impl Realization {
    pub fn realized(&self) -> &EdgeSet {
        &self.realized
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn contains(&self, id: usize) -> bool {
        self.realized.contains(id)
    }

    /// Rebuilds a realization from an explicit edge set (trace replay).
    pub fn from_edge_set(realized: EdgeSet, seed: u64) -> Self {
        Realization { realized, seed }
    }
}

/// Samples a realization: edge `e` is included independently with
/// probability `p_e`, driven by a hash of `(seed, e.id)`.
pub fn realize(g: &WeightedGraph, seed: u64) -> Realization {
    let mut realized = EdgeSet::new(g.edge_count());
    for e in g.edges() {
        if unit_uniform(seed, e.id as u64) < e.p {
            realized.insert(e.id);
        }
    }
    Realization { realized, seed }
}

/// Which edges have been queried and what each query answered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLedger {
    queried: EdgeSet,
    realized_outcomes: EdgeSet,
    per_vertex_counts: Vec<u32>,
}

impl QueryLedger {
    pub fn new(g: &WeightedGraph) -> Self {
        QueryLedger {
            queried: EdgeSet::new(g.edge_count()),
            realized_outcomes: EdgeSet::new(g.edge_count()),
            per_vertex_counts: vec![0; g.vertex_count()],
        }
    }

    /// Queries `edges` against `realization`. Re-querying is a no-op; an
    /// already-recorded outcome is checked against the realization.
    pub fn query(&mut self, g: &WeightedGraph, realization: &Realization, edges: &EdgeSet) {
        for id in edges.iter() {
            if self.queried.contains(id) {
                assert_eq!(
                    self.realized_outcomes.contains(id),
                    realization.contains(id),
                    "ledger outcome contradicts realization for edge {id}"
                );
                continue;
            }
            self.queried.insert(id);
            let e = g.edge(id);
            self.per_vertex_counts[e.u] += 1;
            self.per_vertex_counts[e.v] += 1;
            if realization.contains(id) {
                self.realized_outcomes.insert(id);
            }
        }
    }

    pub fn queried(&self) -> &EdgeSet {
        &self.queried
    }

    /// `Some(true)` realized, `Some(false)` failed, `None` not yet queried.
    pub fn outcome(&self, id: usize) -> Option<bool> {
        if self.queried.contains(id) {
            Some(self.realized_outcomes.contains(id))
        } else {
            None
        }
    }

    /// Queried edges that turned out to be realized.
    pub fn known_realized(&self) -> &EdgeSet {
        &self.realized_outcomes
    }

    pub fn per_vertex_counts(&self) -> &[u32] {
        &self.per_vertex_counts
    }

    pub fn max_per_vertex(&self) -> u32 {
        self.per_vertex_counts.iter().copied().max().unwrap_or(0)
    }
}

/// Exact `E[w(M(active ∩ realization))]` by enumerating all realizations of
/// the active edges. Summation order is fixed (ascending subset index).
pub fn expected_matching_exact(
    g: &WeightedGraph,
    active: &EdgeSet,
) -> Result<f64, StochasticError> {
    let ids: Vec<usize> = active.iter().collect();
    if ids.len() > EXACT_ENUMERATION_LIMIT {
        return Err(StochasticError::TooLarge {
            edges: ids.len(),
            limit: EXACT_ENUMERATION_LIMIT,
        });
    }
    let mut total = 0.0;
    for mask in 0u64..(1u64 << ids.len()) {
        let mut prob = 1.0;
        let mut subset = EdgeSet::new(g.edge_count());
        for (bit, &id) in ids.iter().enumerate() {
            let p = g.edge(id).p;
            if mask >> bit & 1 == 1 {
                prob *= p;
                subset.insert(id);
            } else {
                prob *= 1.0 - p;
            }
        }
        if prob > 0.0 {
            total += prob * max_weight_matching(g, &subset).weight() as f64;
        }
    }
    Ok(total)
}

/// Exact omniscient optimum `opt = E[w(M(realization))]`; requires `m <= 20`.
pub fn omniscient_opt_exact(g: &WeightedGraph) -> Result<f64, StochasticError> {
    expected_matching_exact(g, &g.all_edges())
}

/// Sample mean and standard error of `w(M(realization))` over `trials`
/// realizations with seeds derived from `(seed, trial index)`.
pub fn omniscient_opt_mc(
    g: &WeightedGraph,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64), StochasticError> {
    expected_matching_mc(g, &g.all_edges(), trials, seed)
}

/// Monte Carlo `E[w(M(active ∩ realization))]`; the estimator behind both
/// the omniscient optimum and non-adaptive subgraph evaluation.
pub fn expected_matching_mc(
    g: &WeightedGraph,
    active: &EdgeSet,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64), StochasticError> {
    if trials < 2 {
        return Err(StochasticError::TooFewTrials(trials));
    }
    let weights: Vec<Weight> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let r = realize(g, derive_seed(seed, seed_tags::REALIZE, i));
            let visible = active.intersection(r.realized());
            max_weight_matching(g, &visible).weight()
        })
        .collect();
    Ok(mean_and_se(&weights))
}

/// Mean and standard error from exact integer sums, so the result does not
/// depend on accumulation order.
pub fn mean_and_se(samples: &[Weight]) -> (f64, f64) {
    let n = samples.len() as i128;
    assert!(n >= 2);
    let sum: i128 = samples.iter().map(|&w| w as i128).sum();
    let sum_sq: i128 = samples.iter().map(|&w| (w as i128) * (w as i128)).sum();
    let mean = sum as f64 / n as f64;
    // unbiased variance: (n*Σx² − (Σx)²) / (n(n−1))
    let var_num = n * sum_sq - sum * sum;
    let variance = var_num as f64 / (n * (n - 1)) as f64;
    let se = (variance / n as f64).sqrt();
    (mean, se)
}
