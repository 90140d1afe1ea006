//! The adaptive and non-adaptive query algorithms.
//!
//! Adaptive: each round finds a maximum-weight matching among edges not yet
//! known to be unrealized, queries its edges, and drops failures; the output
//! is the best matching among realized queried edges. Non-adaptive: peel off
//! maximum-weight matchings for a fixed number of rounds and query their
//! union once. Every adaptive round can carry machine-checked certificates
//! of the inequalities the analysis relies on.

use serde::{Deserialize, Serialize};

use crate::components::decompose;
use crate::graph::{EdgeSet, Matching, Weight, WeightedGraph};
use crate::ratio::Ratio;
use crate::solver::max_weight_matching;
use crate::stochastic::{
    expected_matching_exact, expected_matching_mc, QueryLedger, Realization, StochasticError,
    EXACT_ENUMERATION_LIMIT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgorithmError {
    #[error("edge sets do not cover the graph (missing edge {0})")]
    CoverageViolation(usize),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

/// Certificates evaluated for one adaptive round, all in exact integers.
///
/// `lemma2_*` certify: whenever `w(O_{r-1}) < (1-eps) w(M_r)`, the short
/// augmenting components alone carry value `>= (eps/2) w(M_r)`. Both sides
/// are stored cross-multiplied by `2 * eps.den`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `w(M_r) >= w(M(realization))` for this trial's realization.
    pub obs1_ok: bool,
    /// Whether `w(O_{r-1}) < (1-eps) w(M_r)` held (cross-multiplied).
    pub lemma2_premise: bool,
    /// True when the premise fails or the inequality holds.
    pub lemma2_ok: bool,
    /// `2 * eps.den * Σ_{C in U_r, L_C < 2/eps} Δ_C`; serialized as a
    /// decimal string since JSON numbers cannot carry i128 exactly.
    #[serde(with = "i128_as_string")]
    pub lemma2_lhs: i128,
    /// `eps.num * w(M_r)`, cross-multiplied like the left side.
    #[serde(with = "i128_as_string")]
    pub lemma2_rhs: i128,
    /// Number of augmenting components of `M_r Δ O_{r-1}`.
    pub u_r_size: usize,
    /// Those with `L_C < 2/eps`.
    pub short_count: usize,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.obs1_ok && self.lemma2_ok
    }
}

mod i128_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &i128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Evaluates the round certificates for matched pair `(o_prev, m_r)`.
pub fn round_certificates(
    g: &WeightedGraph,
    o_prev: &Matching,
    m_r: &Matching,
    realized_opt: Weight,
    eps: Ratio,
) -> CertificateReport {
    let obs1_ok = m_r.weight() >= realized_opt;
    // premise: eps.den * w(O_{r-1}) < (eps.den - eps.num) * w(M_r)
    let lemma2_premise = (eps.den as i128) * (o_prev.weight() as i128)
        < ((eps.den - eps.num) as i128) * (m_r.weight() as i128);
    let two_over_eps = Ratio::new(2 * eps.den, eps.num);
    let mut u_r_size = 0;
    let mut short_count = 0;
    let mut short_value: i128 = 0;
    for c in decompose(o_prev, m_r, g) {
        if !c.is_augmenting() {
            continue;
        }
        u_r_size += 1;
        if c.norm_length_below(two_over_eps) {
            short_count += 1;
            short_value += c.value as i128;
        }
    }
    let lemma2_lhs = 2 * eps.den as i128 * short_value;
    let lemma2_rhs = eps.num as i128 * m_r.weight() as i128;
    let lemma2_ok = !lemma2_premise || lemma2_lhs >= lemma2_rhs;
    CertificateReport {
        obs1_ok,
        lemma2_premise,
        lemma2_ok,
        lemma2_lhs,
        lemma2_rhs,
        u_r_size,
        short_count,
    }
}

/// Everything one adaptive round produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: u64,
    /// `M_r`, the maximum-weight matching over the surviving edge set.
    pub matching: Matching,
    /// `M_r^T`: queried edges of `M_r` that turned out realized.
    pub realized: EdgeSet,
    /// `M_r^F`: queried edges of `M_r` that failed.
    pub failed: EdgeSet,
    /// `E*` after removing this round's failures.
    pub e_star_after: EdgeSet,
    /// `w(O_r)` where `O_r = M(∪_{i<=r} M_i^T)`.
    pub o_r_weight: Weight,
    /// Set when the run stopped after this round because `M_r` contained no
    /// unqueried edge (querying could never change anything again).
    pub early_exit: bool,
    pub certificates: Option<CertificateReport>,
}

/// Result of one adaptive trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    /// `O_R`: maximum-weight matching among realized queried edges.
    pub final_matching: Matching,
    pub rounds: Vec<RoundRecord>,
    /// `w(M(realization))`: this trial's omniscient matching weight.
    pub realized_opt: Weight,
    pub ledger: QueryLedger,
}

impl AdaptiveOutcome {
    pub fn max_per_vertex_queries(&self) -> u32 {
        self.ledger.max_per_vertex()
    }

    pub fn certificate_failures(&self) -> usize {
        self.rounds
            .iter()
            .filter_map(|r| r.certificates.as_ref())
            .filter(|c| !c.passed())
            .count()
    }
}

/// Runs the adaptive algorithm with per-round certificates.
pub fn adaptive_run(
    g: &WeightedGraph,
    realization: &Realization,
    rounds: u64,
    eps: Ratio,
) -> AdaptiveOutcome {
    adaptive_run_impl(g, realization, rounds, Some(eps))
}

/// Adaptive algorithm without certificate evaluation (faster; the trace
/// still records the full per-round structure).
pub fn adaptive_run_bare(
    g: &WeightedGraph,
    realization: &Realization,
    rounds: u64,
) -> AdaptiveOutcome {
    adaptive_run_impl(g, realization, rounds, None)
}

fn adaptive_run_impl(
    g: &WeightedGraph,
    realization: &Realization,
    rounds: u64,
    eps: Option<Ratio>,
) -> AdaptiveOutcome {
    let m = g.edge_count();
    let realized_opt = max_weight_matching(g, realization.realized()).weight();
    let mut e_star = g.all_edges();
    let mut known_realized = EdgeSet::new(m);
    let mut ledger = QueryLedger::new(g);
    let mut o_prev = Matching::empty();
    let mut records = Vec::new();

    for round in 1..=rounds {
        let m_r = max_weight_matching(g, &e_star);
        let m_r_set = m_r.edge_set(m);

        let certificates =
            eps.map(|eps| round_certificates(g, &o_prev, &m_r, realized_opt, eps));

        // Querying a matching touches each vertex at most once, so R bounds
        // the per-vertex query count.
        let unqueried_before = m_r_set.difference(ledger.queried());
        ledger.query(g, realization, &m_r_set);

        let realized = m_r_set.intersection(realization.realized());
        let failed = m_r_set.difference(&realized);
        e_star.subtract(&failed);
        known_realized.union_with(&realized);

        let o_r = max_weight_matching(g, &known_realized);
        let o_r_weight = o_r.weight();
        debug_assert!(o_r_weight >= o_prev.weight());
        o_prev = o_r;

        // Fixed point: M_r had no unqueried edge, so E* can never shrink
        // again and every later round would repeat this one.
        let early_exit = unqueried_before.is_empty();
        records.push(RoundRecord {
            round,
            matching: m_r,
            realized,
            failed,
            e_star_after: e_star.clone(),
            o_r_weight,
            early_exit,
            certificates,
        });
        if early_exit {
            break;
        }
    }

    AdaptiveOutcome {
        final_matching: o_prev,
        rounds: records,
        realized_opt,
        ledger,
    }
}

/// Ceiling on what [`default_rounds`] may return; the closed form explodes
/// for small `p` and `eps`.
pub const DEFAULT_ROUNDS_CAP: u64 = 1 << 20;

/// Round budget `R = ceil(4 / (eps * p_min^(4/eps)))`, the constant read off
/// the per-round expected gain `(eps * p^(4/eps) / 4) * opt`; capped at
/// [`DEFAULT_ROUNDS_CAP`].
pub fn default_rounds(eps: Ratio, p_min: f64) -> u64 {
    assert!(eps.is_proper(), "eps must lie in (0, 1)");
    assert!(p_min > 0.0 && p_min <= 1.0, "p_min must lie in (0, 1]");
    let eps_f = eps.to_f64();
    let raw = 4.0 / (eps_f * p_min.powf(4.0 / eps_f));
    if !raw.is_finite() || raw >= DEFAULT_ROUNDS_CAP as f64 {
        DEFAULT_ROUNDS_CAP
    } else {
        (raw.ceil() as u64).max(1)
    }
}

/// Loop state of the non-adaptive algorithm: the selected union `H_r` and
/// the untouched remainder `N_r = E \ H_r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonAdaptiveState {
    h: EdgeSet,
    n: EdgeSet,
}

impl NonAdaptiveState {
    pub fn new(g: &WeightedGraph) -> Self {
        let h = EdgeSet::new(g.edge_count());
        let n = h.complement();
        NonAdaptiveState { h, n }
    }

    /// One peel: the maximum-weight matching of the remainder moves into
    /// `H`. Returns `None` once the remainder holds no positive-weight
    /// matching at all.
    pub fn step(&mut self, g: &WeightedGraph) -> Option<Matching> {
        let m_r = max_weight_matching(g, &self.n);
        if m_r.is_empty() {
            return None;
        }
        for &id in m_r.edge_ids() {
            self.h.insert(id);
            self.n.remove(id);
        }
        debug_assert_eq!(self.h.union(&self.n).len(), self.h.capacity());
        Some(m_r)
    }

    pub fn selected(&self) -> &EdgeSet {
        &self.h
    }

    pub fn remainder(&self) -> &EdgeSet {
        &self.n
    }
}

/// Algorithm 2's selection phase: peel `rounds` maximum-weight matchings and
/// return their union. Purely deterministic; no realization is consulted.
pub fn nonadaptive_select(g: &WeightedGraph, rounds: u64) -> EdgeSet {
    let mut state = NonAdaptiveState::new(g);
    for _ in 0..rounds {
        if state.step(g).is_none() {
            break;
        }
    }
    state.h
}

/// Monte Carlo estimate of `E[w(M(H ∩ realization))]`.
pub fn evaluate_subgraph(
    g: &WeightedGraph,
    h: &EdgeSet,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64), AlgorithmError> {
    Ok(expected_matching_mc(g, h, trials, seed)?)
}

/// The superadditivity certificate: for any cover `e1 ∪ e2 = E`,
/// `w(M(E1)) + w(M(E2)) >= w(M(E))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperadditivityCertificate {
    pub w_e1: Weight,
    pub w_e2: Weight,
    pub w_total: Weight,
    pub holds: bool,
}

pub fn check_superadditivity(
    g: &WeightedGraph,
    e1: &EdgeSet,
    e2: &EdgeSet,
) -> Result<SuperadditivityCertificate, AlgorithmError> {
    let cover = e1.union(e2);
    if let Some(missing) = g.all_edges().difference(&cover).iter().next() {
        return Err(AlgorithmError::CoverageViolation(missing));
    }
    let w_e1 = max_weight_matching(g, e1).weight();
    let w_e2 = max_weight_matching(g, e2).weight();
    let w_total = max_weight_matching(g, &g.all_edges()).weight();
    Ok(SuperadditivityCertificate {
        w_e1,
        w_e2,
        w_total,
        holds: w_e1 + w_e2 >= w_total,
    })
}

/// How expectations are evaluated when a certificate needs them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalBudget {
    /// Exact enumeration; errors if more than 20 edges are involved.
    Exact,
    /// Monte Carlo fallback with error bars.
    MonteCarlo { trials: u64, seed: u64 },
}

/// Certificate for the next-matching lower bound: if the selected subgraph
/// is still below half the omniscient expectation, the next peeled matching
/// weighs at least half of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextIsHalfCertificate {
    /// `𝕄[E]` and its standard error (zero when exact).
    pub m_all: f64,
    pub m_all_se: f64,
    /// `𝕄[H_{r-1}]` and its standard error (zero when exact).
    pub m_h: f64,
    pub m_h_se: f64,
    /// Whether `𝕄[H_{r-1}] < 𝕄[E]/2`.
    pub premise: bool,
    /// `w(M(E \ H_{r-1}))`.
    pub next_weight: Weight,
    pub holds: bool,
}

pub fn check_next_is_half(
    g: &WeightedGraph,
    h_prev: &EdgeSet,
    budget: EvalBudget,
) -> Result<NextIsHalfCertificate, AlgorithmError> {
    let (m_all, m_all_se, m_h, m_h_se) = match budget {
        EvalBudget::Exact => {
            if g.edge_count() > EXACT_ENUMERATION_LIMIT {
                return Err(AlgorithmError::Stochastic(StochasticError::TooLarge {
                    edges: g.edge_count(),
                    limit: EXACT_ENUMERATION_LIMIT,
                }));
            }
            let m_all = expected_matching_exact(g, &g.all_edges())?;
            let m_h = expected_matching_exact(g, h_prev)?;
            (m_all, 0.0, m_h, 0.0)
        }
        EvalBudget::MonteCarlo { trials, seed } => {
            let (m_all, se_all) = expected_matching_mc(g, &g.all_edges(), trials, seed)?;
            let (m_h, se_h) =
                expected_matching_mc(g, h_prev, trials, seed.wrapping_add(1))?;
            (m_all, se_all, m_h, se_h)
        }
    };
    let premise = m_h < m_all / 2.0;
    let next_weight = max_weight_matching(g, &h_prev.complement()).weight();
    let holds = !premise || (next_weight as f64) >= m_all / 2.0;
    Ok(NextIsHalfCertificate {
        m_all,
        m_all_se,
        m_h,
        m_h_se,
        premise,
        next_weight,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::stochastic::realize;

    fn graph(n: usize, list: &[(usize, usize, i64, f64)]) -> WeightedGraph {
        WeightedGraph::build(n, list).unwrap()
    }

    #[test]
    fn adaptive_single_realized_edge() {
        let g = graph(2, &[(0, 1, 10, 1.0)]);
        let r = realize(&g, 1);
        let out = adaptive_run(&g, &r, 1, Ratio::new(1, 2));
        assert_eq!(out.final_matching.weight(), 10);
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.ledger.per_vertex_counts(), &[1, 1]);
        assert!(out.rounds[0].certificates.as_ref().unwrap().passed());
    }

    #[test]
    fn adaptive_hand_trace_two_rounds() {
        // path a-b(5), b-c(8); only ab realized. Round 1 must pick bc, see
        // it fail and drop it; round 2 picks ab and succeeds.
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let mut realized = EdgeSet::new(2);
        realized.insert(0);
        let r = Realization::from_edge_set(realized, 0);
        let out = adaptive_run(&g, &r, 2, Ratio::new(1, 2));
        assert_eq!(out.rounds.len(), 2);
        assert_eq!(out.rounds[0].matching.edge_ids(), &[1]);
        assert_eq!(out.rounds[0].failed.to_ids(), vec![1]);
        assert_eq!(out.rounds[0].o_r_weight, 0);
        assert_eq!(out.rounds[1].matching.edge_ids(), &[0]);
        assert_eq!(out.rounds[1].realized.to_ids(), vec![0]);
        assert_eq!(out.rounds[1].o_r_weight, 5);
        assert_eq!(out.final_matching.weight(), 5);
        assert_eq!(out.realized_opt, 5);
    }

    #[test]
    fn adaptive_zero_rounds() {
        let g = graph(2, &[(0, 1, 10, 1.0)]);
        let r = realize(&g, 1);
        let out = adaptive_run(&g, &r, 0, Ratio::new(1, 2));
        assert!(out.final_matching.is_empty());
        assert!(out.rounds.is_empty());
        assert_eq!(out.ledger.max_per_vertex(), 0);
    }

    #[test]
    fn adaptive_early_exit_is_flagged() {
        // everything realized up front: round 1 queries the optimum, round 2
        // re-picks it and exits
        let g = graph(4, &[(0, 1, 4, 1.0), (1, 2, 5, 1.0), (2, 3, 4, 1.0)]);
        let r = realize(&g, 3);
        let out = adaptive_run(&g, &r, 10, Ratio::new(1, 2));
        assert_eq!(out.final_matching.weight(), 8);
        let last = out.rounds.last().unwrap();
        assert!(last.early_exit);
        assert!(out.rounds.len() < 10);
    }

    #[test]
    fn adaptive_certain_graph_reaches_optimum() {
        let g = graph(5, &[(0, 1, 3, 1.0), (1, 2, 7, 1.0), (2, 3, 2, 1.0), (3, 4, 9, 1.0)]);
        let r = realize(&g, 0);
        let out = adaptive_run(&g, &r, 1, Ratio::new(1, 2));
        let opt = max_weight_matching(&g, &g.all_edges()).weight();
        assert_eq!(out.final_matching.weight(), opt);
    }

    #[test]
    fn default_rounds_examples() {
        assert_eq!(default_rounds(Ratio::new(1, 2), 0.9), 19);
        assert_eq!(default_rounds(Ratio::new(1, 2), 1.0), 8);
        assert_eq!(default_rounds(Ratio::new(99, 100), 1.0), 5);
        assert_eq!(default_rounds(Ratio::new(1, 10), 0.1), DEFAULT_ROUNDS_CAP);
    }

    #[test]
    fn nonadaptive_peels_in_weight_order() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let mut state = NonAdaptiveState::new(&g);
        let first = state.step(&g).unwrap();
        assert_eq!(first.edge_ids(), &[1]);
        let second = state.step(&g).unwrap();
        assert_eq!(second.edge_ids(), &[0]);
        assert_eq!(state.selected().len(), 2);
        assert!(state.remainder().is_empty());
    }

    #[test]
    fn nonadaptive_select_bounds() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        assert!(nonadaptive_select(&g, 0).is_empty());
        let h = nonadaptive_select(&g, 2);
        assert_eq!(h.len(), 2);
        // single-edge graph saturates at R = 1
        let g1 = graph(2, &[(0, 1, 3, 0.5)]);
        assert_eq!(nonadaptive_select(&g1, 5).to_ids(), vec![0]);
    }

    #[test]
    fn nonadaptive_degree_bound() {
        let list: Vec<_> = (0..6)
            .flat_map(|u| ((u + 1)..6).map(move |v| (u, v, ((3 * u + v) % 7 + 1) as i64, 0.5)))
            .collect();
        let g = graph(6, &list);
        for rounds in 0..5u64 {
            let h = nonadaptive_select(&g, rounds);
            let mut deg = vec![0u64; 6];
            for id in h.iter() {
                deg[g.edge(id).u] += 1;
                deg[g.edge(id).v] += 1;
            }
            assert!(deg.iter().all(|&d| d <= rounds));
        }
    }

    #[test]
    fn evaluate_subgraph_examples() {
        let g = graph(2, &[(0, 1, 10, 0.5)]);
        let (mean, se) = evaluate_subgraph(&g, &g.all_edges(), 100_000, 7).unwrap();
        assert!((mean - 5.0).abs() <= 5.0 * se);

        let (zero, zero_se) = evaluate_subgraph(&g, &EdgeSet::new(1), 100, 7).unwrap();
        assert_eq!(zero, 0.0);
        assert_eq!(zero_se, 0.0);
    }

    #[test]
    fn superadditivity_trivial_covers() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let all = g.all_edges();
        let none = EdgeSet::new(2);
        let cert = check_superadditivity(&g, &all, &none).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.w_e1, cert.w_total);
        let cert = check_superadditivity(&g, &all, &all).unwrap();
        assert!(cert.holds);
        let err = check_superadditivity(&g, &none, &none).unwrap_err();
        assert_eq!(err, AlgorithmError::CoverageViolation(0));
    }

    #[test]
    fn next_is_half_boundary_cases() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        // empty H: premise true (0 < M[E]/2), and w(M(E)) >= M[E]/2 always
        let cert = check_next_is_half(&g, &EdgeSet::new(2), EvalBudget::Exact).unwrap();
        assert!(cert.premise);
        assert!(cert.holds);
        // full H: premise false, vacuous pass
        let cert = check_next_is_half(&g, &g.all_edges(), EvalBudget::Exact).unwrap();
        assert!(!cert.premise);
        assert!(cert.holds);
    }

    #[test]
    fn next_is_half_too_large_without_mc() {
        let list: Vec<_> = (0..21).map(|i| (i, i + 21, 1i64, 0.5)).collect();
        let g = graph(42, &list);
        assert!(check_next_is_half(&g, &EdgeSet::new(21), EvalBudget::Exact).is_err());
        let cert = check_next_is_half(
            &g,
            &EdgeSet::new(21),
            EvalBudget::MonteCarlo { trials: 500, seed: 3 },
        )
        .unwrap();
        assert!(cert.holds);
    }

    #[test]
    fn certificates_on_random_runs() {
        // exercised much harder in the acceptance suite; a quick smoke here
        let list: Vec<_> = (0..8)
            .flat_map(|u| ((u + 1)..8).map(move |v| (u, v, ((u * 5 + v * 11) % 20 + 1) as i64, 0.5)))
            .collect();
        let g = graph(8, &list);
        for seed in 0..20 {
            let r = realize(&g, seed);
            let out = adaptive_run(&g, &r, 12, Ratio::new(1, 2));
            assert_eq!(out.certificate_failures(), 0);
            assert_eq!(
                out.final_matching.weight(),
                max_weight_matching(&g, out.ledger.known_realized()).weight()
            );
            // monotone o_r
            let mut prev = 0;
            for rec in &out.rounds {
                assert!(rec.o_r_weight >= prev);
                prev = rec.o_r_weight;
            }
        }
    }
}
