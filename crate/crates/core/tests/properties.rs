//! Property tests spanning the library: symmetric-difference structure,
//! solver optimality against brute force, deletion-partition arithmetic,
//! split accounting, the bounded decomposition, and the per-round
//! certificates of the adaptive algorithm.

use proptest::prelude::*;

use stochmatch::algorithms::{adaptive_run, nonadaptive_select};
use stochmatch::components::{
    compute_alpha, decompose, decompose_bounded, deletion_partition, label_edges, split_component,
};
use stochmatch::graph::{symmetric_difference, EdgeSet, Matching, Shape, WeightedGraph};
use stochmatch::ratio::Ratio;
use stochmatch::solver::{brute_force_matching, max_weight_matching};
use stochmatch::stochastic::{omniscient_opt_exact, omniscient_opt_mc, realize, QueryLedger};

/// Random simple graph: `n` vertices, each possible edge kept by a bit of
/// the mask, weights from the given range.
fn arb_graph(
    max_n: usize,
    max_w: i64,
) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n, any::<u64>(), any::<u64>()).prop_map(move |(n, mask, wseed)| {
        let mut list = Vec::new();
        let mut bit = 0;
        let mut w = wseed;
        for u in 0..n {
            for v in (u + 1)..n {
                if mask >> (bit % 64) & 1 == 1 {
                    w = w
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    list.push((u, v, (w >> 33) as i64 % (max_w + 1), 0.5));
                }
                bit += 1;
            }
        }
        WeightedGraph::build(n, &list).unwrap()
    })
}

/// Deterministic greedy matching from a seeded edge order.
fn greedy_matching(g: &WeightedGraph, seed: u64) -> Matching {
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    let mut s = seed;
    for i in (1..order.len()).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        order.swap(i, (s >> 33) as usize % (i + 1));
    }
    let mut used = vec![false; g.vertex_count()];
    let mut ids = EdgeSet::new(g.edge_count());
    for id in order {
        let e = g.edge(id);
        if !used[e.u] && !used[e.v] {
            used[e.u] = true;
            used[e.v] = true;
            ids.insert(id);
        }
    }
    Matching::validate(g, &ids).unwrap()
}

/// Alternating path/cycle with the given side weights; returns the graph and
/// the two matchings whose difference is exactly that component.
fn alt_component(
    heavy: &[i64],
    light: &[i64],
    cycle: bool,
) -> (WeightedGraph, Matching, Matching) {
    assert!(!heavy.is_empty());
    let mut weights = Vec::new();
    for i in 0..heavy.len() + light.len() {
        if i % 2 == 0 {
            weights.push(heavy[i / 2]);
        } else {
            weights.push(light[i / 2]);
        }
    }
    let k = weights.len();
    let n = if cycle { k } else { k + 1 };
    let list: Vec<_> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, if cycle { (i + 1) % k } else { i + 1 }, w, 0.5))
        .collect();
    let g = WeightedGraph::build(n, &list).unwrap();
    let heavy_ids: Vec<usize> = (0..k).filter(|i| i % 2 == 0).collect();
    let light_ids: Vec<usize> = (0..k).filter(|i| i % 2 == 1).collect();
    let mh = Matching::validate(&g, &EdgeSet::from_ids(k, &heavy_ids)).unwrap();
    let ml = Matching::validate(&g, &EdgeSet::from_ids(k, &light_ids)).unwrap();
    (g, ml, mh)
}

proptest! {
    #[test]
    fn symdiff_partitions_the_difference(g in arb_graph(12, 50), s1 in any::<u64>(), s2 in any::<u64>()) {
        let ma = greedy_matching(&g, s1);
        let mb = greedy_matching(&g, s2);
        let comps = symmetric_difference(&ma, &mb, &g);
        let m = g.edge_count();
        let expected = {
            let a = ma.edge_set(m);
            let b = mb.edge_set(m);
            a.union(&b).difference(&a.intersection(&b))
        };
        let mut seen = EdgeSet::new(m);
        for c in &comps {
            for &id in &c.edges {
                prop_assert!(!seen.contains(id), "edge {} appears twice", id);
                seen.insert(id);
            }
        }
        prop_assert_eq!(seen, expected);

        // degree census matches the claimed shapes
        for c in &comps {
            let mut deg = std::collections::HashMap::new();
            for &id in &c.edges {
                *deg.entry(g.edge(id).u).or_insert(0) += 1;
                *deg.entry(g.edge(id).v).or_insert(0) += 1;
            }
            prop_assert!(deg.values().all(|&d| d <= 2));
            let odd = deg.values().filter(|&&d| d == 1).count();
            match c.shape {
                Shape::Path => prop_assert_eq!(odd, 2),
                Shape::Cycle => {
                    prop_assert_eq!(odd, 0);
                    prop_assert_eq!(c.edges.len() % 2, 0);
                }
            }
        }
    }

    #[test]
    fn matching_weight_round_trips(g in arb_graph(12, 50), s in any::<u64>()) {
        let m = greedy_matching(&g, s);
        let back = Matching::validate(&g, &m.edge_set(g.edge_count())).unwrap();
        prop_assert_eq!(back.weight(), m.weight());
    }

    #[test]
    fn solver_matches_brute_force(g in arb_graph(8, 100)) {
        prop_assume!(g.edge_count() <= 24);
        let solved = max_weight_matching(&g, &g.all_edges());
        let oracle = brute_force_matching(&g, &g.all_edges()).unwrap();
        prop_assert_eq!(solved.weight(), oracle.weight());
    }

    #[test]
    fn solver_weight_is_monotone_in_active_set(g in arb_graph(9, 60), mask in any::<u64>()) {
        let all = g.all_edges();
        let mut sub = EdgeSet::new(g.edge_count());
        for id in all.iter() {
            if mask >> (id % 64) & 1 == 1 {
                sub.insert(id);
            }
        }
        let w_all = max_weight_matching(&g, &all).weight();
        let w_sub = max_weight_matching(&g, &sub).weight();
        prop_assert!(w_sub <= w_all);
    }

    #[test]
    fn solver_output_admits_no_augmenting_component(g in arb_graph(9, 60), s in any::<u64>()) {
        let best = max_weight_matching(&g, &g.all_edges());
        let other = greedy_matching(&g, s);
        for c in decompose(&best, &other, &g) {
            prop_assert!(c.value <= 0, "a positive component would contradict optimality");
        }
    }

    #[test]
    fn claim1_minimum_class_is_at_most_average(
        heavy in prop::collection::vec(0i64..=100, 1..=12),
        light in prop::collection::vec(0i64..=100, 0..=12),
        cycle in any::<bool>(),
    ) {
        let light = if cycle {
            if heavy.len() < 2 { return Ok(()); }
            light.iter().copied().cycle().take(heavy.len()).collect::<Vec<_>>()
        } else {
            light.iter().copied().take(heavy.len().saturating_sub(0).min(heavy.len() - 1 + 1)).collect::<Vec<_>>()
        };
        if cycle && light.is_empty() { return Ok(()); }
        let (g, ml, mh) = alt_component(&heavy, &light, cycle);
        for c in decompose(&ml, &mh, &g) {
            let lc = label_edges(&c, &g);
            let k = lc.q_edges.len() as i64;
            for alpha in 1..=(2 * k) {
                let dp = deletion_partition(&lc, alpha, &g);
                // exact: min_i w(D_i) * alpha <= w(Q_C)
                prop_assert!(dp.chosen_weight as i128 * alpha as i128 <= dp.q_weight as i128);
                // the classes partition the q-edges
                let mut all: Vec<usize> = dp.parts.iter().flatten().copied().collect();
                all.sort_unstable();
                let mut qs = lc.q_edges.clone();
                qs.sort_unstable();
                prop_assert_eq!(all, qs);
            }
        }
    }

    #[test]
    fn split_accounting_balances(
        heavy in prop::collection::vec(0i64..=100, 1..=10),
        light in prop::collection::vec(0i64..=100, 0..=10),
        alpha in 1i64..=8,
        cycle in any::<bool>(),
    ) {
        let light = if cycle {
            if heavy.len() < 2 { return Ok(()); }
            light.iter().copied().cycle().take(heavy.len()).collect::<Vec<_>>()
        } else {
            light
        };
        if cycle && light.is_empty() { return Ok(()); }
        let (g, ml, mh) = alt_component(&heavy, &light, cycle);
        for c in decompose(&ml, &mh, &g) {
            let lc = label_edges(&c, &g);
            let dp = deletion_partition(&lc, alpha, &g);
            let split = split_component(&c, &dp, &g);
            prop_assert_eq!(split.total_value() + split.removed_weight, c.value);
            for f in &split.sub_components {
                prop_assert!(f.aug_edges.len() as i64 <= alpha);
            }
            // fragments are vertex-disjoint
            let mut seen = std::collections::HashSet::new();
            for f in &split.sub_components {
                let mut verts = std::collections::HashSet::new();
                for &id in &f.ordered_edges {
                    verts.insert(g.edge(id).u);
                    verts.insert(g.edge(id).v);
                }
                for v in verts {
                    prop_assert!(seen.insert(v), "vertex {} shared between fragments", v);
                }
            }
        }
    }

    #[test]
    fn lemma1_core_split_keeps_half_the_value(
        heavy in prop::collection::vec(51i64..=100, 1..=10),
        light in prop::collection::vec(0i64..=50, 0..=10),
        cycle in any::<bool>(),
    ) {
        let light = if cycle {
            if heavy.len() < 2 { return Ok(()); }
            light.iter().copied().cycle().take(heavy.len()).collect::<Vec<_>>()
        } else {
            light
        };
        if cycle && light.is_empty() { return Ok(()); }
        let (g, ml, mh) = alt_component(&heavy, &light, cycle);
        for c in decompose(&ml, &mh, &g) {
            prop_assume!(c.is_augmenting());
            let alpha = compute_alpha(&c).unwrap();
            let lc = label_edges(&c, &g);
            let dp = deletion_partition(&lc, alpha, &g);
            let split = split_component(&c, &dp, &g);
            // 2 * sum_j Δ_{C_j} >= Δ_C, exactly
            prop_assert!(2 * split.total_value() >= c.value);
        }
    }

    #[test]
    fn bounded_decomposition_postconditions(
        g in arb_graph(12, 40),
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        eps_den in 2i64..=8,
    ) {
        let eps = Ratio::new(1, eps_den);
        let ml = greedy_matching(&g, s1);
        let mh = greedy_matching(&g, s2);
        let out = decompose_bounded(&ml, &mh, &g, eps).unwrap();
        let limit = out.max_edges;
        for c in decompose(&ml, &out.reduced, &g) {
            if c.is_augmenting() {
                prop_assert!(c.ordered_edges.len() as i64 <= limit);
            }
        }
        // w(M'_H) * 2den >= (2den - num) * w(M_H)
        prop_assert!(
            out.reduced.weight() as i128 * 2 * eps.den as i128
                >= (2 * eps.den - eps.num) as i128 * mh.weight() as i128
        );
        // reduced is a subset of mh
        let m = g.edge_count();
        prop_assert!(out.reduced.edge_set(m).is_subset_of(&mh.edge_set(m)));
    }

    #[test]
    fn realizations_are_seed_deterministic(g in arb_graph(10, 20), seed in any::<u64>()) {
        prop_assert_eq!(realize(&g, seed), realize(&g, seed));
    }

    #[test]
    fn ledger_agrees_with_realization(g in arb_graph(10, 20), seed in any::<u64>(), mask in any::<u64>()) {
        let r = realize(&g, seed);
        let mut ledger = QueryLedger::new(&g);
        let mut q = EdgeSet::new(g.edge_count());
        for id in g.all_edges().iter() {
            if mask >> (id % 64) & 1 == 1 {
                q.insert(id);
            }
        }
        ledger.query(&g, &r, &q);
        for id in q.iter() {
            prop_assert_eq!(ledger.outcome(id), Some(r.contains(id)));
        }
        // per-vertex counts match a direct census
        for v in 0..g.vertex_count() {
            let expected = q.iter().filter(|&id| g.edge(id).u == v || g.edge(id).v == v).count();
            prop_assert_eq!(ledger.per_vertex_counts()[v] as usize, expected);
        }
    }

    #[test]
    fn adaptive_round_invariants(g in arb_graph(9, 40), seed in any::<u64>(), rounds in 0u64..=12) {
        let r = realize(&g, seed);
        let out = adaptive_run(&g, &r, rounds, Ratio::new(1, 2));
        let mut prev = 0;
        for rec in &out.rounds {
            // obs1 pointwise: the surviving-set matching dominates the realized optimum
            prop_assert!(rec.matching.weight() >= out.realized_opt);
            // o_r is monotone
            prop_assert!(rec.o_r_weight >= prev);
            prev = rec.o_r_weight;
            // certificates hold and are internally consistent
            let cert = rec.certificates.as_ref().unwrap();
            prop_assert!(cert.passed());
            prop_assert!(cert.short_count <= cert.u_r_size);
            // the realized/failed split covers M_r
            let m_r_set = rec.matching.edge_set(g.edge_count());
            prop_assert_eq!(rec.realized.union(&rec.failed), m_r_set);
        }
        // the output uses exactly the realized queried edges
        let expected = max_weight_matching(&g, out.ledger.known_realized());
        prop_assert_eq!(out.final_matching.weight(), expected.weight());
        // query accounting: per-vertex counts bounded by the round budget
        prop_assert!(out.ledger.max_per_vertex() as u64 <= rounds);
    }

    #[test]
    fn adaptive_with_certain_edges_hits_optimum(g in arb_graph(9, 40), seed in any::<u64>()) {
        let certain = g.with_uniform_p(1.0).unwrap();
        let r = realize(&certain, seed);
        let out = adaptive_run(&certain, &r, 1, Ratio::new(1, 2));
        let opt = max_weight_matching(&certain, &certain.all_edges()).weight();
        prop_assert_eq!(out.final_matching.weight(), opt);
    }

    #[test]
    fn nonadaptive_degree_is_bounded_by_rounds(g in arb_graph(10, 40), rounds in 0u64..=6) {
        let h = nonadaptive_select(&g, rounds);
        let mut deg = vec![0u64; g.vertex_count()];
        for id in h.iter() {
            deg[g.edge(id).u] += 1;
            deg[g.edge(id).v] += 1;
        }
        prop_assert!(deg.into_iter().all(|d| d <= rounds));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn monte_carlo_opt_tracks_exact(g in arb_graph(6, 30), seed in any::<u64>()) {
        prop_assume!(g.edge_count() <= 12);
        let exact = omniscient_opt_exact(&g).unwrap();
        let (mean, se) = omniscient_opt_mc(&g, 4000, seed).unwrap();
        // 5 sigma with a small absolute floor for near-deterministic graphs
        prop_assert!((mean - exact).abs() <= 5.0 * se + 1e-9,
            "mean={} exact={} se={}", mean, exact, se);
    }
}
