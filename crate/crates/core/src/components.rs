//! Weighted alternating components: the generalization of augmenting paths
//! that drives both query algorithms.
//!
//! Given matchings `m_l` (base, light) and `m_h` (heavy), each connected
//! component `C` of their symmetric difference carries base edges
//! `B_C = C ∩ m_l`, augmenting edges `Q_C = C ∩ m_h`, value
//! `Δ_C = w(Q_C) − w(B_C)`, and, when `Δ_C > 0`, normalized length
//! `L_C = w(Q_C) / Δ_C` kept as an exact rational. Long components are cut
//! into short sub-components by deleting one residue class of augmenting
//! edges; the arithmetic facts behind those cuts are re-checked here as
//! integer certificates on every call.

use serde::{Deserialize, Serialize};

use crate::graph::{
    symmetric_difference, EdgeId, GraphError, Matching, Shape, Weight, WeightedGraph,
};
use crate::ratio::{ceil_div, Ratio};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComponentError {
    #[error("component value {0} is not positive")]
    NotAugmenting(Weight),
    #[error("component cannot augment the matching: {0}")]
    NotAugmentable(String),
    #[error("epsilon {0} outside (0, 1)")]
    BadEpsilon(Ratio),
    #[error("deletion class {index} violates w(D_i)*alpha <= w(Q_C)")]
    InvalidChoice { index: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One connected component of `m_l Δ m_h` with its weighted statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternatingComponent {
    pub shape: Shape,
    /// Edges in traversal order along the path or cycle.
    pub ordered_edges: Vec<EdgeId>,
    /// `B_C`: member edges from `m_l`, in traversal order.
    pub base_edges: Vec<EdgeId>,
    /// `Q_C`: member edges from `m_h`, in traversal order.
    pub aug_edges: Vec<EdgeId>,
    /// `Δ_C = w(Q_C) − w(B_C)`; may be negative.
    pub value: Weight,
    /// `L_C = w(Q_C) / Δ_C`, defined only for augmenting components.
    pub norm_length: Option<Ratio>,
}

impl AlternatingComponent {
    fn from_parts(
        shape: Shape,
        ordered_edges: Vec<EdgeId>,
        in_aug: impl Fn(EdgeId) -> bool,
        g: &WeightedGraph,
    ) -> Self {
        let mut base_edges = Vec::new();
        let mut aug_edges = Vec::new();
        for &id in &ordered_edges {
            if in_aug(id) {
                aug_edges.push(id);
            } else {
                base_edges.push(id);
            }
        }
        let wq = g.weight_of(aug_edges.iter().copied());
        let wb = g.weight_of(base_edges.iter().copied());
        let value = wq - wb;
        let norm_length = if value > 0 {
            Some(Ratio::new(wq, value))
        } else {
            None
        };
        AlternatingComponent {
            shape,
            ordered_edges,
            base_edges,
            aug_edges,
            value,
            norm_length,
        }
    }

    pub fn is_augmenting(&self) -> bool {
        self.value > 0
    }

    pub fn aug_weight(&self, g: &WeightedGraph) -> Weight {
        g.weight_of(self.aug_edges.iter().copied())
    }

    pub fn base_weight(&self, g: &WeightedGraph) -> Weight {
        g.weight_of(self.base_edges.iter().copied())
    }

    /// `L_C < bound`, decided by cross-multiplication. False when `Δ_C <= 0`.
    pub fn norm_length_below(&self, bound: Ratio) -> bool {
        match self.norm_length {
            Some(l) => l < bound,
            None => false,
        }
    }

    /// JSON record `{shape, edge_ids, delta, L_num, L_den, alpha}`.
    pub fn report(&self) -> ComponentReport {
        ComponentReport {
            shape: self.shape,
            edge_ids: self.ordered_edges.clone(),
            delta: self.value,
            l_num: self.norm_length.map(|l| l.num),
            l_den: self.norm_length.map(|l| l.den),
            alpha: compute_alpha(self).ok(),
        }
    }
}

/// Serializable component summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub shape: Shape,
    pub edge_ids: Vec<EdgeId>,
    pub delta: Weight,
    #[serde(rename = "L_num")]
    pub l_num: Option<Weight>,
    #[serde(rename = "L_den")]
    pub l_den: Option<Weight>,
    pub alpha: Option<i64>,
}

/// Decomposes `m_l Δ m_h` into alternating components with statistics.
pub fn decompose(
    m_l: &Matching,
    m_h: &Matching,
    g: &WeightedGraph,
) -> Vec<AlternatingComponent> {
    symmetric_difference(m_l, m_h, g)
        .into_iter()
        .map(|raw| {
            let c =
                AlternatingComponent::from_parts(raw.shape, raw.edges, |id| m_h.contains(id), g);
            debug_assert!(alternates(&c), "component edges must alternate sides");
            c
        })
        .collect()
}

fn alternates(c: &AlternatingComponent) -> bool {
    let aug: std::collections::HashSet<_> = c.aug_edges.iter().copied().collect();
    c.ordered_edges
        .windows(2)
        .all(|w| aug.contains(&w[0]) != aug.contains(&w[1]))
}

/// Swaps `B_C` for `Q_C` in `m_l`; the result weighs exactly
/// `w(m_l) + Δ_C`.
pub fn augment(
    m_l: &Matching,
    c: &AlternatingComponent,
    g: &WeightedGraph,
) -> Result<Matching, ComponentError> {
    let m = g.edge_count();
    let mut ids = m_l.edge_set(m);
    for &b in &c.base_edges {
        if !ids.contains(b) {
            return Err(ComponentError::NotAugmentable(format!(
                "base edge {b} is not in the matching"
            )));
        }
        ids.remove(b);
    }
    for &q in &c.aug_edges {
        ids.insert(q);
    }
    let result = Matching::validate(g, &ids)
        .map_err(|e| ComponentError::NotAugmentable(e.to_string()))?;
    assert_eq!(
        result.weight(),
        m_l.weight() + c.value,
        "augmentation must change the weight by exactly the component value"
    );
    Ok(result)
}

/// Which of the three labeling cases a component falls under: a path led by
/// an augmenting edge, a path led by a base edge, or a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelCase {
    PathFromAug,
    PathFromBase,
    Cycle,
}

/// A component relabeled as `(q_1, b_1, q_2, ...)`, `(b_0, q_1, b_1, ...)`,
/// or the cyclic variant anchored at its smallest-id augmenting edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledComponent {
    pub case: LabelCase,
    /// `q_1..q_k` in traversal order.
    pub q_edges: Vec<EdgeId>,
    /// `b_0?, b_1..` in traversal order; `b_0` exists only for `PathFromBase`.
    pub b_edges: Vec<EdgeId>,
    /// Traversal order with the cycle rotation applied.
    pub ordered_edges: Vec<EdgeId>,
    pub q_weight: Weight,
}

pub fn label_edges(c: &AlternatingComponent, g: &WeightedGraph) -> LabeledComponent {
    assert!(!c.ordered_edges.is_empty(), "cannot label an empty component");
    let is_aug = |id: EdgeId| c.aug_edges.contains(&id);
    let mut ordered = c.ordered_edges.clone();
    let case = match c.shape {
        Shape::Path => {
            if is_aug(ordered[0]) {
                LabelCase::PathFromAug
            } else {
                LabelCase::PathFromBase
            }
        }
        Shape::Cycle => {
            // An alternating cycle always contains augmenting edges; rotate
            // so the smallest-id one leads.
            let anchor = c
                .aug_edges
                .iter()
                .copied()
                .min()
                .expect("alternating cycles contain augmenting edges");
            let pos = ordered.iter().position(|&e| e == anchor).unwrap();
            ordered.rotate_left(pos);
            LabelCase::Cycle
        }
    };
    let mut q_edges = Vec::new();
    let mut b_edges = Vec::new();
    for &id in &ordered {
        if is_aug(id) {
            q_edges.push(id);
        } else {
            b_edges.push(id);
        }
    }
    let q_weight = g.weight_of(q_edges.iter().copied());
    LabeledComponent {
        case,
        q_edges,
        b_edges,
        ordered_edges: ordered,
        q_weight,
    }
}

/// The residue classes `D_i = {q_i, q_{i+α}, q_{i+2α}, ...}` (1-indexed)
/// and the chosen minimum-weight class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionPartition {
    pub alpha: i64,
    /// `parts[i-1]` is `D_i`.
    pub parts: Vec<Vec<EdgeId>>,
    /// 1-based index of the minimum-weight class (ties to the smallest).
    pub chosen_index: usize,
    pub chosen_weight: Weight,
    pub q_weight: Weight,
}

impl DeletionPartition {
    pub fn chosen(&self) -> &[EdgeId] {
        &self.parts[self.chosen_index - 1]
    }
}

/// Builds the partition and picks `argmin_i w(D_i)`. The selected class
/// always satisfies `w(D_i) * α <= w(Q_C)`, which is asserted.
pub fn deletion_partition(
    lc: &LabeledComponent,
    alpha: i64,
    g: &WeightedGraph,
) -> DeletionPartition {
    assert!(alpha >= 1, "alpha must be at least 1");
    let alpha_usize = usize::try_from(alpha).expect("alpha fits usize");
    let mut parts = vec![Vec::new(); alpha_usize];
    for (idx, &q) in lc.q_edges.iter().enumerate() {
        parts[idx % alpha_usize].push(q);
    }
    let mut chosen_index = 1;
    let mut chosen_weight = g.weight_of(parts[0].iter().copied());
    for (i, part) in parts.iter().enumerate().skip(1) {
        let w = g.weight_of(part.iter().copied());
        if w < chosen_weight {
            chosen_weight = w;
            chosen_index = i + 1;
        }
    }
    let q_weight = lc.q_weight;
    // Claim: the minimum class weighs at most the average w(Q_C)/alpha.
    assert!(
        chosen_weight as i128 * alpha as i128 <= q_weight as i128,
        "minimum deletion class exceeds the average weight"
    );
    DeletionPartition {
        alpha,
        parts,
        chosen_index,
        chosen_weight,
        q_weight,
    }
}

/// Like [`deletion_partition`] but with a caller-chosen class index, which
/// must still satisfy the average-weight bound.
pub fn deletion_partition_at(
    lc: &LabeledComponent,
    alpha: i64,
    index: usize,
    g: &WeightedGraph,
) -> Result<DeletionPartition, ComponentError> {
    let mut dp = deletion_partition(lc, alpha, g);
    assert!(index >= 1 && index <= dp.parts.len(), "index out of range");
    let w = g.weight_of(dp.parts[index - 1].iter().copied());
    if w as i128 * alpha as i128 > dp.q_weight as i128 {
        return Err(ComponentError::InvalidChoice { index });
    }
    dp.chosen_index = index;
    dp.chosen_weight = w;
    Ok(dp)
}

/// `α = ceil(2 L_C) = ceil(2 w(Q_C) / Δ_C)` in exact integer arithmetic.
pub fn compute_alpha(c: &AlternatingComponent) -> Result<i64, ComponentError> {
    if c.value <= 0 {
        return Err(ComponentError::NotAugmenting(c.value));
    }
    let wq = c
        .norm_length
        .expect("augmenting components carry a normalized length")
        .num;
    Ok(ceil_div(2 * wq as i128, c.value as i128))
}

/// The fragments left after deleting one residue class from a component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubComponentSplit {
    pub sub_components: Vec<AlternatingComponent>,
    /// The removed class `D_i`.
    pub removed: Vec<EdgeId>,
    pub removed_weight: Weight,
}

impl SubComponentSplit {
    pub fn total_value(&self) -> Weight {
        self.sub_components.iter().map(|c| c.value).sum()
    }
}

/// Removes the chosen `D_i` from `c`, returning the resulting fragments.
///
/// Each fragment has at most `α` augmenting edges, and the fragment values
/// account exactly for the removal: `Σ_j Δ_{C_j} = Δ_C − w(D_i)`.
pub fn split_component(
    c: &AlternatingComponent,
    dp: &DeletionPartition,
    g: &WeightedGraph,
) -> SubComponentSplit {
    let removed: Vec<EdgeId> = dp.chosen().to_vec();
    let removed_set: std::collections::HashSet<EdgeId> = removed.iter().copied().collect();
    let aug_set: std::collections::HashSet<EdgeId> = c.aug_edges.iter().copied().collect();

    // Work on the labeled ordering so cycle rotation matches the partition.
    let lc = label_edges(c, g);
    let ordered = &lc.ordered_edges;

    let mut fragments: Vec<Vec<EdgeId>> = Vec::new();
    if removed.is_empty() {
        fragments.push(ordered.clone());
    } else {
        match c.shape {
            Shape::Path => {
                let mut run = Vec::new();
                for &id in ordered {
                    if removed_set.contains(&id) {
                        if !run.is_empty() {
                            fragments.push(std::mem::take(&mut run));
                        }
                    } else {
                        run.push(id);
                    }
                }
                if !run.is_empty() {
                    fragments.push(run);
                }
            }
            Shape::Cycle => {
                // Cut the cycle open at the first removed edge, then split
                // linearly; the leading run wraps around to the tail.
                let first_removed = ordered
                    .iter()
                    .position(|id| removed_set.contains(id))
                    .unwrap();
                let mut rotated = ordered.clone();
                rotated.rotate_left(first_removed);
                let mut run = Vec::new();
                for &id in &rotated {
                    if removed_set.contains(&id) {
                        if !run.is_empty() {
                            fragments.push(std::mem::take(&mut run));
                        }
                    } else {
                        run.push(id);
                    }
                }
                if !run.is_empty() {
                    fragments.push(run);
                }
            }
        }
    }

    let keep_cycle_shape = removed.is_empty() && c.shape == Shape::Cycle;
    let sub_components: Vec<AlternatingComponent> = fragments
        .into_iter()
        .map(|edges| {
            let shape = if keep_cycle_shape { Shape::Cycle } else { Shape::Path };
            AlternatingComponent::from_parts(shape, edges, |id| aug_set.contains(&id), g)
        })
        .collect();

    let split = SubComponentSplit {
        sub_components,
        removed,
        removed_weight: dp.chosen_weight,
    };
    // Exact accounting: fragment values plus the removed weight give Δ_C.
    assert_eq!(
        split.total_value() + split.removed_weight,
        c.value,
        "split accounting must balance"
    );
    debug_assert!(split
        .sub_components
        .iter()
        .all(|f| f.aug_edges.len() as i64 <= dp.alpha));
    split
}

/// Per-component record of what [`decompose_bounded`] removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimRecord {
    pub component: ComponentReport,
    pub alpha: i64,
    pub removed: Vec<EdgeId>,
    pub removed_weight: Weight,
}

/// Outcome of the bounded decomposition: the reduced heavy matching plus a
/// report of every trimmed component.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDecomposition {
    pub reduced: Matching,
    pub trims: Vec<TrimRecord>,
    /// `ceil(4/eps)`: no augmenting component of `m_l Δ reduced` is longer.
    pub max_edges: i64,
    pub removed_total: Weight,
}

/// Trims every long augmenting component of `m_l Δ m_h` so that the
/// remaining components have at most `ceil(4/eps)` edges while
/// `w(M'_H) >= (1 − eps/2) · w(m_h)`, both checked exactly.
pub fn decompose_bounded(
    m_l: &Matching,
    m_h: &Matching,
    g: &WeightedGraph,
    eps: Ratio,
) -> Result<BoundedDecomposition, ComponentError> {
    if !eps.is_proper() {
        return Err(ComponentError::BadEpsilon(eps));
    }
    let max_edges = eps.ceil_inverse_scaled(4);
    let alpha = eps.ceil_inverse_scaled(2);

    let mut reduced_ids = m_h.edge_set(g.edge_count());
    let mut trims = Vec::new();
    let mut removed_total: Weight = 0;
    for c in decompose(m_l, m_h, g) {
        if !c.is_augmenting() || (c.ordered_edges.len() as i64) <= max_edges {
            continue;
        }
        let lc = label_edges(&c, g);
        let dp = deletion_partition(&lc, alpha, g);
        for &id in dp.chosen() {
            reduced_ids.remove(id);
        }
        removed_total += dp.chosen_weight;
        trims.push(TrimRecord {
            component: c.report(),
            alpha,
            removed: dp.chosen().to_vec(),
            removed_weight: dp.chosen_weight,
        });
    }
    let reduced = Matching::validate(g, &reduced_ids)?;

    // (a) every augmenting component of the new difference is short
    debug_assert!(decompose(m_l, &reduced, g)
        .iter()
        .filter(|c| c.is_augmenting())
        .all(|c| c.ordered_edges.len() as i64 <= max_edges));
    // (b) w(M'_H) * 2den >= (2den − num) * w(m_h), exactly
    assert!(
        reduced.weight() as i128 * 2 * eps.den as i128
            >= (2 * eps.den - eps.num) as i128 * m_h.weight() as i128,
        "bounded decomposition lost more than eps/2 of the heavy matching"
    );

    Ok(BoundedDecomposition {
        reduced,
        trims,
        max_edges,
        removed_total,
    })
}
