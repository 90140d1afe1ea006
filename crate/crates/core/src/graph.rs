//! Graph and matching data model: weighted simple graphs with per-edge
//! realization probabilities, matchings with exact integer weights, edge
//! bitsets, and symmetric differences of matchings.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

/// Dense edge index, `0..m`, stable for the lifetime of the graph.
pub type EdgeId = usize;

/// Integer edge weight. Non-negative by construction; the sum of all weights
/// in a graph fits in 63 bits, so every matching weight and weight
/// difference is exact in `i64`.
pub type Weight = i64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("probability {p} outside (0, 1] on edge ({u}, {v})")]
    BadProbability { u: usize, v: usize, p: f64 },
    #[error("total edge weight overflows 63 bits")]
    Overflow,
    #[error("negative weight {w} on edge ({u}, {v})")]
    NegativeWeight { u: usize, v: usize, w: i64 },
    #[error("endpoint {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge id {0} out of range")]
    EdgeOutOfRange(usize),
    #[error("edges {0} and {1} share vertex {2}")]
    NotAMatching(EdgeId, EdgeId, usize),
    #[error("edge list I/O: {0}")]
    Io(String),
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub u: usize,
    pub v: usize,
    pub w: Weight,
    pub p: f64,
}

impl Edge {
    pub fn other(&self, vertex: usize) -> usize {
        if vertex == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Simple undirected graph with non-negative integer weights and per-edge
/// realization probabilities in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph from `(u, v, w, p)` tuples; edge ids follow input order.
    pub fn build(n: usize, edge_list: &[(usize, usize, Weight, f64)]) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut seen = std::collections::HashSet::with_capacity(edge_list.len());
        let mut total: i64 = 0;
        for (id, &(u, v, w, p)) in edge_list.iter().enumerate() {
            if u >= n {
                return Err(GraphError::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if w < 0 {
                return Err(GraphError::NegativeWeight { u, v, w });
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::BadProbability { u, v, p });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            total = total.checked_add(w).ok_or(GraphError::Overflow)?;
            edges.push(Edge { id, u, v, w, p });
        }
        Ok(WeightedGraph { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn weight_of(&self, ids: impl IntoIterator<Item = EdgeId>) -> Weight {
        ids.into_iter().map(|id| self.edges[id].w).sum()
    }

    /// Minimum realization probability over all edges; 1.0 for empty graphs.
    pub fn p_min(&self) -> f64 {
        self.edges.iter().map(|e| e.p).fold(1.0, f64::min)
    }

    /// The full edge set as a bitset.
    pub fn all_edges(&self) -> EdgeSet {
        let mut s = EdgeSet::new(self.edge_count());
        for e in &self.edges {
            s.insert(e.id);
        }
        s
    }

    /// Replaces every edge probability with `p`.
    pub fn with_uniform_p(&self, p: f64) -> Result<Self, GraphError> {
        let list: Vec<_> = self.edges.iter().map(|e| (e.u, e.v, e.w, p)).collect();
        WeightedGraph::build(self.n, &list)
    }
}

/// Fixed-capacity bitset over edge ids `0..m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    nbits: usize,
    blocks: Vec<u64>,
}

impl EdgeSet {
    pub fn new(nbits: usize) -> Self {
        EdgeSet {
            nbits,
            blocks: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn from_ids(nbits: usize, ids: &[EdgeId]) -> Self {
        let mut s = EdgeSet::new(nbits);
        for &id in ids {
            s.insert(id);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.nbits
    }

    pub fn insert(&mut self, id: EdgeId) {
        assert!(id < self.nbits, "edge id {id} out of range");
        self.blocks[id / 64] |= 1 << (id % 64);
    }

    pub fn remove(&mut self, id: EdgeId) {
        assert!(id < self.nbits, "edge id {id} out of range");
        self.blocks[id / 64] &= !(1 << (id % 64));
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        id < self.nbits && self.blocks[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn subtract(&mut self, other: &EdgeSet) {
        assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= !b;
        }
    }

    pub fn intersect_with(&mut self, other: &EdgeSet) {
        assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &EdgeSet) -> EdgeSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        let mut s = self.clone();
        s.subtract(other);
        s
    }

    pub fn complement(&self) -> EdgeSet {
        let mut s = EdgeSet::new(self.nbits);
        for (a, b) in s.blocks.iter_mut().zip(&self.blocks) {
            *a = !b;
        }
        if self.nbits % 64 != 0 {
            if let Some(last) = s.blocks.last_mut() {
                *last &= (1u64 << (self.nbits % 64)) - 1;
            }
        }
        s
    }

    pub fn is_subset_of(&self, other: &EdgeSet) -> bool {
        assert_eq!(self.nbits, other.nbits);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    /// Ascending iteration over member ids.
    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut bits = block;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(bi * 64 + tz)
                }
            })
        })
    }

    pub fn to_ids(&self) -> Vec<EdgeId> {
        self.iter().collect()
    }
}

/// A vertex-disjoint set of edges with its exact total weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    edge_ids: Vec<EdgeId>,
    weight: Weight,
}

impl Matching {
    pub fn empty() -> Self {
        Matching {
            edge_ids: Vec::new(),
            weight: 0,
        }
    }

    /// Validates that `ids` form a matching in `g` and computes the weight.
    pub fn validate(g: &WeightedGraph, ids: &EdgeSet) -> Result<Self, GraphError> {
        let mut used = vec![usize::MAX; g.vertex_count()];
        let mut edge_ids = Vec::with_capacity(ids.len());
        let mut weight: i64 = 0;
        for id in ids.iter() {
            if id >= g.edge_count() {
                return Err(GraphError::EdgeOutOfRange(id));
            }
            let e = g.edge(id);
            for vertex in [e.u, e.v] {
                if used[vertex] != usize::MAX {
                    return Err(GraphError::NotAMatching(used[vertex], id, vertex));
                }
                used[vertex] = id;
            }
            weight += e.w;
            edge_ids.push(id);
        }
        Ok(Matching { edge_ids, weight })
    }

    /// Constructs from ids already known to be vertex-disjoint (solver
    /// output); checked in debug builds.
    pub(crate) fn from_disjoint_ids(g: &WeightedGraph, mut edge_ids: Vec<EdgeId>) -> Self {
        edge_ids.sort_unstable();
        let weight = g.weight_of(edge_ids.iter().copied());
        let m = Matching { edge_ids, weight };
        debug_assert!(Matching::validate(g, &m.edge_set(g.edge_count())).is_ok());
        m
    }

    pub fn edge_ids(&self) -> &[EdgeId] {
        &self.edge_ids
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.edge_ids.binary_search(&id).is_ok()
    }

    pub fn edge_set(&self, nbits: usize) -> EdgeSet {
        EdgeSet::from_ids(nbits, &self.edge_ids)
    }
}

/// Shape of a connected component of a symmetric difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Path,
    Cycle,
}

/// One connected component of `m_a Δ m_b`, edges in traversal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComponent {
    pub shape: Shape,
    pub edges: Vec<EdgeId>,
}

/// Decomposes `m_a Δ m_b` into its path and cycle components.
///
/// Both matchings must be valid in `g`. Every vertex of the difference has
/// degree at most 2, so components are simple paths or even cycles. Output
/// order is deterministic: components sorted by smallest contained edge id;
/// paths are traversed starting from the endpoint whose incident edge has
/// the smaller id; cycles start at the smallest-id edge belonging to `m_b`
/// and proceed toward the neighbor edge with the smaller id.
pub fn symmetric_difference(
    m_a: &Matching,
    m_b: &Matching,
    g: &WeightedGraph,
) -> Vec<RawComponent> {
    let m = g.edge_count();
    let set_a = m_a.edge_set(m);
    let set_b = m_b.edge_set(m);
    let mut diff = set_a.union(&set_b);
    diff.subtract(&set_a.intersection(&set_b));

    // Incidence lists restricted to the difference; degree <= 2 everywhere.
    let mut incident: Vec<Vec<EdgeId>> = vec![Vec::new(); g.vertex_count()];
    for id in diff.iter() {
        let e = g.edge(id);
        incident[e.u].push(id);
        incident[e.v].push(id);
    }
    debug_assert!(incident.iter().all(|l| l.len() <= 2));

    let mut visited = EdgeSet::new(m);
    let mut components = Vec::new();

    let walk = |start_vertex: usize,
                first_edge: EdgeId,
                visited: &mut EdgeSet,
                incident: &Vec<Vec<EdgeId>>| {
        let mut edges = vec![first_edge];
        visited.insert(first_edge);
        let mut vertex = g.edge(first_edge).other(start_vertex);
        loop {
            let next = incident[vertex].iter().copied().find(|&e| !visited.contains(e));
            match next {
                Some(e) => {
                    visited.insert(e);
                    edges.push(e);
                    vertex = g.edge(e).other(vertex);
                }
                None => break,
            }
        }
        edges
    };

    // Paths first: walk from degree-1 vertices.
    for id in diff.iter() {
        if visited.contains(id) {
            continue;
        }
        let e = g.edge(id);
        for endpoint in [e.u, e.v] {
            if visited.contains(id) {
                break;
            }
            if incident[endpoint].len() == 1 {
                let edges = walk(endpoint, id, &mut visited, &incident);
                components.push(RawComponent {
                    shape: Shape::Path,
                    edges,
                });
            }
        }
    }

    // Remaining edges belong to cycles. Anchor each cycle at its smallest-id
    // edge from m_b; since ids are scanned in ascending order, the first
    // unvisited b-edge of a cycle is that anchor.
    for id in diff.iter() {
        if visited.contains(id) || !m_b.contains(id) {
            continue;
        }
        let e = g.edge(id);
        let next_u = incident[e.u].iter().copied().find(|&x| x != id).unwrap();
        let next_v = incident[e.v].iter().copied().find(|&x| x != id).unwrap();
        let start_vertex = if next_v < next_u { e.u } else { e.v };
        let edges = walk(start_vertex, id, &mut visited, &incident);
        debug_assert!(edges.len() % 2 == 0, "alternating cycles have even length");
        components.push(RawComponent {
            shape: Shape::Cycle,
            edges,
        });
    }

    debug_assert!(
        diff.iter().all(|id| visited.contains(id)),
        "b-free cycles are impossible in a symmetric difference of matchings"
    );

    components.sort_by_key(|c| c.edges.iter().copied().min().unwrap());
    components
}

/// Reads the edge-list text format.
///
/// First non-comment line must be `n <count> m <count>`; each following line
/// is `u v w p` with `p` optional when `default_p` is given. Lines starting
/// with `#` are ignored.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    default_p: Option<f64>,
) -> Result<WeightedGraph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| GraphError::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: &str| GraphError::Parse {
            line: lineno + 1,
            msg: msg.to_string(),
        };
        match header {
            None => {
                if fields.len() != 4 || fields[0] != "n" || fields[2] != "m" {
                    return Err(parse_err("expected header `n <count> m <count>`"));
                }
                let n = fields[1].parse().map_err(|_| parse_err("bad vertex count"))?;
                let m = fields[3].parse().map_err(|_| parse_err("bad edge count"))?;
                header = Some((n, m));
            }
            Some(_) => {
                if fields.len() != 3 && fields.len() != 4 {
                    return Err(parse_err("expected `u v w [p]`"));
                }
                let u = fields[0].parse().map_err(|_| parse_err("bad endpoint"))?;
                let v = fields[1].parse().map_err(|_| parse_err("bad endpoint"))?;
                let w = fields[2].parse().map_err(|_| parse_err("bad weight"))?;
                let p = if fields.len() == 4 {
                    fields[3].parse().map_err(|_| parse_err("bad probability"))?
                } else {
                    default_p.ok_or_else(|| {
                        parse_err("edge has no probability and no default was supplied")
                    })?
                };
                edges.push((u, v, w, p));
            }
        }
    }
    let (n, m) = header.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing header".to_string(),
    })?;
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 0,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::build(n, &edges)
}

/// Writes the edge-list text format accepted by [`read_edge_list`].
pub fn write_edge_list<W: Write>(w: &mut W, g: &WeightedGraph) -> std::io::Result<()> {
    let mut out = String::new();
    writeln!(out, "n {} m {}", g.vertex_count(), g.edge_count()).unwrap();
    for e in g.edges() {
        writeln!(out, "{} {} {} {}", e.u, e.v, e.w, e.p).unwrap();
    }
    w.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, list: &[(usize, usize, i64, f64)]) -> WeightedGraph {
        WeightedGraph::build(n, list).unwrap()
    }

    #[test]
    fn build_empty() {
        let g = graph(0, &[]);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn build_single_edge() {
        let g = graph(2, &[(0, 1, 10, 0.5)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0).w, 10);
    }

    #[test]
    fn build_rejects_duplicates() {
        let err = WeightedGraph::build(3, &[(0, 1, 5, 0.5), (1, 2, 5, 0.5), (0, 1, 7, 0.5)])
            .unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(0, 1));
        // reversed orientation is the same unordered pair
        let err = WeightedGraph::build(2, &[(0, 1, 5, 0.5), (1, 0, 7, 0.5)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(1, 0));
    }

    #[test]
    fn build_rejects_self_loop_bad_p_overflow() {
        assert_eq!(
            WeightedGraph::build(2, &[(1, 1, 3, 0.5)]).unwrap_err(),
            GraphError::SelfLoop(1)
        );
        assert!(matches!(
            WeightedGraph::build(2, &[(0, 1, 3, 0.0)]).unwrap_err(),
            GraphError::BadProbability { .. }
        ));
        assert!(matches!(
            WeightedGraph::build(2, &[(0, 1, 3, 1.5)]).unwrap_err(),
            GraphError::BadProbability { .. }
        ));
        assert_eq!(
            WeightedGraph::build(3, &[(0, 1, i64::MAX, 1.0), (1, 2, 1, 1.0)]).unwrap_err(),
            GraphError::Overflow
        );
    }

    #[test]
    fn validate_matching_cases() {
        // path a-b(5), b-c(8)
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let m = Matching::validate(&g, &EdgeSet::from_ids(2, &[0])).unwrap();
        assert_eq!(m.weight(), 5);
        let err = Matching::validate(&g, &EdgeSet::from_ids(2, &[0, 1])).unwrap_err();
        assert_eq!(err, GraphError::NotAMatching(0, 1, 1));
        let empty = Matching::validate(&g, &EdgeSet::new(2)).unwrap();
        assert_eq!(empty.weight(), 0);
        assert!(empty.is_empty());
    }

    #[test]
    fn symdiff_path() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let ma = Matching::validate(&g, &EdgeSet::from_ids(2, &[0])).unwrap();
        let mb = Matching::validate(&g, &EdgeSet::from_ids(2, &[1])).unwrap();
        let comps = symmetric_difference(&ma, &mb, &g);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].shape, Shape::Path);
        assert_eq!(comps[0].edges, vec![0, 1]);
    }

    #[test]
    fn symdiff_identical_is_empty() {
        let g = graph(3, &[(0, 1, 5, 0.5), (1, 2, 8, 0.5)]);
        let ma = Matching::validate(&g, &EdgeSet::from_ids(2, &[0])).unwrap();
        assert!(symmetric_difference(&ma, &ma, &g).is_empty());
    }

    #[test]
    fn symdiff_four_cycle() {
        // 4-cycle 0-1-2-3-0; m_a = {e0, e2}, m_b = {e1, e3}
        let g = graph(
            4,
            &[(0, 1, 1, 0.5), (1, 2, 1, 0.5), (2, 3, 1, 0.5), (3, 0, 1, 0.5)],
        );
        let ma = Matching::validate(&g, &EdgeSet::from_ids(4, &[0, 2])).unwrap();
        let mb = Matching::validate(&g, &EdgeSet::from_ids(4, &[1, 3])).unwrap();
        let comps = symmetric_difference(&ma, &mb, &g);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].shape, Shape::Cycle);
        assert_eq!(comps[0].edges.len(), 4);
        // anchored at the smallest-id m_b edge
        assert_eq!(comps[0].edges[0], 1);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = graph(3, &[(0, 1, 5, 0.25), (1, 2, 8, 1.0)]);
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        let back = read_edge_list(&buf[..], None).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_default_p_and_comments() {
        let text = "# comment\nn 2 m 1\n0 1 7\n";
        let g = read_edge_list(text.as_bytes(), Some(0.5)).unwrap();
        assert_eq!(g.edge(0).p, 0.5);
        assert!(read_edge_list(text.as_bytes(), None).is_err());
    }

    #[test]
    fn edge_set_ops() {
        let mut a = EdgeSet::from_ids(130, &[0, 64, 129]);
        let b = EdgeSet::from_ids(130, &[64]);
        assert!(b.is_subset_of(&a));
        a.subtract(&b);
        assert_eq!(a.to_ids(), vec![0, 129]);
        let c = a.complement();
        assert_eq!(c.len(), 128);
        assert!(!c.contains(129));
        assert!(c.contains(64));
    }
}
