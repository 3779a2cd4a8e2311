//! Triangulated Laman graphs and their Henneberg (vertex-add) constructions.
//!
//! Vertices are numbered from zero in order of appearance: the base edge is
//! `(0, 1)` and step `i` introduces vertex `i + 2`. Text files and reports use
//! one-based labels; conversion happens in the `io` module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::scalar::Scalar;

/// Undirected edge with endpoints stored in increasing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(usize, usize);

impl Edge {
    /// Panics on self-loops.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop edge ({a}, {a})");
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    #[inline]
    pub fn lo(self) -> usize {
        self.0
    }

    #[inline]
    pub fn hi(self) -> usize {
        self.1
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }

    pub fn other(self, v: usize) -> Option<usize> {
        if self.0 == v {
            Some(self.1)
        } else if self.1 == v {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0 + 1, self.1 + 1)
    }
}

/// One vertex-add operation: `new_vertex` joins both endpoints of `parent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HennebergStep {
    pub new_vertex: usize,
    pub parent: (usize, usize),
}

impl HennebergStep {
    pub fn new(new_vertex: usize, j: usize, k: usize) -> Self {
        Self {
            new_vertex,
            parent: (j, k),
        }
    }

    pub fn parent_edge(&self) -> Edge {
        Edge::new(self.parent.0, self.parent.1)
    }
}

impl fmt::Display for HennebergStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> ({},{})",
            self.new_vertex + 1,
            self.parent.0 + 1,
            self.parent.1 + 1
        )
    }
}

/// A graph built from edge `(0,1)` by vertex-add steps onto existing edges.
///
/// Immutable once built; edges are kept in lexicographic order, which is the
/// order used by every per-edge vector in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangulatedLamanGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    steps: Vec<HennebergStep>,
    neighbors: Vec<Vec<usize>>,
    edge_slots: HashMap<Edge, usize>,
}

impl TriangulatedLamanGraph {
    /// Base graph: two vertices joined by one edge.
    pub fn base() -> Self {
        Self::build(&[]).expect("base graph is always valid")
    }

    /// Builds the graph from a Henneberg step sequence.
    pub fn build(steps: &[HennebergStep]) -> Result<Self, GraphError> {
        let mut edges = BTreeSet::new();
        edges.insert(Edge::new(0, 1));
        for (index, step) in steps.iter().enumerate() {
            let malformed = |reason: String| GraphError::MalformedStep {
                index,
                step: *step,
                reason,
            };
            let expected = index + 2;
            if step.new_vertex != expected {
                return Err(malformed(format!(
                    "vertex {} out of order, expected {}",
                    step.new_vertex + 1,
                    expected + 1
                )));
            }
            let (j, k) = step.parent;
            if j == k {
                return Err(malformed("parent endpoints coincide".into()));
            }
            for v in [j, k] {
                if v >= step.new_vertex {
                    return Err(malformed(format!("vertex {} not yet present", v + 1)));
                }
            }
            if !edges.contains(&Edge::new(j, k)) {
                return Err(malformed(format!(
                    "parent edge {} absent",
                    Edge::new(j, k)
                )));
            }
            edges.insert(Edge::new(j, step.new_vertex));
            edges.insert(Edge::new(k, step.new_vertex));
        }
        let vertex_count = steps.len() + 2;
        let edges: Vec<Edge> = edges.into_iter().collect();
        let mut neighbors = vec![Vec::new(); vertex_count];
        for e in &edges {
            neighbors[e.lo()].push(e.hi());
            neighbors[e.hi()].push(e.lo());
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let edge_slots = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Ok(Self {
            vertex_count,
            edges,
            steps: steps.to_vec(),
            neighbors,
            edge_slots,
        })
    }

    /// Random construction with a uniformly chosen parent edge per step.
    pub fn random<R: Rng + ?Sized>(vertex_count: usize, rng: &mut R) -> Result<Self, GraphError> {
        if vertex_count < 2 {
            return Err(GraphError::TooFewVertices(vertex_count));
        }
        let mut edges = vec![Edge::new(0, 1)];
        let mut steps = Vec::with_capacity(vertex_count - 2);
        for v in 2..vertex_count {
            let parent = edges[rng.random_range(0..edges.len())];
            steps.push(HennebergStep::new(v, parent.lo(), parent.hi()));
            edges.push(Edge::new(parent.lo(), v));
            edges.push(Edge::new(parent.hi(), v));
        }
        Self::build(&steps)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn steps(&self) -> &[HennebergStep] {
        &self.steps
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edge_slots.contains_key(&Edge::new(a, b))
    }

    /// Position of `edge` in [`Self::edges`].
    pub fn edge_slot(&self, edge: Edge) -> Option<usize> {
        self.edge_slots.get(&edge).copied()
    }

    /// All vertex triples forming a 3-cycle, in lexicographic order.
    pub fn three_cycles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for e in &self.edges {
            let (i, j) = (e.lo(), e.hi());
            for &k in &self.neighbors[j] {
                if k > j && self.has_edge(i, k) {
                    out.push([i, j, k]);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// A Henneberg sequence recovered from an arbitrary edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredConstruction {
    /// Steps in the relabeled (appearance-order) numbering.
    pub steps: Vec<HennebergStep>,
    /// `labels[new] = original` vertex for every relabeled vertex.
    pub labels: Vec<usize>,
}

impl RecoveredConstruction {
    pub fn graph(&self) -> TriangulatedLamanGraph {
        TriangulatedLamanGraph::build(&self.steps).expect("recovered steps are well formed")
    }
}

/// Recovers a Henneberg sequence by repeatedly peeling off the smallest
/// degree-2 vertex whose neighbours are adjacent. Returns `None` when the
/// graph is not triangulated Laman.
pub fn recover_henneberg(vertices: &[usize], edges: &[Edge]) -> Option<RecoveredConstruction> {
    recover_henneberg_with(vertices, edges, |candidates| {
        *candidates.iter().min().expect("non-empty candidate list")
    })
}

/// Like [`recover_henneberg`] but `choose` picks which removable vertex to
/// peel next from the current candidates.
pub fn recover_henneberg_with<F>(
    vertices: &[usize],
    edges: &[Edge],
    mut choose: F,
) -> Option<RecoveredConstruction>
where
    F: FnMut(&[usize]) -> usize,
{
    let vertex_set: BTreeSet<usize> = vertices.iter().copied().collect();
    let n = vertex_set.len();
    if n < 2 || n != vertices.len() {
        return None;
    }
    let edge_set: BTreeSet<Edge> = edges.iter().copied().collect();
    if edge_set.len() != edges.len() || edge_set.len() != 2 * n - 3 {
        return None;
    }
    let mut adjacency: BTreeMap<usize, BTreeSet<usize>> =
        vertex_set.iter().map(|&v| (v, BTreeSet::new())).collect();
    for e in &edge_set {
        if !vertex_set.contains(&e.lo()) || !vertex_set.contains(&e.hi()) {
            return None;
        }
        adjacency.get_mut(&e.lo())?.insert(e.hi());
        adjacency.get_mut(&e.hi())?.insert(e.lo());
    }

    let mut removed: Vec<(usize, usize, usize)> = Vec::with_capacity(n - 2);
    while adjacency.len() > 2 {
        let candidates: Vec<usize> = adjacency
            .iter()
            .filter_map(|(&v, nbrs)| {
                if nbrs.len() != 2 {
                    return None;
                }
                let mut it = nbrs.iter();
                let (a, b) = (*it.next()?, *it.next()?);
                adjacency[&a].contains(&b).then_some(v)
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let v = choose(&candidates);
        if !candidates.contains(&v) {
            return None;
        }
        let nbrs = adjacency.remove(&v)?;
        let mut it = nbrs.iter();
        let (a, b) = (*it.next()?, *it.next()?);
        adjacency.get_mut(&a)?.remove(&v);
        adjacency.get_mut(&b)?.remove(&v);
        removed.push((v, a, b));
    }
    let mut rest = adjacency.keys().copied();
    let (r0, r1) = (rest.next()?, rest.next()?);
    if !adjacency[&r0].contains(&r1) {
        return None;
    }

    let mut labels = vec![r0, r1];
    let mut relabel: HashMap<usize, usize> = HashMap::from([(r0, 0), (r1, 1)]);
    let mut steps = Vec::with_capacity(removed.len());
    for (v, a, b) in removed.into_iter().rev() {
        let new = labels.len();
        labels.push(v);
        relabel.insert(v, new);
        steps.push(HennebergStep::new(new, relabel[&a], relabel[&b]));
    }
    Some(RecoveredConstruction { steps, labels })
}

/// Target distance per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDistances<T> {
    values: BTreeMap<Edge, T>,
}

impl<T: Scalar> TargetDistances<T> {
    pub fn new(values: BTreeMap<Edge, T>) -> Result<Self, GraphError> {
        for (edge, d) in &values {
            if !(*d > T::zero()) || !d.is_finite() {
                return Err(GraphError::NonPositiveTarget {
                    edge: *edge,
                    value: d.as_f64(),
                });
            }
        }
        Ok(Self { values })
    }

    /// Same target on every edge of `graph`.
    pub fn uniform(graph: &TriangulatedLamanGraph, d: T) -> Result<Self, GraphError> {
        Self::new(graph.edges().iter().map(|e| (*e, d)).collect())
    }

    pub fn get(&self, edge: Edge) -> Option<T> {
        self.values.get(&edge).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, T)> + '_ {
        self.values.iter().map(|(e, d)| (*e, *d))
    }

    pub fn max(&self) -> T {
        self.values.values().fold(T::zero(), |m, d| m.max(*d))
    }
}

/// A 3-cycle whose targets break a strict triangle inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleViolation {
    pub cycle: [usize; 3],
    /// Target lengths of edges (i,j), (i,k), (j,k).
    pub lengths: [f64; 3],
}

impl fmt::Display for TriangleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k] = self.cycle;
        write!(
            f,
            "3-cycle ({},{},{}) violates strict triangle inequalities: d{}{}={}, d{}{}={}, d{}{}={}",
            i + 1,
            j + 1,
            k + 1,
            i + 1,
            j + 1,
            self.lengths[0],
            i + 1,
            k + 1,
            self.lengths[1],
            j + 1,
            k + 1,
            self.lengths[2]
        )
    }
}

/// Lists every 3-cycle whose targets fail a strict triangle inequality.
/// An empty list means the targets are admissible.
pub fn validate_targets<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    targets: &TargetDistances<T>,
) -> Result<Vec<TriangleViolation>, GraphError> {
    for e in graph.edges() {
        if targets.get(*e).is_none() {
            return Err(GraphError::MissingTarget(*e));
        }
    }
    let mut violations = Vec::new();
    for cycle in graph.three_cycles() {
        let [i, j, k] = cycle;
        let dij = targets.get(Edge::new(i, j)).expect("checked above");
        let dik = targets.get(Edge::new(i, k)).expect("checked above");
        let djk = targets.get(Edge::new(j, k)).expect("checked above");
        let strict = dij + dik > djk && dij + djk > dik && dik + djk > dij;
        if !strict {
            violations.push(TriangleViolation {
                cycle,
                lengths: [dij.as_f64(), dik.as_f64(), djk.as_f64()],
            });
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn five_agent_steps() -> Vec<HennebergStep> {
        vec![
            HennebergStep::new(2, 0, 1),
            HennebergStep::new(3, 0, 2),
            HennebergStep::new(4, 2, 3),
        ]
    }

    #[test]
    fn empty_steps_give_base_edge() {
        let g = TriangulatedLamanGraph::build(&[]).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges(), &[Edge::new(0, 1)]);
        assert!(g.three_cycles().is_empty());
    }

    #[test]
    fn figure_one_graph() {
        let g = TriangulatedLamanGraph::build(&five_agent_steps()).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 7);
        assert_eq!(g.three_cycles(), vec![[0, 1, 2], [0, 2, 3], [2, 3, 4]]);
    }

    #[test]
    fn triangle_has_one_cycle() {
        let g = TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 1)]).unwrap();
        assert_eq!(g.three_cycles(), vec![[0, 1, 2]]);
    }

    #[test]
    fn step_referencing_future_vertex_fails() {
        let err = TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 3)]).unwrap_err();
        match err {
            GraphError::MalformedStep { index, reason, .. } => {
                assert_eq!(index, 0);
                assert!(reason.contains("not yet present"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_on_missing_edge_fails() {
        // after triangle, edge (1,3)... then vertex 4 on (1,2) ok, but (3,4) is absent before vertex 5 exists
        let steps = [HennebergStep::new(2, 0, 1), HennebergStep::new(3, 1, 2), HennebergStep::new(4, 0, 3)];
        let err = TriangulatedLamanGraph::build(&steps).unwrap_err();
        assert!(matches!(err, GraphError::MalformedStep { index: 2, .. }));
    }

    #[test]
    fn out_of_order_vertex_fails() {
        let err = TriangulatedLamanGraph::build(&[HennebergStep::new(3, 0, 1)]).unwrap_err();
        assert!(matches!(err, GraphError::MalformedStep { index: 0, .. }));
    }

    #[test]
    fn recover_figure_one() {
        let g = TriangulatedLamanGraph::build(&five_agent_steps()).unwrap();
        let vertices: Vec<usize> = (0..5).collect();
        let rec = recover_henneberg(&vertices, g.edges()).expect("triangulated Laman");
        assert_eq!(rec.steps.len(), 3);
        let rebuilt = rec.graph();
        let mapped: BTreeSet<Edge> = rebuilt
            .edges()
            .iter()
            .map(|e| Edge::new(rec.labels[e.lo()], rec.labels[e.hi()]))
            .collect();
        assert_eq!(mapped, g.edges().iter().copied().collect());
    }

    #[test]
    fn recover_rejects_four_cycle_and_k4() {
        let square = [Edge::new(0, 1), Edge::new(1, 2), Edge::new(2, 3), Edge::new(0, 3)];
        assert!(recover_henneberg(&[0, 1, 2, 3], &square).is_none());
        let k4: Vec<Edge> = (0..4)
            .flat_map(|a| (a + 1..4).map(move |b| Edge::new(a, b)))
            .collect();
        assert_eq!(k4.len(), 6);
        assert!(recover_henneberg(&[0, 1, 2, 3], &k4).is_none());
    }

    #[test]
    fn recover_rejects_laman_graph_that_is_not_triangulated() {
        // K_{3,3} minus... use the triangular prism minus one rung: 6 vertices, 9 edges, Laman
        // but every vertex has degree 3.
        let prism = [
            Edge::new(0, 1),
            Edge::new(1, 2),
            Edge::new(0, 2),
            Edge::new(3, 4),
            Edge::new(4, 5),
            Edge::new(3, 5),
            Edge::new(0, 3),
            Edge::new(1, 4),
            Edge::new(2, 5),
        ];
        assert!(recover_henneberg(&[0, 1, 2, 3, 4, 5], &prism).is_none());
    }

    #[test]
    fn recover_on_arbitrary_labels() {
        let edges = [Edge::new(7, 9), Edge::new(9, 4), Edge::new(4, 7)];
        let rec = recover_henneberg(&[4, 7, 9], &edges).unwrap();
        assert_eq!(rec.labels.len(), 3);
        assert_eq!(rec.steps, vec![HennebergStep::new(2, 0, 1)]);
    }

    #[test]
    fn validate_targets_cases() {
        let g = TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 1)]).unwrap();
        let equi = TargetDistances::uniform(&g, 1.0).unwrap();
        assert!(validate_targets(&g, &equi).unwrap().is_empty());

        for d23 in [2.0, 3.0] {
            let t = TargetDistances::new(BTreeMap::from([
                (Edge::new(0, 1), 1.0),
                (Edge::new(0, 2), 1.0),
                (Edge::new(1, 2), d23),
            ]))
            .unwrap();
            let v = validate_targets(&g, &t).unwrap();
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].cycle, [0, 1, 2]);
        }
    }

    #[test]
    fn validate_targets_missing_edge() {
        let g = TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 1)]).unwrap();
        let t = TargetDistances::new(BTreeMap::from([(Edge::new(0, 1), 1.0), (Edge::new(0, 2), 1.0)]))
            .unwrap();
        assert_eq!(
            validate_targets(&g, &t).unwrap_err(),
            GraphError::MissingTarget(Edge::new(1, 2))
        );
    }

    #[test]
    fn non_positive_target_rejected() {
        let err = TargetDistances::new(BTreeMap::from([(Edge::new(0, 1), 0.0)])).unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveTarget { .. }));
    }

    #[test]
    fn random_graphs_are_deterministic() {
        let a = TriangulatedLamanGraph::random(6, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = TriangulatedLamanGraph::random(6, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 9);
    }
}
