//! The formation system: graph plus one interaction law per edge, with the
//! potential, its gradient flow and the exact second derivative.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::DynamicsError;
use crate::geometry::Configuration;
use crate::graph::{
    recover_henneberg, validate_targets, Edge, TargetDistances, TriangulatedLamanGraph,
};
use crate::laws::{InteractionLaw, Law, LawFamily};
use crate::scalar::Scalar;

/// Agents on the vertices of a triangulated Laman graph, one law per edge.
#[derive(Clone, Debug)]
pub struct FormationSystem<T: Scalar> {
    graph: TriangulatedLamanGraph,
    /// Indexed like `graph.edges()`.
    laws: Vec<Law<T>>,
}

impl<T: Scalar> FormationSystem<T> {
    /// Binds `laws` to the edges of `graph` and checks the targets satisfy the
    /// strict triangle inequalities on every 3-cycle.
    pub fn new(
        graph: TriangulatedLamanGraph,
        mut laws: BTreeMap<Edge, Law<T>>,
    ) -> Result<Self, DynamicsError> {
        let mut ordered = Vec::with_capacity(graph.edge_count());
        for e in graph.edges() {
            ordered.push(laws.remove(e).ok_or(DynamicsError::MissingLaw(*e))?);
        }
        let system = Self {
            graph,
            laws: ordered,
        };
        let violations = validate_targets(&system.graph, &system.targets())?;
        if !violations.is_empty() {
            return Err(DynamicsError::InvalidTargets(violations.len()));
        }
        Ok(system)
    }

    /// Every edge uses `family` with its own target.
    pub fn from_targets(
        graph: TriangulatedLamanGraph,
        family: LawFamily,
        targets: &TargetDistances<T>,
    ) -> Result<Self, DynamicsError> {
        let mut laws = BTreeMap::new();
        for e in graph.edges() {
            let d = targets
                .get(*e)
                .ok_or(crate::error::GraphError::MissingTarget(*e))?;
            laws.insert(
                *e,
                family
                    .instantiate(d)
                    .map_err(|_| crate::error::GraphError::NonPositiveTarget { edge: *e, value: d.as_f64() })?,
            );
        }
        Self::new(graph, laws)
    }

    /// Standard law with the same target on every edge.
    pub fn uniform_standard(graph: TriangulatedLamanGraph, target: T) -> Result<Self, DynamicsError> {
        let targets = TargetDistances::uniform(&graph, target)?;
        Self::from_targets(graph, LawFamily::Standard, &targets)
    }

    #[inline]
    pub fn graph(&self) -> &TriangulatedLamanGraph {
        &self.graph
    }

    #[inline]
    pub fn agent_count(&self) -> usize {
        self.graph.vertex_count()
    }

    #[inline]
    pub fn laws(&self) -> &[Law<T>] {
        &self.laws
    }

    pub fn law(&self, edge: Edge) -> Option<&Law<T>> {
        self.graph.edge_slot(edge).map(|s| &self.laws[s])
    }

    pub fn targets(&self) -> TargetDistances<T> {
        TargetDistances::new(
            self.graph
                .edges()
                .iter()
                .zip(&self.laws)
                .map(|(e, l)| (*e, l.target()))
                .collect(),
        )
        .expect("laws carry positive targets")
    }

    /// Subsystem induced by an edge subset that forms a triangulated Laman
    /// graph. Returns the subsystem (relabeled in Henneberg order) and the
    /// original agent of each relabeled vertex.
    pub fn induced(&self, edges: &[Edge]) -> Option<(FormationSystem<T>, Vec<usize>)> {
        let mut vertices: Vec<usize> = edges.iter().flat_map(|e| [e.lo(), e.hi()]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        let rec = recover_henneberg(&vertices, edges)?;
        let graph = rec.graph();
        let mut laws = BTreeMap::new();
        for e in graph.edges() {
            let original = Edge::new(rec.labels[e.lo()], rec.labels[e.hi()]);
            laws.insert(*e, self.law(original)?.clone());
        }
        let sub = FormationSystem::new(graph, laws).ok()?;
        Some((sub, rec.labels))
    }

    fn check(&self, p: &Configuration<T>) -> Result<(), DynamicsError> {
        p.check_len(self.agent_count())?;
        match p.collision(&self.graph) {
            Some(e) => Err(DynamicsError::Collision(e)),
            None => Ok(()),
        }
    }

    /// `Φ(p) = Σ_edges ∫_1^{d_ij} t f_ij(t) dt`.
    pub fn potential(&self, p: &Configuration<T>) -> Result<T, DynamicsError> {
        self.check(p)?;
        Ok(self
            .graph
            .edges()
            .iter()
            .zip(&self.laws)
            .fold(T::zero(), |acc, (e, law)| {
                acc + law.edge_potential(p.distance(e.lo(), e.hi()))
            }))
    }

    /// Agent velocities `ẋ_i = Σ_j f_ij(d_ij)(x_j − x_i) = −∇_i Φ`.
    pub fn vector_field(&self, p: &Configuration<T>) -> Result<Vec<Vector2<T>>, DynamicsError> {
        self.check(p)?;
        Ok(self.vector_field_unchecked(p))
    }

    pub(crate) fn vector_field_unchecked(&self, p: &Configuration<T>) -> Vec<Vector2<T>> {
        let mut v = vec![Vector2::zeros(); self.agent_count()];
        for (e, law) in self.graph.edges().iter().zip(&self.laws) {
            let (i, j) = (e.lo(), e.hi());
            let diff = p.point(j) - p.point(i);
            let push = diff * law.gain(diff.norm());
            v[i] += push;
            v[j] -= push;
        }
        v
    }

    /// `∇Φ` flattened as `(x_1, y_1, …)`.
    pub fn gradient(&self, p: &Configuration<T>) -> Result<Vec<T>, DynamicsError> {
        Ok(self
            .vector_field(p)?
            .iter()
            .flat_map(|v| [-v.x, -v.y])
            .collect())
    }

    /// `‖∇Φ(p)‖_∞`.
    pub fn residual(&self, p: &Configuration<T>) -> Result<T, DynamicsError> {
        Ok(self
            .vector_field(p)?
            .iter()
            .fold(T::zero(), |m, v| m.max(v.x.abs()).max(v.y.abs())))
    }

    /// `∇²Φ(p)` in interleaved coordinates. Each edge contributes the block
    /// `K = f(d) I + (f'(d)/d) δδᵀ`, `δ = x_i − x_j`, with `+K` on the
    /// diagonal blocks and `−K` off the diagonal.
    pub fn potential_hessian(&self, p: &Configuration<T>) -> Result<DMatrix<T>, DynamicsError> {
        self.check(p)?;
        let n = self.agent_count();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for (e, law) in self.graph.edges().iter().zip(&self.laws) {
            let (i, j) = (e.lo(), e.hi());
            let delta = p.point(i) - p.point(j);
            let d = delta.norm();
            let k = Matrix2::identity() * law.gain(d)
                + delta * delta.transpose() * (law.gain_derivative(d) / d);
            for (a, b, sign) in [(i, i, T::one()), (j, j, T::one()), (i, j, -T::one()), (j, i, -T::one())] {
                for r in 0..2 {
                    for c in 0..2 {
                        h[(2 * a + r, 2 * b + c)] += sign * k[(r, c)];
                    }
                }
            }
        }
        Ok(h)
    }
}
