//! Independent partition of the edge set of a framework: edges grouped by
//! alignment along the Henneberg construction.

use std::collections::BTreeSet;

use nalgebra::Vector2;

use crate::error::DynamicsError;
use crate::geometry::{collinearity_measure, line_deviation, Configuration};
use crate::graph::{Edge, RecoveredConstruction, TriangulatedLamanGraph};
use crate::scalar::Scalar;
use crate::system::FormationSystem;

/// Disjoint edge blocks covering the graph. Blocks are listed in the order
/// they are created; edges inside a block are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependentPartition {
    pub blocks: Vec<Vec<Edge>>,
    /// Henneberg steps whose alignment measure fell within a factor of ten
    /// of the tolerance.
    pub fragile_steps: Vec<usize>,
}

impl IndependentPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_fragile(&self) -> bool {
        !self.fragile_steps.is_empty()
    }

    /// Order-independent form for comparisons.
    pub fn canonical(&self) -> BTreeSet<BTreeSet<Edge>> {
        self.blocks
            .iter()
            .map(|b| b.iter().copied().collect())
            .collect()
    }

    /// True when every block of `finer` lies inside a block of `self`.
    pub fn is_coarsening_of(&self, finer: &[Vec<Edge>]) -> bool {
        let owner = |e: &Edge| self.blocks.iter().position(|b| b.contains(e));
        finer.iter().all(|block| {
            let first = block.first().and_then(owner);
            first.is_some() && block.iter().all(|e| owner(e) == first)
        })
    }

    pub fn subframeworks<T: Scalar>(&self, p: &Configuration<T>) -> Vec<Subframework<T>> {
        self.blocks
            .iter()
            .map(|edges| Subframework::new(edges.clone(), p))
            .collect()
    }
}

/// One block `(G_i, p_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subframework<T: Scalar> {
    pub edges: Vec<Edge>,
    /// Incident vertices, sorted.
    pub vertices: Vec<usize>,
    /// Positions of `vertices`, in the same order.
    pub configuration: Configuration<T>,
}

impl<T: Scalar> Subframework<T> {
    fn new(edges: Vec<Edge>, p: &Configuration<T>) -> Self {
        let mut vertices: Vec<usize> = edges.iter().flat_map(|e| [e.lo(), e.hi()]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        let configuration = p.select(&vertices);
        Self {
            edges,
            vertices,
            configuration,
        }
    }

    /// Unit direction of the block's line, from its two farthest points.
    pub fn direction(&self) -> Vector2<T> {
        let pts = self.configuration.points();
        let mut best = (Vector2::new(T::one(), T::zero()), T::zero());
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = pts[j] - pts[i];
                if d.norm_squared() > best.1 {
                    best = (d, d.norm_squared());
                }
            }
        }
        let mut dir = best.0.normalize();
        // fix the sign: first nonzero component positive
        if dir.x < T::zero() || (dir.x == T::zero() && dir.y < T::zero()) {
            dir = -dir;
        }
        dir
    }

    pub fn line_deviation(&self) -> T {
        line_deviation(self.configuration.points())
    }
}

/// Runs the partition along the graph's own Henneberg steps: the base edge
/// starts one block; each step either joins its two new edges to the parent
/// edge's block (new vertex aligned with the parent edge) or opens two
/// singleton blocks.
pub fn independent_partition<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    p: &Configuration<T>,
    collinearity_tol: T,
) -> IndependentPartition {
    let mut block_of: Vec<(Edge, usize)> = vec![(Edge::new(0, 1), 0)];
    let mut blocks: Vec<Vec<Edge>> = vec![vec![Edge::new(0, 1)]];
    let mut fragile_steps = Vec::new();
    let lo = collinearity_tol / T::lit(10.0);
    let hi = collinearity_tol * T::lit(10.0);
    for (index, step) in graph.steps().iter().enumerate() {
        let (j, k) = step.parent;
        let v = step.new_vertex;
        let measure = collinearity_measure(&p.point(j), &p.point(k), &p.point(v));
        if measure >= lo && measure <= hi {
            fragile_steps.push(index);
        }
        let (a, b) = (Edge::new(j, v), Edge::new(k, v));
        if measure < collinearity_tol {
            let parent = step.parent_edge();
            let owner = block_of
                .iter()
                .find(|(e, _)| *e == parent)
                .map(|(_, b)| *b)
                .expect("parent edge already assigned");
            blocks[owner].extend([a, b]);
            block_of.extend([(a, owner), (b, owner)]);
        } else {
            for e in [a, b] {
                block_of.push((e, blocks.len()));
                blocks.push(vec![e]);
            }
        }
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    IndependentPartition {
        blocks,
        fragile_steps,
    }
}

/// Partition computed along another Henneberg construction of the same
/// graph, reported in the original vertex labels.
pub fn independent_partition_along<T: Scalar>(
    construction: &RecoveredConstruction,
    p: &Configuration<T>,
    collinearity_tol: T,
) -> IndependentPartition {
    let graph = construction.graph();
    let relabeled = p.select(&construction.labels);
    let mut part = independent_partition(&graph, &relabeled, collinearity_tol);
    let map = |e: &Edge| Edge::new(construction.labels[e.lo()], construction.labels[e.hi()]);
    for b in &mut part.blocks {
        *b = b.iter().map(map).collect();
        b.sort_unstable();
    }
    part
}

/// Checks that each block's configuration is an equilibrium of the
/// subsystem it induces, to ten times `tol`.
pub fn partition_is_equilibrium_compatible<T: Scalar>(
    system: &FormationSystem<T>,
    p: &Configuration<T>,
    partition: &IndependentPartition,
    tol: T,
) -> Result<bool, DynamicsError> {
    let residual = system.residual(p)?;
    if residual > tol {
        return Err(DynamicsError::NotEquilibrium {
            residual: residual.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    for block in &partition.blocks {
        let Some((sub, labels)) = system.induced(block) else {
            return Ok(false);
        };
        if sub.residual(&p.select(&labels))? > tol * T::lit(10.0) {
            return Ok(false);
        }
    }
    Ok(true)
}
