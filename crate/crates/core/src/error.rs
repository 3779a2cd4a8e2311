use thiserror::Error;

use crate::graph::{Edge, HennebergStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("malformed Henneberg step #{} ({step}): {reason}", index + 1)]
    MalformedStep {
        index: usize,
        step: HennebergStep,
        reason: String,
    },
    #[error("no target distance for edge {0}")]
    MissingTarget(Edge),
    #[error("target distance for edge {edge} must be positive, got {value}")]
    NonPositiveTarget { edge: Edge, value: f64 },
    #[error("a triangulated Laman graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error("target distance must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("inverse-power exponent must be at least 1, got {0}")]
    BadExponent(f64),
    #[error("probe needs at least 2 strictly decreasing positive points, got {0}")]
    InsufficientProbe(usize),
    #[error("probe is not strictly decreasing and positive at position {0}")]
    MalformedProbe(usize),
    #[error("grid must be sorted, positive, and span [d̄/10, 10·d̄]")]
    GridTooNarrow,
    #[error("unknown law family `{0}`")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("configuration has {got} points, expected {expected}")]
    PointCount { expected: usize, got: usize },
    #[error("agents {} and {} coincide; gauge is undefined", .0 + 1, .1 + 1)]
    Gauge(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("adjacent agents on edge {0} coincide (outside the configuration space)")]
    Collision(Edge),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {0} has no interaction law")]
    MissingLaw(Edge),
    #[error("target distances violate triangle inequalities on {0} 3-cycle(s)")]
    InvalidTargets(usize),
    #[error("horizon must be positive")]
    BadHorizon,
    #[error("step size underflow at t = {time} (near-collision)")]
    StepUnderflow { time: f64 },
    #[error("Newton refinement did not converge (residual {residual:e})")]
    RefinementFailed { residual: f64 },
    #[error("configuration is not an equilibrium (residual {residual:e} > {tolerance:e})")]
    NotEquilibrium { residual: f64, tolerance: f64 },
    #[error("configuration is not aligned with the x-axis (max |y| = {0:e})")]
    NotAligned(f64),
    #[error("ordering must be a permutation of 0..{0}")]
    BadOrdering(usize),
}
