//! Verification experiments on equilibria: the index formula over the
//! independent partition, the one-agent reduction of line equilibria, the
//! catalog of target orbits, and basin statistics.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DynamicsError;
use crate::geometry::{
    canonicalize, collinearity_measure, is_strongly_rigid, line_deviation, orbit_distance,
    Configuration, Point, DEFAULT_COLLINEARITY_TOL,
};
use crate::graph::{validate_targets, Edge, TargetDistances, TriangleViolation, TriangulatedLamanGraph};
use crate::integrate::{integrate, IntegrationControls};
use crate::laws::InteractionLaw;
use crate::newton::{find_line_equilibria, line_orderings, refine_equilibrium, EquilibriumRecord, NewtonOptions};
use crate::partition::independent_partition;
use crate::scalar::Scalar;
use crate::spectral::{
    align_line, classify_spectrum, hessian, line_block_hessian, sign_vector, signature_of, spectrum,
    LineBlockHessian, Signature, Stability, ZeroTol,
};
use crate::system::FormationSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("target distances violate triangle inequalities: {}", list_violations(.0))]
    Targets(Vec<TriangleViolation>),
    #[error("circle intersection for vertex {} is empty", .0 + 1)]
    NoIntersection(usize),
    #[error("block {0} of the partition is not a triangulated Laman graph")]
    BlockNotLaman(usize),
    #[error("need at least {0} agents")]
    TooFewAgents(usize),
    #[error("at least one trial is required")]
    NoTrials,
}

fn list_violations(v: &[TriangleViolation]) -> String {
    v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("; ")
}

/// Tolerances shared by the equilibrium checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions<T> {
    pub collinearity_tol: T,
    pub zero_tol: ZeroTol<T>,
    /// Largest `‖∇Φ‖_∞` accepted as an equilibrium.
    pub equilibrium_tol: T,
}

impl<T: Scalar> Default for AnalysisOptions<T> {
    fn default() -> Self {
        Self {
            collinearity_tol: T::lit(DEFAULT_COLLINEARITY_TOL),
            zero_tol: ZeroTol::default(),
            equilibrium_tol: T::lit(1e-8),
        }
    }
}

fn require_equilibrium<T: Scalar>(
    system: &FormationSystem<T>,
    p: &Configuration<T>,
    tol: T,
) -> Result<(), DynamicsError> {
    let residual = system.residual(p)?;
    if residual > tol {
        return Err(DynamicsError::NotEquilibrium {
            residual: residual.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(())
}

/// Outcome of a check that can fail to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSignature {
    pub edges: Vec<Edge>,
    pub vertices: Vec<usize>,
    pub signature: Signature,
    pub verdict: Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexFormulaReport {
    pub full: Signature,
    pub full_verdict: Stability,
    pub blocks: Vec<BlockSignature>,
    /// `Σ n₋` over blocks.
    pub index_sum: usize,
    /// `Σ n₊` over blocks.
    pub coindex_sum: usize,
    pub partition_fragile: bool,
}

impl IndexFormulaReport {
    pub fn index_matches(&self) -> bool {
        self.full.n_minus == self.index_sum
    }

    pub fn coindex_matches(&self) -> bool {
        self.full.n_plus == self.coindex_sum
    }

    /// Some orbit (full or block) has more than three zero eigenvalues.
    pub fn degenerate(&self) -> bool {
        self.full.n_zero > 3 || self.blocks.iter().any(|b| b.signature.n_zero > 3)
    }

    pub fn verdict(&self) -> Verdict {
        if self.degenerate() {
            Verdict::Inconclusive
        } else if self.index_matches() && self.coindex_matches() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Full orbit stable exactly when every block is stable.
    pub fn stability_agrees(&self) -> bool {
        let all = self.blocks.iter().all(|b| b.verdict == Stability::Stable);
        (self.full_verdict == Stability::Stable) == all
    }
}

/// Compares the signature of the full Hessian with the sums over the
/// subsystems induced by the independent partition.
pub fn verify_morse_bott<T: Scalar>(
    system: &FormationSystem<T>,
    p: &Configuration<T>,
    options: &AnalysisOptions<T>,
) -> Result<IndexFormulaReport, AnalysisError> {
    require_equilibrium(system, p, options.equilibrium_tol)?;
    let full = spectrum(&hessian(system, p)?, options.zero_tol);
    let full = classify_spectrum(system.agent_count(), full);
    let partition = independent_partition(system.graph(), p, options.collinearity_tol);

    let mut blocks = Vec::with_capacity(partition.len());
    for (index, edges) in partition.blocks.iter().enumerate() {
        let (sub, labels) = system
            .induced(edges)
            .ok_or(AnalysisError::BlockNotLaman(index))?;
        let q = p.select(&labels);
        let c = classify_spectrum(sub.agent_count(), spectrum(&hessian(&sub, &q)?, options.zero_tol));
        let mut vertices = labels;
        vertices.sort_unstable();
        blocks.push(BlockSignature {
            edges: edges.clone(),
            vertices,
            signature: c.signature,
            verdict: c.verdict,
        });
    }
    Ok(IndexFormulaReport {
        full: full.signature,
        full_verdict: full.verdict,
        index_sum: blocks.iter().map(|b| b.signature.n_minus).sum(),
        coindex_sum: blocks.iter().map(|b| b.signature.n_plus).sum(),
        blocks,
        partition_fragile: partition.is_fragile(),
    })
}

/// Where the removed agent sits relative to its two neighbours on the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParentPosition {
    Between,
    Outside,
}

/// Signature bookkeeping of one block (`A` or `B`) under the reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionSide {
    pub full: Signature,
    pub reduced: Signature,
    /// Diagonal entry of the removed agent, `−M_rj − M_rk`.
    pub pivot: f64,
    /// Largest off-diagonal entry of `Qᵀ M Q`, relative to `max(1, ‖M‖)`.
    pub congruence_residual: f64,
    /// Largest `‖M v*_i − λ_i (0, v_i)‖`, relative to `max(1, ‖M‖)`.
    pub eigen_residual: f64,
}

impl ReductionSide {
    pub fn signature_holds(&self) -> bool {
        let (p, m, z) = sign_vector(self.pivot);
        self.full.triple() == (self.reduced.n_plus + p, self.reduced.n_minus + m, self.reduced.n_zero + z)
    }

    pub fn congruence_holds(&self) -> bool {
        self.congruence_residual <= CONGRUENCE_TOL && self.eigen_residual <= EIGEN_TOL
    }
}

const CONGRUENCE_TOL: f64 = 1e-7;
const EIGEN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Removed agent (the last Henneberg vertex) and its two neighbours.
    pub removed: usize,
    pub parents: (usize, usize),
    pub position: ParentPosition,
    /// `g(d_jk)` added to the `(j, k)` entry of `B`.
    pub g_value: f64,
    /// `(x g)'(d_jk)` added to the `(j, k)` entry of `A`.
    pub xg_derivative: f64,
    /// `g(d_jk) = d_rj f_rj(d_rj) / d_jk`; only asserted in the between case.
    pub g_value_matches: bool,
    /// `g(d_jk)` has the sign of `d_jk − d̄_jk`, as a member of the law
    /// class vanishing at the target must.
    pub g_sign_admissible: bool,
    pub a: ReductionSide,
    pub b: ReductionSide,
}

impl ReductionReport {
    pub fn verdict(&self) -> Verdict {
        if self.a.pivot == 0.0 || self.b.pivot == 0.0 {
            Verdict::Inconclusive
        } else if self.a.signature_holds()
            && self.b.signature_holds()
            && self.a.congruence_holds()
            && self.b.congruence_holds()
            && (self.position == ParentPosition::Outside || self.g_value_matches)
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Removes the last Henneberg vertex `r` of a line equilibrium and checks
/// that the signatures of `A` and `B` drop by exactly `sgn(−M_rj − M_rk)`.
///
/// The reduced blocks live on the remaining agents with the `(j, k)`
/// entries modified by `A_rj A_rk / (A_rj + A_rk)` and by
/// `g = f_rj (x_r − x_j) / (x_k − x_j)`. The congruence matrices are built
/// from the reduced eigenvectors extended by the weighted averages `α_i` and
/// the line interpolants `β_i`.
pub fn verify_reduction_formula<T: Scalar>(
    system: &FormationSystem<T>,
    p: &Configuration<T>,
    options: &AnalysisOptions<T>,
) -> Result<ReductionReport, AnalysisError> {
    let n = system.agent_count();
    if n < 3 {
        return Err(AnalysisError::TooFewAgents(3));
    }
    require_equilibrium(system, p, options.equilibrium_tol)?;
    let deviation = line_deviation(p.points());
    if deviation > T::lit(1e-6) {
        return Err(DynamicsError::NotAligned(deviation.as_f64()).into());
    }
    let (q, _) = align_line(p);
    let full = line_block_hessian(system, &q)?;

    let step = *system.graph().steps().last().expect("n >= 3 has steps");
    let r = step.new_vertex;
    let (j, k) = (step.parent_edge().lo(), step.parent_edge().hi());
    let x = |v: usize| q.point(v).x;
    let position = if (x(r) - x(j)) * (x(r) - x(k)) < T::zero() {
        ParentPosition::Between
    } else {
        ParentPosition::Outside
    };

    let law = |a: usize, b: usize| system.law(Edge::new(a, b)).expect("graph edge");
    let d = |a: usize, b: usize| q.distance(a, b);
    let (a_rj, a_rk) = (full.a[(r, j)], full.a[(r, k)]);
    let f_rj = law(r, j).gain(d(r, j));
    let g = f_rj * (x(r) - x(j)) / (x(k) - x(j));
    let xg = if a_rj + a_rk == T::zero() {
        T::zero()
    } else {
        a_rj * a_rk / (a_rj + a_rk)
    };

    let values: Vec<(Edge, T, T)> = system
        .graph()
        .edges()
        .iter()
        .filter(|e| !e.contains(r))
        .map(|&e| {
            let (mut av, mut bv) = (full.a[(e.lo(), e.hi())], full.b[(e.lo(), e.hi())]);
            if e == Edge::new(j, k) {
                av += xg;
                bv += g;
            }
            (e, av, bv)
        })
        .collect();
    let reduced = LineBlockHessian::from_edge_values(n - 1, &values);

    let a_weights = |v: &DVector<T>| {
        if a_rj + a_rk == T::zero() {
            T::zero()
        } else {
            (a_rj * v[j] + a_rk * v[k]) / (a_rj + a_rk)
        }
    };
    let b_weights = |v: &DVector<T>| ((x(k) - x(r)) * v[j] + (x(r) - x(j)) * v[k]) / (x(k) - x(j));
    let a = reduction_side(&full.a, &reduced.a, r, options.zero_tol, a_weights);
    let b = reduction_side(&full.b, &reduced.b, r, options.zero_tol, b_weights);

    let d_jk = d(j, k);
    let target_jk = law(j, k).target();
    let expected_g = d(r, j) * f_rj / d_jk;
    let scale = T::one().max(expected_g.abs());
    Ok(ReductionReport {
        removed: r,
        parents: (j, k),
        position,
        g_value: g.as_f64(),
        xg_derivative: xg.as_f64(),
        g_value_matches: (g - expected_g).abs() <= T::lit(1e-9) * scale,
        g_sign_admissible: g * (d_jk - target_jk) > T::zero(),
        a,
        b,
    })
}

/// `full` has the removed agent at index `r = n − 1`.
fn reduction_side<T: Scalar>(
    full: &DMatrix<T>,
    reduced: &DMatrix<T>,
    r: usize,
    zero_tol: ZeroTol<T>,
    extend: impl Fn(&DVector<T>) -> T,
) -> ReductionSide {
    let m = reduced.nrows();
    debug_assert_eq!(r, m);
    let eig = SymmetricEigen::new(reduced.clone());
    let mut q = DMatrix::zeros(m + 1, m + 1);
    q[(r, 0)] = T::one();
    let mut eigen_residual = T::zero();
    for i in 0..m {
        let v: DVector<T> = eig.eigenvectors.column(i).into_owned();
        let mut star = DVector::zeros(m + 1);
        star.rows_mut(0, m).copy_from(&v);
        star[r] = extend(&v);
        let mut target = DVector::zeros(m + 1);
        target.rows_mut(0, m).copy_from(&(v * eig.eigenvalues[i]));
        eigen_residual = eigen_residual.max((full * &star - target).amax());
        q.set_column(i + 1, &star);
    }
    let congruent = q.transpose() * full * &q;
    let off = (0..=m)
        .flat_map(|i| (0..=m).filter(move |&c| c != i).map(move |c| (i, c)))
        .fold(T::zero(), |acc, (i, c)| acc.max(congruent[(i, c)].abs()));
    let scale = T::one().max(full.amax());
    ReductionSide {
        full: signature_of(full, zero_tol),
        reduced: signature_of(reduced, zero_tol),
        pivot: full[(r, r)].as_f64(),
        congruence_residual: (off / scale).as_f64(),
        eigen_residual: (eigen_residual / scale).as_f64(),
    }
}

/// One realization of the targets per sign word.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetOrbit<T: Scalar> {
    /// Canonical representative (agent 1 at the origin, agent 2 on the
    /// positive x-axis).
    pub configuration: Configuration<T>,
    /// Per Henneberg step: `+` when the new vertex lies left of its parent
    /// edge directed from the lower to the higher label.
    pub signs: String,
}

/// Outcome of matching a configuration against the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "orbit")]
pub enum OrbitMatch {
    Orbit(usize),
    NonTarget,
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetOrbitCatalog<T: Scalar> {
    pub entries: Vec<TargetOrbit<T>>,
    /// Sign words whose realization duplicated an earlier entry.
    pub duplicates: Vec<String>,
}

impl<T: Scalar> TargetOrbitCatalog<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_separation(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                let d = orbit_distance(&a.configuration, &b.configuration);
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
        best
    }

    /// Nearest entry within `radius`; two entries within reach is ambiguous.
    pub fn classify(&self, p: &Configuration<T>, radius: T) -> OrbitMatch {
        let hits: Vec<usize> = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| orbit_distance(&e.configuration, p) < radius)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => OrbitMatch::NonTarget,
            [i] => OrbitMatch::Orbit(*i),
            _ => OrbitMatch::Ambiguous,
        }
    }
}

/// Realizes the targets by circle intersections along the Henneberg steps,
/// once for each of the `2^{N−2}` sign words.
pub fn enumerate_target_orbits<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    targets: &TargetDistances<T>,
) -> Result<TargetOrbitCatalog<T>, AnalysisError> {
    let violations = validate_targets(graph, targets).map_err(DynamicsError::from)?;
    if !violations.is_empty() {
        return Err(AnalysisError::Targets(violations));
    }
    let n = graph.vertex_count();
    let steps = graph.steps();
    let target = |a: usize, b: usize| targets.get(Edge::new(a, b)).expect("validated");
    let scale = targets.max();
    let dedup_radius = T::default_epsilon().sqrt() * scale;

    let mut catalog = TargetOrbitCatalog {
        entries: Vec::new(),
        duplicates: Vec::new(),
    };
    for word in 0u64..(1u64 << steps.len()) {
        let mut pts = vec![Point::zeros(); n];
        pts[1] = Point::new(target(0, 1), T::zero());
        let mut signs = String::with_capacity(steps.len());
        for (s, step) in steps.iter().enumerate() {
            let (j, k) = (step.parent_edge().lo(), step.parent_edge().hi());
            let left = word >> s & 1 == 0;
            signs.push(if left { '+' } else { '-' });
            pts[step.new_vertex] = circle_intersection(
                pts[j],
                pts[k],
                target(step.new_vertex, j),
                target(step.new_vertex, k),
                left,
            )
            .ok_or(AnalysisError::NoIntersection(step.new_vertex))?;
        }
        let configuration = canonicalize(&Configuration::new(pts)).map_err(DynamicsError::from)?;
        let duplicate = catalog
            .entries
            .iter()
            .any(|e| orbit_distance(&e.configuration, &configuration) < dedup_radius);
        if duplicate {
            catalog.duplicates.push(signs);
        } else {
            catalog.entries.push(TargetOrbit { configuration, signs });
        }
    }
    Ok(catalog)
}

/// Point at distance `rj` from `pj` and `rk` from `pk`, left or right of
/// the directed segment `pj → pk`.
fn circle_intersection<T: Scalar>(pj: Point<T>, pk: Point<T>, rj: T, rk: T, left: bool) -> Option<Point<T>> {
    let delta = pk - pj;
    let d = delta.norm();
    if d == T::zero() {
        return None;
    }
    let u = delta / d;
    let along = (rj * rj - rk * rk + d * d) / (d + d);
    let h2 = rj * rj - along * along;
    if h2 <= T::zero() {
        return None;
    }
    let h = h2.sqrt();
    let normal = Point::new(-u.y, u.x);
    Some(pj + u * along + normal * if left { h } else { -h })
}

/// Generic targets for a graph: the edge lengths of a random embedding whose
/// 3-cycles are well shaped (collinearity measure ≥ 0.2) and whose edges
/// lie in `[0.3, 3]`.
pub fn random_targets<T: Scalar, R: Rng + ?Sized>(graph: &TriangulatedLamanGraph, rng: &mut R) -> TargetDistances<T> {
    loop {
        let pts: Vec<Point<T>> = (0..graph.vertex_count())
            .map(|_| Point::new(T::lit(rng.random::<f64>() * 3.0), T::lit(rng.random::<f64>() * 3.0)))
            .collect();
        let lengths_ok = graph.edges().iter().all(|e| {
            let d = (pts[e.lo()] - pts[e.hi()]).norm();
            d >= T::lit(0.3) && d <= T::lit(3.0)
        });
        let shapes_ok = graph
            .three_cycles()
            .iter()
            .all(|&[i, j, k]| collinearity_measure(&pts[i], &pts[j], &pts[k]) >= T::lit(0.2));
        if lengths_ok && shapes_ok {
            let values: BTreeMap<Edge, T> = graph
                .edges()
                .iter()
                .map(|e| (*e, (pts[e.lo()] - pts[e.hi()]).norm()))
                .collect();
            return TargetDistances::new(values).expect("positive lengths");
        }
    }
}

/// Controls for the Monte Carlo experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerSpec<T> {
    /// Initial agents are uniform in a square of side `box_factor · max d̄`.
    pub box_factor: T,
    /// Adjacent agents closer than this are resampled.
    pub min_separation: T,
    pub horizon: T,
    pub integration: IntegrationControls<T>,
    pub newton: NewtonOptions<T>,
    /// `orbit_distance` below which an endpoint is assigned to an orbit.
    pub classification_radius: T,
    pub collinearity_tol: T,
}

impl<T: Scalar> Default for SamplerSpec<T> {
    fn default() -> Self {
        Self {
            box_factor: T::lit(4.0),
            min_separation: T::lit(1e-3),
            horizon: T::lit(1000.0),
            integration: IntegrationControls::default(),
            newton: NewtonOptions::default(),
            classification_radius: T::lit(1e-4),
            collinearity_tol: T::lit(DEFAULT_COLLINEARITY_TOL),
        }
    }
}

impl<T: Scalar> SamplerSpec<T> {
    /// Draws one initial configuration; deterministic in `(seed, trial)`.
    pub fn sample(&self, system: &FormationSystem<T>, seed: u64, trial: u64) -> Configuration<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let side = (self.box_factor * system.targets().max()).as_f64();
        loop {
            let pts = (0..system.agent_count())
                .map(|_| Point::new(T::lit(rng.random::<f64>() * side), T::lit(rng.random::<f64>() * side)))
                .collect();
            let p = Configuration::new(pts);
            let separated = system
                .graph()
                .edges()
                .iter()
                .all(|e| p.distance(e.lo(), e.hi()) >= self.min_separation);
            if separated {
                return p;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum TrialOutcome {
    Target {
        orbit: usize,
        /// `max |d_ij − d̄_ij|` at the refined endpoint.
        distance_error: f64,
    },
    NonTarget {
        verdict: Stability,
        strongly_rigid: bool,
    },
    Ambiguous,
    Failed {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: TrialOutcome,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub trials: usize,
    pub seed: u64,
    pub orbit_hits: Vec<usize>,
    pub non_target: usize,
    pub ambiguous: usize,
    pub failures: usize,
    pub records: Vec<TrialRecord>,
}

impl BasinReport {
    /// Share of trials ending on a catalog orbit with every edge within
    /// `distance_tol` of its target.
    pub fn target_fraction(&self, distance_tol: f64) -> f64 {
        let hits = self
            .records
            .iter()
            .filter(|r| matches!(r.outcome, TrialOutcome::Target { distance_error, .. } if distance_error < distance_tol))
            .count();
        hits as f64 / self.trials as f64
    }

    pub fn stable_non_target(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.outcome, TrialOutcome::NonTarget { verdict: Stability::Stable, .. }))
            .count()
    }
}

/// Integrates from `trials` random starts, refines each endpoint and
/// assigns it to a target orbit or to the non-target bin. Trials run in
/// parallel on independent streams of one seed.
pub fn basin_monte_carlo<T: Scalar>(
    system: &FormationSystem<T>,
    trials: usize,
    sampler: &SamplerSpec<T>,
    seed: u64,
) -> Result<BasinReport, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    let targets = system.targets();
    let catalog = enumerate_target_orbits(system.graph(), &targets)?;
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(system, &catalog, &targets, sampler, seed, trial))
        .collect();

    let mut report = BasinReport {
        trials,
        seed,
        orbit_hits: vec![0; catalog.len()],
        non_target: 0,
        ambiguous: 0,
        failures: 0,
        records,
    };
    for r in &report.records {
        match r.outcome {
            TrialOutcome::Target { orbit, .. } => report.orbit_hits[orbit] += 1,
            TrialOutcome::NonTarget { .. } => report.non_target += 1,
            TrialOutcome::Ambiguous => report.ambiguous += 1,
            TrialOutcome::Failed { .. } => report.failures += 1,
        }
    }
    Ok(report)
}

fn run_trial<T: Scalar>(
    system: &FormationSystem<T>,
    catalog: &TargetOrbitCatalog<T>,
    targets: &TargetDistances<T>,
    sampler: &SamplerSpec<T>,
    seed: u64,
    trial: usize,
) -> TrialRecord {
    let failed = |reason: String| TrialRecord {
        trial,
        outcome: TrialOutcome::Failed { reason },
        residual: f64::NAN,
    };
    let p0 = sampler.sample(system, seed, trial as u64);
    let end = match integrate(system, &p0, sampler.horizon, &sampler.integration) {
        Ok(traj) => traj.final_state().clone(),
        Err(e) => return failed(format!("integration: {}", e.error)),
    };
    let eq = match refine_equilibrium(system, &end, &sampler.newton) {
        Ok(eq) => eq,
        Err(e) => return failed(format!("refinement: {}", e.error)),
    };
    let p = &eq.configuration;
    let outcome = match catalog.classify(p, sampler.classification_radius) {
        OrbitMatch::Orbit(orbit) => TrialOutcome::Target {
            orbit,
            distance_error: targets
                .iter()
                .fold(T::zero(), |m, (e, d)| m.max((p.distance(e.lo(), e.hi()) - d).abs()))
                .as_f64(),
        },
        OrbitMatch::Ambiguous => TrialOutcome::Ambiguous,
        OrbitMatch::NonTarget => match hessian(system, p) {
            Ok(h) => TrialOutcome::NonTarget {
                verdict: classify_spectrum(system.agent_count(), spectrum(&h, ZeroTol::default())).verdict,
                strongly_rigid: is_strongly_rigid(system.graph(), p, sampler.collinearity_tol),
            },
            Err(e) => return failed(format!("hessian: {e}")),
        },
    };
    TrialRecord {
        trial,
        outcome,
        residual: eq.residual.as_f64(),
    }
}

/// Equilibria reached by gauge-fixed Newton from random starts, in trial
/// order; starts that fail to converge are skipped.
pub fn discover_equilibria<T: Scalar>(
    system: &FormationSystem<T>,
    attempts: usize,
    sampler: &SamplerSpec<T>,
    seed: u64,
) -> Vec<EquilibriumRecord<T>> {
    (0..attempts)
        .into_par_iter()
        .filter_map(|trial| {
            let p0 = sampler.sample(system, seed, trial as u64);
            refine_equilibrium(system, &p0, &sampler.newton).ok()
        })
        .collect()
}

/// Line equilibria over every ordering of the agents (one of each mirror
/// pair).
pub fn all_line_equilibria<T: Scalar>(
    system: &FormationSystem<T>,
    options: &NewtonOptions<T>,
) -> Result<Vec<EquilibriumRecord<T>>, DynamicsError> {
    let mut out = Vec::new();
    for ordering in line_orderings(system.agent_count()) {
        out.extend(find_line_equilibria(system, &ordering, options)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub strongly_rigid: bool,
    pub verdict: Stability,
    pub signature: Signature,
}

/// Strong rigidity against stability over a list of equilibria.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityCensus {
    pub rows: Vec<CensusRow>,
}

impl StabilityCensus {
    pub fn count(&self, strongly_rigid: bool, verdict: Stability) -> usize {
        self.rows
            .iter()
            .filter(|r| r.strongly_rigid == strongly_rigid && r.verdict == verdict)
            .count()
    }

    /// No stable equilibrium that is not strongly rigid and no unstable one
    /// that is.
    pub fn off_diagonal_empty(&self) -> bool {
        self.count(false, Stability::Stable) == 0 && self.count(true, Stability::UnstableSaddle) == 0
    }
}

pub fn stability_census<T: Scalar>(
    system: &FormationSystem<T>,
    equilibria: &[Configuration<T>],
    options: &AnalysisOptions<T>,
) -> Result<StabilityCensus, DynamicsError> {
    let rows = equilibria
        .iter()
        .map(|p| {
            let c = classify_spectrum(system.agent_count(), spectrum(&hessian(system, p)?, options.zero_tol));
            Ok(CensusRow {
                strongly_rigid: is_strongly_rigid(system.graph(), p, options.collinearity_tol),
                verdict: c.verdict,
                signature: c.signature,
            })
        })
        .collect::<Result<_, DynamicsError>>()?;
    Ok(StabilityCensus { rows })
}
