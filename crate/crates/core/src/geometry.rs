//! Planar configurations, the SE(2) action, rigidity predicates and
//! orbit-aware comparison.

use nalgebra::{DMatrix, Vector2};

use crate::error::GeometryError;
use crate::graph::{Edge, TriangulatedLamanGraph};
use crate::scalar::Scalar;

/// Default threshold for the scale-invariant collinearity measure.
pub const DEFAULT_COLLINEARITY_TOL: f64 = 1e-7;
/// Default relative threshold for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

pub type Point<T> = Vector2<T>;

/// Positions of `N` agents in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration<T: Scalar> {
    points: Vec<Point<T>>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(points: Vec<Point<T>>) -> Self {
        Self { points }
    }

    pub fn from_xy(coords: &[(T, T)]) -> Self {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// From the interleaved vector `(x_1, y_1, …, x_N, y_N)`.
    pub fn from_flat(flat: &[T]) -> Self {
        assert!(flat.len() % 2 == 0, "odd-length coordinate vector");
        Self::new(flat.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point<T> {
        self.points[i]
    }

    pub fn points_mut(&mut self) -> &mut [Point<T>] {
        &mut self.points
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> T {
        (self.points[i] - self.points[j]).norm()
    }

    /// Reflection across the x-axis.
    pub fn mirrored(&self) -> Self {
        Self::new(self.points.iter().map(|p| Point::new(p.x, -p.y)).collect())
    }

    /// Sub-configuration of the listed agents, in list order.
    pub fn select(&self, agents: &[usize]) -> Self {
        Self::new(agents.iter().map(|&i| self.points[i]).collect())
    }

    pub fn centroid(&self) -> Point<T> {
        let n = T::count(self.points.len().max(1));
        self.points.iter().fold(Point::zeros(), |acc, p| acc + p) / n
    }

    pub fn check_len(&self, expected: usize) -> Result<(), GeometryError> {
        if self.points.len() == expected {
            Ok(())
        } else {
            Err(GeometryError::PointCount {
                expected,
                got: self.points.len(),
            })
        }
    }

    /// First edge whose endpoints coincide, if any.
    pub fn collision(&self, graph: &TriangulatedLamanGraph) -> Option<Edge> {
        graph
            .edges()
            .iter()
            .copied()
            .find(|e| self.distance(e.lo(), e.hi()) == T::zero())
    }

    pub fn convert<U: Scalar>(&self) -> Configuration<U> {
        Configuration::new(
            self.points
                .iter()
                .map(|p| Point::new(U::lit(p.x.as_f64()), U::lit(p.y.as_f64())))
                .collect(),
        )
    }
}

/// Rotation angle and translation: `x ↦ R(θ) x + v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se2<T: Scalar> {
    pub theta: T,
    pub v: Vector2<T>,
}

impl<T: Scalar> Se2<T> {
    pub fn new(theta: T, v: Vector2<T>) -> Self {
        Self { theta, v }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), Vector2::zeros())
    }

    pub fn rotation(theta: T) -> Self {
        Self::new(theta, Vector2::zeros())
    }

    pub fn translation(v: Vector2<T>) -> Self {
        Self::new(T::zero(), v)
    }

    #[inline]
    pub fn rotate(&self, x: &Vector2<T>) -> Vector2<T> {
        let (s, c) = self.theta.sin_cos();
        Vector2::new(c * x.x - s * x.y, s * x.x + c * x.y)
    }

    #[inline]
    pub fn apply_point(&self, x: &Vector2<T>) -> Vector2<T> {
        self.rotate(x) + self.v
    }

    /// `self · other` = `(θ_self θ_other, θ_self v_other + v_self)`.
    pub fn compose(&self, other: &Se2<T>) -> Se2<T> {
        Se2::new(self.theta + other.theta, self.rotate(&other.v) + self.v)
    }

    pub fn inverse(&self) -> Se2<T> {
        let r = Se2::rotation(-self.theta);
        Se2::new(-self.theta, -r.rotate(&self.v))
    }

    pub fn apply(&self, p: &Configuration<T>) -> Configuration<T> {
        Configuration::new(p.points().iter().map(|x| self.apply_point(x)).collect())
    }

    /// Rotates a per-agent vector field (no translation).
    pub fn rotate_field(&self, field: &[Vector2<T>]) -> Vec<Vector2<T>> {
        field.iter().map(|x| self.rotate(x)).collect()
    }
}

/// Squared edge lengths in lexicographic edge order.
pub fn rho<T: Scalar>(graph: &TriangulatedLamanGraph, p: &Configuration<T>) -> Vec<T> {
    graph
        .edges()
        .iter()
        .map(|e| (p.point(e.lo()) - p.point(e.hi())).norm_squared())
        .collect()
}

/// `|E| × 2N` Jacobian of [`rho`].
pub fn rigidity_jacobian<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    p: &Configuration<T>,
) -> DMatrix<T> {
    let n = graph.vertex_count();
    let mut jac = DMatrix::zeros(graph.edge_count(), 2 * n);
    let two = T::lit(2.0);
    for (row, e) in graph.edges().iter().enumerate() {
        let (i, j) = (e.lo(), e.hi());
        let diff = (p.point(i) - p.point(j)) * two;
        jac[(row, 2 * i)] = diff.x;
        jac[(row, 2 * i + 1)] = diff.y;
        jac[(row, 2 * j)] = -diff.x;
        jac[(row, 2 * j + 1)] = -diff.y;
    }
    jac
}

/// Number of singular values above `rank_tol · σ_max`.
pub fn numerical_rank<T: Scalar>(m: &DMatrix<T>, rank_tol: T) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(T::zero(), |a, s| a.max(*s));
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|s| **s > rank_tol * smax).count()
}

pub fn is_infinitesimally_rigid<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    p: &Configuration<T>,
    rank_tol: T,
) -> bool {
    let n = graph.vertex_count();
    numerical_rank(&rigidity_jacobian(graph, p), rank_tol) == 2 * n - 3
}

/// Scale-invariant degeneracy of a triangle: twice its area divided by the
/// product of its two shortest sides (the largest of the three vertex
/// sines). Zero for collinear or coincident points.
pub fn collinearity_measure<T: Scalar>(a: &Point<T>, b: &Point<T>, c: &Point<T>) -> T {
    let ab = b - a;
    let ac = c - a;
    let twice_area = (ab.x * ac.y - ab.y * ac.x).abs();
    let mut sides = [ab.norm(), ac.norm(), (c - b).norm()];
    sides.sort_by(|x, y| x.partial_cmp(y).expect("finite side lengths"));
    let denom = sides[0] * sides[1];
    if denom == T::zero() {
        T::zero()
    } else {
        twice_area / denom
    }
}

pub fn is_aligned<T: Scalar>(a: &Point<T>, b: &Point<T>, c: &Point<T>, tol: T) -> bool {
    collinearity_measure(a, b, c) < tol
}

/// Every 3-cycle spans a nondegenerate triangle.
pub fn is_strongly_rigid<T: Scalar>(
    graph: &TriangulatedLamanGraph,
    p: &Configuration<T>,
    collinearity_tol: T,
) -> bool {
    graph.three_cycles().iter().all(|&[i, j, k]| {
        !is_aligned(&p.point(i), &p.point(j), &p.point(k), collinearity_tol)
    })
}

/// Largest distance from the line through the two farthest points, relative
/// to their separation.
pub fn line_deviation<T: Scalar>(points: &[Point<T>]) -> T {
    let mut best = (0, 0, T::zero());
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm_squared();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, len2) = best;
    if len2 == T::zero() {
        return T::zero();
    }
    let dir = points[j] - points[i];
    points
        .iter()
        .map(|q| {
            let w = q - points[i];
            (dir.x * w.y - dir.y * w.x).abs() / len2
        })
        .fold(T::zero(), |m, v| m.max(v))
}

pub fn is_line_configuration<T: Scalar>(points: &[Point<T>], tol: T) -> bool {
    line_deviation(points) < tol
}

/// Root-mean-square mismatch after the best proper rigid motion of `p` onto
/// `q` (reflections excluded).
pub fn orbit_distance<T: Scalar>(p: &Configuration<T>, q: &Configuration<T>) -> T {
    assert_eq!(p.len(), q.len(), "orbit_distance needs equal agent counts");
    if p.is_empty() {
        return T::zero();
    }
    let (cp, cq) = (p.centroid(), q.centroid());
    let mut dot = T::zero();
    let mut cross = T::zero();
    for (a, b) in p.points().iter().zip(q.points()) {
        let (a, b) = (a - cp, b - cq);
        dot += a.x * b.x + a.y * b.y;
        cross += a.x * b.y - a.y * b.x;
    }
    let rot = Se2::rotation(cross.atan2(dot));
    let sum_sq = p
        .points()
        .iter()
        .zip(q.points())
        .map(|(a, b)| (rot.rotate(&(a - cp)) - (b - cq)).norm_squared())
        .fold(T::zero(), |s, v| s + v);
    (sum_sq / T::count(p.len())).sqrt()
}

/// The motion taking agent 0 to the origin and agent 1 onto the positive
/// x-axis.
pub fn canonical_frame<T: Scalar>(p: &Configuration<T>) -> Result<Se2<T>, GeometryError> {
    if p.len() < 2 {
        return Err(GeometryError::PointCount {
            expected: 2,
            got: p.len(),
        });
    }
    let d = p.point(1) - p.point(0);
    if d.norm() == T::zero() {
        return Err(GeometryError::Gauge(0, 1));
    }
    let rot = Se2::rotation(-d.y.atan2(d.x));
    Ok(Se2::new(rot.theta, -rot.rotate(&p.point(0))))
}

/// Deterministic representative of the SE(2) orbit of `p`.
pub fn canonicalize<T: Scalar>(p: &Configuration<T>) -> Result<Configuration<T>, GeometryError> {
    let g = canonical_frame(p)?;
    let mut out = g.apply(p);
    // exact gauge values, free of rounding noise
    out.points_mut()[0] = Point::zeros();
    out.points_mut()[1].y = T::zero();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::HennebergStep;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn triangle() -> TriangulatedLamanGraph {
        TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 1)]).unwrap()
    }

    fn equilateral(side: f64) -> Configuration<f64> {
        Configuration::from_xy(&[(0.0, 0.0), (side, 0.0), (side / 2.0, side * 3f64.sqrt() / 2.0)])
    }

    fn close(a: &Se2<f64>, b: &Se2<f64>) -> bool {
        let dt = (a.theta - b.theta).rem_euclid(2.0 * PI);
        (dt < 1e-12 || (2.0 * PI - dt) < 1e-12) && (a.v - b.v).norm() < 1e-12
    }

    #[test]
    fn compose_examples() {
        let g = Se2::new(0.3, Vector2::new(1.0, -2.0));
        assert!(close(&Se2::identity().compose(&g), &g));
        let half = Se2::rotation(FRAC_PI_2).compose(&Se2::rotation(FRAC_PI_2));
        assert!(close(&half, &Se2::rotation(PI)));
        let c = Se2::new(FRAC_PI_2, Vector2::new(1.0, 0.0))
            .compose(&Se2::translation(Vector2::new(1.0, 0.0)));
        assert!(close(&c, &Se2::new(FRAC_PI_2, Vector2::new(1.0, 1.0))));
    }

    #[test]
    fn apply_examples() {
        let p = Configuration::from_xy(&[(1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(Se2::identity().apply(&p), p);
        let t = Se2::translation(Vector2::new(1.0, 1.0)).apply(&Configuration::from_xy(&[(0.0, 0.0)]));
        assert_eq!(t.point(0), Vector2::new(1.0, 1.0));
        let r = Se2::rotation(FRAC_PI_2).apply(&p);
        assert!((r.point(0) - Vector2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((r.point(1) - Vector2::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_undoes() {
        let g = Se2::new(1.1, Vector2::new(0.4, 2.0));
        assert!(close(&g.compose(&g.inverse()), &Se2::identity()));
    }

    #[test]
    fn rho_examples() {
        let base = TriangulatedLamanGraph::base();
        let p = Configuration::from_xy(&[(0.0, 0.0), (3.0, 4.0)]);
        assert_eq!(rho(&base, &p), vec![25.0]);
        let r = rho(&triangle(), &equilateral(1.0));
        for v in r {
            assert_relative_eq!(v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn infinitesimal_rigidity_examples() {
        assert!(is_infinitesimally_rigid(&triangle(), &equilateral(1.0), 1e-8));
        let collinear = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0), (2.5, 0.0)]);
        // rows are all along x: rank 2 < 3
        assert_eq!(numerical_rank(&rigidity_jacobian(&triangle(), &collinear), 1e-8), 2);
        assert!(!is_infinitesimally_rigid(&triangle(), &collinear, 1e-8));
        let pair = Configuration::from_xy(&[(0.0, 0.0), (0.3, 0.2)]);
        assert!(is_infinitesimally_rigid(&TriangulatedLamanGraph::base(), &pair, 1e-8));
    }

    #[test]
    fn strong_rigidity_examples() {
        assert!(is_strongly_rigid(&triangle(), &equilateral(1.0), 1e-7));
        let pair = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(is_strongly_rigid(&TriangulatedLamanGraph::base(), &pair, 1e-7));
        let g = TriangulatedLamanGraph::build(&[
            HennebergStep::new(2, 0, 1),
            HennebergStep::new(3, 0, 2),
            HennebergStep::new(4, 2, 3),
        ])
        .unwrap();
        // agents 1,2,3 aligned and 3,4,5 aligned
        let two_lines = Configuration::from_xy(&[(0.0, 0.0), (-1.0, 0.0), (1.5, 0.0), (1.0, 1.0), (2.0, -1.0)]);
        assert!(!is_strongly_rigid(&g, &two_lines, 1e-7));
    }

    #[test]
    fn collinearity_measure_is_symmetric_and_scale_free() {
        let (a, b, c) = (Point::new(0.0, 0.0), Point::new(2.0, 0.1), Point::new(-0.7, 1.3));
        let m = collinearity_measure(&a, &b, &c);
        assert_relative_eq!(m, collinearity_measure(&c, &a, &b), epsilon = 1e-15);
        assert_relative_eq!(m, collinearity_measure(&(a * 7.0), &(b * 7.0), &(c * 7.0)), epsilon = 1e-14);
        assert_eq!(collinearity_measure(&a, &Point::new(1.0, 1.0), &Point::new(3.0, 3.0)), 0.0);
    }

    #[test]
    fn orbit_distance_examples() {
        let p = Configuration::from_xy(&[(0.1, 0.2), (1.3, -0.4), (0.5, 1.7), (2.0, 0.9)]);
        let g = Se2::new(2.2, Vector2::new(-3.0, 5.5));
        assert!(orbit_distance(&p, &g.apply(&p)) < 1e-10);
        assert!(orbit_distance(&p, &p.mirrored()) > 0.1);
    }

    #[test]
    fn orbit_distance_equilateral_sizes_matches_angle_scan() {
        let (p, q) = (equilateral(1.0), equilateral(2.0));
        let d = orbit_distance(&p, &q);
        // independent oracle: brute-force scan over rotation angle after centering
        let (cp, cq) = (p.centroid(), q.centroid());
        let best = (0..200_000)
            .map(|k| {
                let r = Se2::rotation(2.0 * PI * k as f64 / 200_000.0);
                let s: f64 = p
                    .points()
                    .iter()
                    .zip(q.points())
                    .map(|(a, b)| (r.rotate(&(a - cp)) - (b - cq)).norm_squared())
                    .sum();
                (s / 3.0).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(d, best, epsilon = 1e-9);
        // circumradius gap: 1/√3 between vertices of concentric aligned triangles
        assert_relative_eq!(d, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn canonicalize_examples() {
        let p = Configuration::from_xy(&[(1.0, 1.0), (1.0, 2.0)]);
        assert_eq!(canonicalize(&p).unwrap(), Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0)]));
        let q = Configuration::from_xy(&[(0.0, 0.0), (2.0, 0.0), (0.3, -1.0)]);
        let c = canonicalize(&q).unwrap();
        assert!(orbit_distance(&c, &q) < 1e-15);
        assert_eq!(canonicalize(&c).unwrap(), c);
        let bad = Configuration::from_xy(&[(1.0, 1.0), (1.0, 1.0)]);
        assert_eq!(canonicalize(&bad).unwrap_err(), GeometryError::Gauge(0, 1));
    }

    #[test]
    fn line_deviation_detects_bend() {
        let line = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(-2.0, -2.0)];
        assert!(is_line_configuration(&line, 1e-12));
        let bent = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(-2.0, -1.9)];
        assert!(!is_line_configuration(&bent, 1e-7));
    }
}
