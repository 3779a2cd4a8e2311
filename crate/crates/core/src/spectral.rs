//! Hessians at equilibria, their signatures, and stability verdicts.
//!
//! Sign convention: [`hessian`] returns `−∇²Φ`, the linearization of the
//! flow `ẋ = −∇Φ`. With it a critical orbit is exponentially stable exactly
//! when the signature is `(0, 2N−3, 3)`, and the line blocks have off-diagonal
//! entries `(x f)'(d_ij)` and `f(d_ij)`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::geometry::{Configuration, Point, Se2};
use crate::graph::Edge;
use crate::laws::InteractionLaw;
use crate::scalar::Scalar;
use crate::system::FormationSystem;

/// Default relative zero threshold: `1e-6 · max(1, max |λ|)`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

/// Threshold deciding which eigenvalues count as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroTol<T> {
    Absolute(T),
    /// `factor · max(1, max |λ|)`.
    Relative(T),
}

impl<T: Scalar> Default for ZeroTol<T> {
    fn default() -> Self {
        ZeroTol::Relative(T::lit(DEFAULT_ZERO_TOL))
    }
}

impl<T: Scalar> ZeroTol<T> {
    pub fn resolve(&self, eigenvalues: &[T]) -> T {
        match *self {
            ZeroTol::Absolute(t) => t,
            ZeroTol::Relative(f) => {
                let scale = eigenvalues.iter().fold(T::one(), |m, l| m.max(l.abs()));
                f * scale
            }
        }
    }
}

/// `(n₊, n₋, n₀)` of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub zero_tol: f64,
}

impl Signature {
    pub fn triple(&self) -> (usize, usize, usize) {
        (self.n_plus, self.n_minus, self.n_zero)
    }

    pub fn dimension(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    pub fn from_eigenvalues<T: Scalar>(eigenvalues: &[T], zero_tol: T) -> Self {
        let mut sig = Signature {
            n_plus: 0,
            n_minus: 0,
            n_zero: 0,
            zero_tol: zero_tol.as_f64(),
        };
        for &l in eigenvalues {
            if l > zero_tol {
                sig.n_plus += 1;
            } else if l < -zero_tol {
                sig.n_minus += 1;
            } else {
                sig.n_zero += 1;
            }
        }
        sig
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n_plus, self.n_minus, self.n_zero)
    }
}

/// Vector-valued sign: `(1,0,0)`, `(0,1,0)` or `(0,0,1)` as a signature.
pub fn sign_vector<T: Scalar>(x: T) -> (usize, usize, usize) {
    if x > T::zero() {
        (1, 0, 0)
    } else if x < T::zero() {
        (0, 1, 0)
    } else {
        (0, 0, 1)
    }
}

/// Eigenvalues in ascending order together with the signature.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
    pub signature: Signature,
}

pub fn sorted_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<T> = SymmetricEigen::new(symmetrized(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

fn symmetrized<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

pub fn spectrum<T: Scalar>(m: &DMatrix<T>, zero_tol: ZeroTol<T>) -> Spectrum<T> {
    let eigenvalues = sorted_eigenvalues(m);
    let tol = zero_tol.resolve(&eigenvalues);
    Spectrum {
        signature: Signature::from_eigenvalues(&eigenvalues, tol),
        eigenvalues,
    }
}

/// Signature from a symmetric eigendecomposition (never from determinants).
pub fn signature_of<T: Scalar>(m: &DMatrix<T>, zero_tol: ZeroTol<T>) -> Signature {
    spectrum(m, zero_tol).signature
}

/// `−∇²Φ(p)` in interleaved coordinates `(x_1, y_1, …)`.
pub fn hessian<T: Scalar>(
    system: &FormationSystem<T>,
    p: &Configuration<T>,
) -> Result<DMatrix<T>, DynamicsError> {
    Ok(-system.potential_hessian(p)?)
}

/// Permutes an interleaved `2N` matrix into `(all x, all y)` order.
pub fn rearrange<T: Scalar>(h: &DMatrix<T>) -> DMatrix<T> {
    let n = h.nrows() / 2;
    let idx = |k: usize| if k < n { 2 * k } else { 2 * (k - n) + 1 };
    DMatrix::from_fn(2 * n, 2 * n, |r, c| h[(idx(r), idx(c))])
}

/// The `(A, B)` blocks of the Hessian at a configuration on the x-axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBlockHessian<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
}

impl<T: Scalar> LineBlockHessian<T> {
    /// Zero-row-sum blocks from per-edge off-diagonal values
    /// `(edge, A_ij, B_ij)`.
    pub fn from_edge_values(n: usize, values: &[(Edge, T, T)]) -> Self {
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for &(e, av, bv) in values {
            let (i, j) = (e.lo(), e.hi());
            for (m, v) in [(&mut a, av), (&mut b, bv)] {
                m[(i, j)] += v;
                m[(j, i)] += v;
                m[(i, i)] -= v;
                m[(j, j)] -= v;
            }
        }
        Self { a, b }
    }

    /// `diag(A, B)` in rearranged coordinates.
    pub fn assemble(&self) -> DMatrix<T> {
        let n = self.a.nrows();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.a);
        h.view_mut((n, n), (n, n)).copy_from(&self.b);
        h
    }
}

/// Largest `|y|` relative to the configuration's extent.
fn misalignment<T: Scalar>(p: &Configuration<T>) -> T {
    let extent = p
        .points()
        .iter()
        .fold(T::zero(), |m, q| m.max(q.x.abs()).max(q.y.abs()))
        .max(T::one());
    p.points().iter().fold(T::zero(), |m, q| m.max(q.y.abs())) / extent
}

/// Rotates and translates a line configuration onto the x-axis, leftmost
/// of the two farthest agents at the origin.
pub fn align_line<T: Scalar>(p: &Configuration<T>) -> (Configuration<T>, Se2<T>) {
    let pts = p.points();
    let mut best = (0, 0, T::zero());
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[j] - pts[i]).norm_squared();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, _) = best;
    if i == j {
        return (p.clone(), Se2::identity());
    }
    let dir = pts[j] - pts[i];
    let rot = Se2::rotation(-dir.y.atan2(dir.x));
    let g = Se2::new(rot.theta, -rot.rotate(&pts[i]));
    let mut out = g.apply(p);
    for q in out.points_mut() {
        q.y = T::zero();
    }
    out.points_mut()[i] = Point::zeros();
    (out, g)
}

/// `A_ij = (x f_ij)'(d_ij)`, `B_ij = f_ij(d_ij)` on edges; requires every
/// `y_i` to vanish (relative tolerance `1e-9`).
pub fn line_block_hessian<T: Scalar>(
    system: &FormationSystem<T>,
    p_aligned: &Configuration<T>,
) -> Result<LineBlockHessian<T>, DynamicsError> {
    p_aligned.check_len(system.agent_count())?;
    let off = misalignment(p_aligned);
    if off > T::lit(1e-9) {
        return Err(DynamicsError::NotAligned(off.as_f64()));
    }
    if let Some(e) = p_aligned.collision(system.graph()) {
        return Err(DynamicsError::Collision(e));
    }
    let values: Vec<(Edge, T, T)> = system
        .graph()
        .edges()
        .iter()
        .zip(system.laws())
        .map(|(e, law)| {
            let d = p_aligned.distance(e.lo(), e.hi());
            (*e, law.force_derivative(d), law.gain(d))
        })
        .collect();
    Ok(LineBlockHessian::from_edge_values(system.agent_count(), &values))
}

/// Translations along x and y and the infinitesimal rotation, in rearranged
/// coordinates: `(e, 0)`, `(0, e)`, `(0, a)` with `a` the x-coordinates.
pub fn rigid_motion_null_vectors<T: Scalar>(p_aligned: &Configuration<T>) -> [DVector<T>; 3] {
    let n = p_aligned.len();
    let mut ta = DVector::zeros(2 * n);
    let mut tb = DVector::zeros(2 * n);
    let mut rp = DVector::zeros(2 * n);
    for (i, q) in p_aligned.points().iter().enumerate() {
        ta[i] = T::one();
        tb[n + i] = T::one();
        rp[n + i] = q.x;
    }
    [ta, tb, rp]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    UnstableSaddle,
    Degenerate,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::UnstableSaddle => "unstable-saddle",
            Stability::Degenerate => "degenerate",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitClassification<T> {
    pub verdict: Stability,
    pub signature: Signature,
    pub eigenvalues: Vec<T>,
}

impl<T> OrbitClassification<T> {
    /// `n₋`.
    pub fn morse_index(&self) -> usize {
        self.signature.n_minus
    }

    /// `n₊`.
    pub fn co_index(&self) -> usize {
        self.signature.n_plus
    }
}

/// Stable iff the signature is `(0, 2N−3, 3)`; degenerate when more than
/// three eigenvalues vanish; otherwise a saddle.
pub fn classify_orbit<T: Scalar>(
    system: &FormationSystem<T>,
    p_equilibrium: &Configuration<T>,
    zero_tol: ZeroTol<T>,
) -> Result<OrbitClassification<T>, DynamicsError> {
    let spec = spectrum(&hessian(system, p_equilibrium)?, zero_tol);
    Ok(classify_spectrum(system.agent_count(), spec))
}

pub(crate) fn classify_spectrum<T>(n: usize, spec: Spectrum<T>) -> OrbitClassification<T> {
    let sig = spec.signature;
    let verdict = if sig.n_zero > 3 {
        Stability::Degenerate
    } else if sig.triple() == (0, 2 * n - 3, 3) {
        Stability::Stable
    } else {
        Stability::UnstableSaddle
    };
    OrbitClassification {
        verdict,
        signature: sig,
        eigenvalues: spec.eigenvalues,
    }
}
