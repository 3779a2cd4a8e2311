//! Newton refinement of equilibria: gauge-fixed in the plane, and on a line.

use nalgebra::{DMatrix, DVector};

use crate::error::DynamicsError;
use crate::geometry::{canonical_frame, Configuration, Point};
use crate::laws::InteractionLaw;
use crate::scalar::Scalar;
use crate::system::FormationSystem;

/// How an equilibrium was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementMethod {
    /// Input already had zero residual.
    Exact,
    /// Planar Newton with agent 1 pinned and agent 2 on the x-axis.
    GaugeNewton { iterations: usize },
    /// One-dimensional Newton on the balance equations of a line.
    LineNewton { iterations: usize },
    /// Integrator output, not refined.
    Integrator,
}

impl RefinementMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            RefinementMethod::Exact => "exact",
            RefinementMethod::GaugeNewton { .. } => "gauge-newton",
            RefinementMethod::LineNewton { .. } => "line-newton",
            RefinementMethod::Integrator => "integrator",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumRecord<T: Scalar> {
    pub configuration: Configuration<T>,
    /// `‖∇Φ‖_∞`.
    pub residual: T,
    pub method: RefinementMethod,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions<T> {
    /// Declared equilibrium tolerance on `‖∇Φ‖_∞`.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            max_iterations: 80,
        }
    }
}

/// Refinement that missed the tolerance; `input` is the unmodified start.
#[derive(Clone, Debug)]
pub struct RefinementFailure<T: Scalar> {
    pub input: EquilibriumRecord<T>,
    pub error: DynamicsError,
}

/// Sharpens an approximate equilibrium with Newton's method on `∇Φ = 0`.
///
/// The three rigid-motion directions are removed by working in the frame
/// where agent 1 sits at the origin and agent 2 on the positive x-axis and
/// holding those three coordinates fixed. The result is mapped back to the
/// caller's frame.
pub fn refine_equilibrium<T: Scalar>(
    system: &FormationSystem<T>,
    p_near: &Configuration<T>,
    options: &NewtonOptions<T>,
) -> Result<EquilibriumRecord<T>, RefinementFailure<T>> {
    let residual0 = match system.residual(p_near) {
        Ok(r) => r,
        Err(error) => {
            return Err(RefinementFailure {
                input: EquilibriumRecord {
                    configuration: p_near.clone(),
                    residual: T::lit(f64::INFINITY),
                    method: RefinementMethod::Integrator,
                },
                error,
            })
        }
    };
    let input = EquilibriumRecord {
        configuration: p_near.clone(),
        residual: residual0,
        method: RefinementMethod::Integrator,
    };
    if residual0 == T::zero() {
        return Ok(EquilibriumRecord {
            method: RefinementMethod::Exact,
            ..input
        });
    }
    let frame = match canonical_frame(p_near) {
        Ok(f) => f,
        Err(e) => {
            return Err(RefinementFailure {
                input,
                error: e.into(),
            })
        }
    };
    let n = system.agent_count();
    let free: Vec<usize> = (2..2 * n).filter(|&k| k != 3).collect();
    let mut q = frame.apply(p_near);
    q.points_mut()[0] = Point::zeros();
    q.points_mut()[1].y = T::zero();

    let norm2 = |g: &[T]| g.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    let mut grad = system.gradient(&q).expect("canonical frame keeps P_G");
    let mut residual = crate::scalar::sup_norm(&grad);
    let goal = options.tolerance * T::lit(1e-2);
    let mut iterations = 0;
    while residual > goal && iterations < options.max_iterations {
        iterations += 1;
        let h = system.potential_hessian(&q).expect("iterate stays in P_G");
        let hf = DMatrix::from_fn(free.len(), free.len(), |r, c| h[(free[r], free[c])]);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&k| -grad[k]));
        let Some(delta) = solve(hf, rhs) else { break };
        let current = norm2(&grad);
        let mut alpha = T::one();
        let mut accepted = None;
        while alpha > T::lit(1e-6) {
            let mut flat = q.to_flat();
            for (slot, &k) in free.iter().enumerate() {
                flat[k] += alpha * delta[slot];
            }
            let cand = Configuration::from_flat(&flat);
            if let Ok(g) = system.gradient(&cand) {
                if g.iter().all(|v| v.is_finite()) && norm2(&g) < current {
                    accepted = Some((cand, g));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((cand, g)) => {
                q = cand;
                grad = g;
                residual = crate::scalar::sup_norm(&grad);
            }
            None => break,
        }
    }
    if residual <= options.tolerance {
        let back = frame.inverse().apply(&q);
        let residual = system.residual(&back).unwrap_or(residual);
        Ok(EquilibriumRecord {
            configuration: back,
            residual,
            method: RefinementMethod::GaugeNewton { iterations },
        })
    } else {
        Err(RefinementFailure {
            input,
            error: DynamicsError::RefinementFailed {
                residual: residual.as_f64(),
            },
        })
    }
}

fn solve<T: Scalar>(m: DMatrix<T>, rhs: DVector<T>) -> Option<DVector<T>> {
    if let Some(x) = m.clone().lu().solve(&rhs) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let x = m.svd(true, true).solve(&rhs, T::lit(1e-14)).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Permutations of `0..n` with the first entry smaller than the last: one
/// representative per pair of mirror-image orderings.
pub fn line_orderings(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if prefix.len() == n {
            if n < 2 || prefix[0] < prefix[n - 1] {
                out.push(prefix.clone());
            }
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Relative spacings of the equispaced starts, in units of the mean target.
const START_SPACINGS: [f64; 8] = [0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

/// Equilibria with every agent on the x-axis in the given left-to-right
/// order. Damped Newton on the one-dimensional balance equations from
/// several equispaced starts; distinct converged solutions that respect the
/// ordering are returned, leftmost agent at the origin.
pub fn find_line_equilibria<T: Scalar>(
    system: &FormationSystem<T>,
    ordering: &[usize],
    options: &NewtonOptions<T>,
) -> Result<Vec<EquilibriumRecord<T>>, DynamicsError> {
    let n = system.agent_count();
    let mut seen = vec![false; n];
    if ordering.len() != n || ordering.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(DynamicsError::BadOrdering(n));
    }
    let targets = system.targets();
    let mean = targets.iter().fold(T::zero(), |s, (_, d)| s + d) / T::count(system.graph().edge_count());

    let mut found: Vec<EquilibriumRecord<T>> = Vec::new();
    for spacing in START_SPACINGS {
        let mut x = vec![T::zero(); n];
        for (rank, &agent) in ordering.iter().enumerate() {
            x[agent] = T::count(rank) * T::lit(spacing) * mean;
        }
        let Some((x, iterations)) = line_newton(system, x, ordering[0], options) else {
            continue;
        };
        if !ordering.windows(2).all(|w| x[w[0]] < x[w[1]]) {
            continue;
        }
        let p = Configuration::new(x.iter().map(|&v| Point::new(v, T::zero())).collect());
        let Ok(residual) = system.residual(&p) else { continue };
        if residual > options.tolerance {
            continue;
        }
        let scale = mean * T::lit(1e-6);
        let duplicate = found.iter().any(|r| {
            r.configuration
                .points()
                .iter()
                .zip(p.points())
                .all(|(a, b)| (a.x - b.x).abs() < scale)
        });
        if !duplicate {
            found.push(EquilibriumRecord {
                configuration: p,
                residual,
                method: RefinementMethod::LineNewton { iterations },
            });
        }
    }
    Ok(found)
}

fn line_newton<T: Scalar>(
    system: &FormationSystem<T>,
    mut x: Vec<T>,
    pinned: usize,
    options: &NewtonOptions<T>,
) -> Option<(Vec<T>, usize)> {
    let n = x.len();
    let free: Vec<usize> = (0..n).filter(|&v| v != pinned).collect();
    let eval = |x: &[T]| -> Option<(Vec<T>, DMatrix<T>)> {
        let mut g = vec![T::zero(); n];
        let mut jac = DMatrix::zeros(n, n);
        for (e, law) in system.graph().edges().iter().zip(system.laws()) {
            let (i, j) = (e.lo(), e.hi());
            let delta = x[i] - x[j];
            let d = delta.abs();
            if d == T::zero() {
                return None;
            }
            let push = law.gain(d) * delta;
            let stiff = law.force_derivative(d);
            g[i] += push;
            g[j] -= push;
            jac[(i, i)] += stiff;
            jac[(j, j)] += stiff;
            jac[(i, j)] -= stiff;
            jac[(j, i)] -= stiff;
        }
        g.iter().all(|v| v.is_finite()).then_some((g, jac))
    };
    let norm2 = |g: &[T]| g.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    let goal = options.tolerance * T::lit(1e-2);
    let (mut g, mut jac) = eval(&x)?;
    for it in 0..options.max_iterations {
        if crate::scalar::sup_norm(&g) <= goal {
            return Some((x, it));
        }
        let jf = DMatrix::from_fn(free.len(), free.len(), |r, c| jac[(free[r], free[c])]);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&k| -g[k]));
        let delta = solve(jf, rhs)?;
        let current = norm2(&g);
        let mut alpha = T::one();
        let mut next = None;
        while alpha > T::lit(1e-8) {
            let mut cand = x.clone();
            for (slot, &k) in free.iter().enumerate() {
                cand[k] += alpha * delta[slot];
            }
            if let Some((cg, cj)) = eval(&cand) {
                if norm2(&cg) < current {
                    next = Some((cand, cg, cj));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        let (cx, cg, cj) = next?;
        x = cx;
        g = cg;
        jac = cj;
    }
    (crate::scalar::sup_norm(&g) <= options.tolerance).then_some((x, options.max_iterations))
}
