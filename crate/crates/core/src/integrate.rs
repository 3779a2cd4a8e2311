//! Adaptive Dormand–Prince 5(4) integration of the gradient flow.

use crate::error::DynamicsError;
use crate::geometry::Configuration;
use crate::scalar::Scalar;
use crate::system::FormationSystem;

/// Integrator and stopping controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationControls<T> {
    pub rtol: T,
    pub atol: T,
    /// Stop once `‖∇Φ‖_∞` falls below this.
    pub equilibrium_tol: T,
    /// Spacing of recorded snapshots; steps are clipped to land on them.
    pub sample_interval: T,
    pub initial_step: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for IntegrationControls<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-10),
            equilibrium_tol: T::lit(1e-7),
            sample_interval: T::lit(0.5),
            initial_step: T::lit(1e-2),
            max_steps: 2_000_000,
        }
    }
}

/// Sampled solution of the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar> {
    pub times: Vec<T>,
    pub states: Vec<Configuration<T>>,
    pub potentials: Vec<T>,
    pub gradient_norms: Vec<T>,
    /// True when the run stopped on the equilibrium tolerance.
    pub converged: bool,
    pub steps_taken: usize,
}

impl<T: Scalar> Trajectory<T> {
    fn push(&mut self, t: T, state: Configuration<T>, potential: T, grad: T) {
        self.times.push(t);
        self.states.push(state);
        self.potentials.push(potential);
        self.gradient_norms.push(grad);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Configuration<T> {
        self.states.last().expect("trajectory has an initial snapshot")
    }

    pub fn final_residual(&self) -> T {
        *self.gradient_norms.last().expect("trajectory has an initial snapshot")
    }
}

/// A failed run: the error plus everything recorded up to the last valid
/// state (which is always the final snapshot).
#[derive(Clone, Debug)]
pub struct IntegrationFailure<T: Scalar> {
    pub error: DynamicsError,
    pub partial: Trajectory<T>,
}

// Dormand–Prince tableau (the flow is autonomous, so nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are A[6]; difference to the embedded fourth-order ones
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn flow<T: Scalar>(system: &FormationSystem<T>, y: &[T]) -> Option<Vec<T>> {
    let p = Configuration::from_flat(y);
    if p.collision(system.graph()).is_some() {
        return None;
    }
    let v: Vec<T> = system
        .vector_field_unchecked(&p)
        .iter()
        .flat_map(|v| [v.x, v.y])
        .collect();
    v.iter().all(|x| x.is_finite()).then_some(v)
}

fn sup<T: Scalar>(v: &[T]) -> T {
    crate::scalar::sup_norm(v)
}

/// Integrates `ẋ = −∇Φ` from `p0` up to time `horizon`, stopping early on
/// the equilibrium tolerance.
pub fn integrate<T: Scalar>(
    system: &FormationSystem<T>,
    p0: &Configuration<T>,
    horizon: T,
    controls: &IntegrationControls<T>,
) -> Result<Trajectory<T>, IntegrationFailure<T>> {
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        potentials: Vec::new(),
        gradient_norms: Vec::new(),
        converged: false,
        steps_taken: 0,
    };
    let fail = |error: DynamicsError, traj: Trajectory<T>| IntegrationFailure {
        error,
        partial: traj,
    };
    if !(horizon > T::zero()) {
        return Err(fail(DynamicsError::BadHorizon, traj));
    }
    let phi0 = match system.potential(p0) {
        Ok(v) => v,
        Err(e) => return Err(fail(e, traj)),
    };
    let mut y = p0.to_flat();
    let mut k1 = flow(system, &y).expect("checked: p0 in configuration space");
    let mut grad = sup(&k1);
    traj.push(T::zero(), p0.clone(), phi0, grad);
    if grad < controls.equilibrium_tol {
        traj.converged = true;
        return Ok(traj);
    }

    let dim = y.len();
    let mut t = T::zero();
    let mut h = controls.initial_step.min(horizon);
    let mut next_sample = controls.sample_interval.min(horizon);
    let mut stages: Vec<Vec<T>> = vec![vec![T::zero(); dim]; 7];
    let mut trial = vec![T::zero(); dim];
    let safety = T::lit(0.9);
    let fifth = T::lit(0.2);

    while traj.steps_taken < controls.max_steps {
        let h_min = T::lit(1e-14) * t.abs().max(T::one());
        if h < h_min {
            return Err(fail(
                DynamicsError::StepUnderflow { time: t.as_f64() },
                traj,
            ));
        }
        let clipped = next_sample - t <= h;
        let step = if clipped { next_sample - t } else { h };

        stages[0].clone_from(&k1);
        let mut ok = true;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = T::zero();
                for (r, stage) in stages.iter().enumerate().take(s) {
                    let a = A[s][r];
                    if a != 0.0 {
                        acc += T::lit(a) * stage[i];
                    }
                }
                trial[i] = y[i] + step * acc;
            }
            match flow(system, &trial) {
                Some(k) => stages[s] = k,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        // trial now holds the fifth-order solution (stage 7 is evaluated at it)
        let err = if ok {
            let mut worst = T::zero();
            for i in 0..dim {
                let mut e = T::zero();
                for (s, stage) in stages.iter().enumerate() {
                    if E[s] != 0.0 {
                        e += T::lit(E[s]) * stage[i];
                    }
                }
                let scale = controls.atol + controls.rtol * y[i].abs().max(trial[i].abs());
                worst = worst.max((step * e).abs() / scale);
            }
            worst
        } else {
            T::lit(f64::INFINITY)
        };

        if !(err <= T::one()) {
            let factor = if err.is_finite() {
                (safety * err.powf(-fifth)).max(T::lit(0.2))
            } else {
                T::lit(0.25)
            };
            h = step * factor;
            continue;
        }

        traj.steps_taken += 1;
        t += step;
        y.clone_from(&trial);
        k1.clone_from(&stages[6]);
        grad = sup(&k1);
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (safety * err.powf(-fifth)).min(T::lit(5.0)).max(T::lit(0.2))
        };
        if !clipped || factor < T::one() {
            h = step * factor;
        } else {
            h = h.max(step * factor);
        }

        let done = grad < controls.equilibrium_tol;
        let at_horizon = t >= horizon;
        if clipped || done || at_horizon {
            let state = Configuration::from_flat(&y);
            let phi = match system.potential(&state) {
                Ok(v) => v,
                Err(e) => return Err(fail(e, traj)),
            };
            traj.push(t, state, phi, grad);
            if clipped {
                next_sample = (next_sample + controls.sample_interval).min(horizon);
            }
        }
        if done {
            traj.converged = true;
            return Ok(traj);
        }
        if at_horizon {
            return Ok(traj);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{HennebergStep, TriangulatedLamanGraph};

    fn pair() -> FormationSystem<f64> {
        FormationSystem::uniform_standard(TriangulatedLamanGraph::base(), 1.0).unwrap()
    }

    #[test]
    fn equilibrium_start_stops_immediately() {
        let p = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0)]);
        let t = integrate(&pair(), &p, 10.0, &IntegrationControls::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.converged);
    }

    #[test]
    fn pair_matches_scalar_ode() {
        // d(d)/dt = -2 d f(d) = -2 (d² - 1)/d for the separation d.
        // Oracle: fine fixed-step RK4 on the scalar ODE.
        let p = Configuration::from_xy(&[(0.0, 0.0), (2.5, 0.0)]);
        let controls = IntegrationControls {
            equilibrium_tol: 0.0,
            ..IntegrationControls::default()
        };
        let traj = integrate(&pair(), &p, 1.0, &controls).unwrap();
        let rhs = |d: f64| -2.0 * (d * d - 1.0) / d;
        let (mut d, n) = (2.5f64, 100_000);
        let h = 1.0 / n as f64;
        for _ in 0..n {
            let k1 = rhs(d);
            let k2 = rhs(d + 0.5 * h * k1);
            let k3 = rhs(d + 0.5 * h * k2);
            let k4 = rhs(d + h * k3);
            d += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let fin = traj.final_state();
        assert!((*traj.times.last().unwrap() - 1.0).abs() < 1e-14);
        assert!((fin.distance(0, 1) - d).abs() < 1e-7, "{} vs {d}", fin.distance(0, 1));
    }

    #[test]
    fn potential_decreases_and_samples_are_regular() {
        let g = TriangulatedLamanGraph::build(&[HennebergStep::new(2, 0, 1)]).unwrap();
        let s = FormationSystem::uniform_standard(g, 1.0).unwrap();
        let p = Configuration::from_xy(&[(0.0, 0.0), (3.0, 0.2), (0.4, 2.0)]);
        let traj = integrate(&s, &p, 200.0, &IntegrationControls::default()).unwrap();
        assert!(traj.converged);
        for w in traj.potentials.windows(2) {
            assert!(w[1] < w[0] + 1e-12);
        }
        for (k, t) in traj.times.iter().enumerate().take(traj.len() - 1).skip(1) {
            assert!((t - 0.5 * k as f64).abs() < 1e-12);
        }
        let fin = traj.final_state();
        for e in s.graph().edges() {
            assert!((fin.distance(e.lo(), e.hi()) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bad_horizon_and_collision() {
        let p = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0)]);
        let e = integrate(&pair(), &p, 0.0, &IntegrationControls::default()).unwrap_err();
        assert_eq!(e.error, DynamicsError::BadHorizon);
        let q = Configuration::from_xy(&[(1.0, 0.0), (1.0, 0.0)]);
        let e = integrate(&pair(), &q, 1.0, &IntegrationControls::default()).unwrap_err();
        assert!(matches!(e.error, DynamicsError::Collision(_)));
        assert!(e.partial.is_empty());
    }
}
