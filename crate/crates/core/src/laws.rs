//! Pairwise interaction laws `f(d) = u(d, d̄)` and numerical checks of the
//! admissibility conditions: `(x f(x))' > 0` with a unique zero, and
//! `∫_x^1 t f(t) dt → -∞` as `x → 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::LawError;
use crate::quadrature::adaptive_simpson;
use crate::scalar::Scalar;

/// Absolute tolerance used when an edge potential has no closed form.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// A scalar interaction law attached to one edge.
pub trait InteractionLaw<T: Scalar>: Send + Sync {
    /// Target distance `d̄`, the unique zero of the gain.
    fn target(&self) -> T;

    /// `f(d)`: the gain multiplying `x_j - x_i`.
    fn gain(&self, d: T) -> T;

    /// `f'(d)`.
    fn gain_derivative(&self, d: T) -> T;

    /// `∫_1^d t f(t) dt`. Falls back to adaptive quadrature.
    fn edge_potential(&self, d: T) -> T {
        adaptive_simpson(|t| t * self.gain(t), T::one(), d, T::lit(QUADRATURE_TOL))
    }

    /// `(x f(x))'` at `d`: the along-edge stiffness.
    fn force_derivative(&self, d: T) -> T {
        self.gain(d) + d * self.gain_derivative(d)
    }
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Serializable description of a law family; the target is supplied per edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LawFamily {
    /// `f(d) = (d² - d̄²) / d²`.
    Standard,
    /// `f(d) = 1 - (d̄ / d)^k`; `k = 2` is the standard law.
    InversePower { exponent: f64 },
    /// `f(d) = d - d̄`. Fails both admissibility conditions near zero.
    Affine,
}

impl LawFamily {
    pub fn parse(name: &str, exponent: Option<f64>) -> Result<Self, LawError> {
        match name {
            "standard" => Ok(LawFamily::Standard),
            "inverse_power" => Ok(LawFamily::InversePower {
                exponent: exponent.unwrap_or(2.0),
            }),
            "affine" => Ok(LawFamily::Affine),
            other => Err(LawError::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LawFamily::Standard => "standard",
            LawFamily::InversePower { .. } => "inverse_power",
            LawFamily::Affine => "affine",
        }
    }

    pub fn instantiate<T: Scalar>(&self, target: T) -> Result<Law<T>, LawError> {
        match *self {
            LawFamily::Standard => Law::standard(target),
            LawFamily::InversePower { exponent } => Law::inverse_power(target, T::lit(exponent)),
            LawFamily::Affine => Law::affine(target),
        }
    }
}

/// Concrete law: one of the closed-form families, or user-supplied closures.
#[derive(Clone)]
pub enum Law<T: Scalar> {
    InversePower { target: T, exponent: T },
    Affine { target: T },
    Custom(CustomLaw<T>),
}

/// A law given by closures; without an antiderivative the edge potential is
/// computed by quadrature.
#[derive(Clone)]
pub struct CustomLaw<T: Scalar> {
    pub target: T,
    pub gain: ScalarFn<T>,
    pub gain_derivative: ScalarFn<T>,
    pub edge_potential: Option<ScalarFn<T>>,
}

impl<T: Scalar> Law<T> {
    pub fn standard(target: T) -> Result<Self, LawError> {
        Self::inverse_power(target, T::lit(2.0))
    }

    pub fn inverse_power(target: T, exponent: T) -> Result<Self, LawError> {
        check_target(target)?;
        if !(exponent >= T::one()) {
            return Err(LawError::BadExponent(exponent.as_f64()));
        }
        Ok(Law::InversePower { target, exponent })
    }

    pub fn affine(target: T) -> Result<Self, LawError> {
        check_target(target)?;
        Ok(Law::Affine { target })
    }

    pub fn custom<F, G>(target: T, gain: F, gain_derivative: G) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        G: Fn(T) -> T + Send + Sync + 'static,
    {
        Law::Custom(CustomLaw {
            target,
            gain: Arc::new(gain),
            gain_derivative: Arc::new(gain_derivative),
            edge_potential: None,
        })
    }

    /// The same law shape re-targeted; custom laws keep their closures.
    pub fn family(&self) -> Option<LawFamily> {
        match self {
            Law::InversePower { exponent, .. } if *exponent == T::lit(2.0) => Some(LawFamily::Standard),
            Law::InversePower { exponent, .. } => Some(LawFamily::InversePower {
                exponent: exponent.as_f64(),
            }),
            Law::Affine { .. } => Some(LawFamily::Affine),
            Law::Custom(_) => None,
        }
    }

    pub fn has_closed_form_potential(&self) -> bool {
        !matches!(self, Law::Custom(CustomLaw { edge_potential: None, .. }))
    }
}

fn check_target<T: Scalar>(target: T) -> Result<(), LawError> {
    if target > T::zero() && target.is_finite() {
        Ok(())
    } else {
        Err(LawError::NonPositiveTarget(target.as_f64()))
    }
}

impl<T: Scalar> fmt::Debug for Law<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::InversePower { target, exponent } => f
                .debug_struct("InversePower")
                .field("target", target)
                .field("exponent", exponent)
                .finish(),
            Law::Affine { target } => f.debug_struct("Affine").field("target", target).finish(),
            Law::Custom(c) => f
                .debug_struct("Custom")
                .field("target", &c.target)
                .field("closed_form_potential", &c.edge_potential.is_some())
                .finish(),
        }
    }
}

impl<T: Scalar> InteractionLaw<T> for Law<T> {
    fn target(&self) -> T {
        match self {
            Law::InversePower { target, .. } | Law::Affine { target } => *target,
            Law::Custom(c) => c.target,
        }
    }

    fn gain(&self, d: T) -> T {
        match self {
            Law::InversePower { target, exponent } => T::one() - (*target / d).powf(*exponent),
            Law::Affine { target } => d - *target,
            Law::Custom(c) => (c.gain)(d),
        }
    }

    fn gain_derivative(&self, d: T) -> T {
        match self {
            Law::InversePower { target, exponent } => {
                *exponent * target.powf(*exponent) / d.powf(*exponent + T::one())
            }
            Law::Affine { .. } => T::one(),
            Law::Custom(c) => (c.gain_derivative)(d),
        }
    }

    fn edge_potential(&self, d: T) -> T {
        let half = T::lit(0.5);
        match self {
            Law::InversePower { target, exponent } => {
                let two = T::lit(2.0);
                let quadratic = (d * d - T::one()) * half;
                if *exponent == two {
                    quadratic - *target * *target * d.ln()
                } else {
                    let p = two - *exponent;
                    quadratic - target.powf(*exponent) * (d.powf(p) - T::one()) / p
                }
            }
            Law::Affine { target } => {
                (d * d * d - T::one()) / T::lit(3.0) - *target * (d * d - T::one()) * half
            }
            Law::Custom(c) => match &c.edge_potential {
                Some(phi) => phi(d),
                None => adaptive_simpson(|t| t * (c.gain)(t), T::one(), d, T::lit(QUADRATURE_TOL)),
            },
        }
    }
}

/// Log-spaced grid over `[d̄/10, 10 d̄]`.
pub fn default_grid<T: Scalar>(target: T, points: usize) -> Vec<T> {
    let points = points.max(2);
    let lo = (target / T::lit(10.0)).ln();
    let hi = (target * T::lit(10.0)).ln();
    let mut grid: Vec<T> = (0..points)
        .map(|i| (lo + (hi - lo) * T::count(i) / T::count(points - 1)).exp())
        .collect();
    grid[0] = target / T::lit(10.0);
    grid[points - 1] = target * T::lit(10.0);
    grid
}

/// Outcome of sampling `(x f(x))'` and the sign of `f` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport<T> {
    pub ok: bool,
    /// `(x, (x f(x))')` per grid point.
    pub samples: Vec<(T, T)>,
    /// Grid points where `(x f(x))' <= 0`.
    pub flagged: Vec<T>,
    pub sign_changes: usize,
}

/// Samples of `∫_x^1 t f(t) dt` along a probe approaching zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionBarrierReport<T> {
    pub ok: bool,
    /// `(x_k, ∫_{x_k}^1 t f(t) dt)`.
    pub samples: Vec<(T, T)>,
    pub monotone: bool,
    /// Decrease per unit `ln x` over the last probe interval divided by the
    /// same quantity over the first; stays near or above one for a
    /// divergent integral and collapses to zero for a bounded one.
    pub tail_rate_ratio: T,
}

/// Combined admissibility report for one law.
#[derive(Clone, Debug, PartialEq)]
pub struct LawValidationReport<T> {
    pub c1: MonotonicityReport<T>,
    pub c2: CollisionBarrierReport<T>,
}

impl<T> LawValidationReport<T> {
    pub fn c1_ok(&self) -> bool {
        self.c1.ok
    }

    pub fn c2_trend_ok(&self) -> bool {
        self.c2.ok
    }
}

/// Checks monotonicity of the pairwise force `x f(x)` and uniqueness of the
/// zero of `f` on `grid`. The grid must be sorted, positive and cover
/// `[d̄/10, 10 d̄]`.
pub fn check_monotone_force<T: Scalar, L: InteractionLaw<T> + ?Sized>(
    law: &L,
    grid: &[T],
) -> Result<MonotonicityReport<T>, LawError> {
    let target = law.target();
    let sorted = grid.windows(2).all(|w| w[0] < w[1]);
    let covers = match (grid.first(), grid.last()) {
        (Some(&lo), Some(&hi)) => {
            lo > T::zero() && lo <= target / T::lit(10.0) && hi >= target * T::lit(10.0)
        }
        _ => false,
    };
    if !sorted || !covers {
        return Err(LawError::GridTooNarrow);
    }
    let samples: Vec<(T, T)> = grid.iter().map(|&x| (x, law.force_derivative(x))).collect();
    let flagged: Vec<T> = samples
        .iter()
        .filter(|(_, dxf)| !(*dxf > T::zero()))
        .map(|(x, _)| *x)
        .collect();

    let mut sign_changes = 0;
    let mut last_sign = 0i8;
    for &x in grid {
        let v = law.gain(x);
        let s = if v > T::zero() {
            1
        } else if v < T::zero() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                sign_changes += 1;
            }
            last_sign = s;
        }
    }
    Ok(MonotonicityReport {
        ok: flagged.is_empty() && sign_changes == 1,
        samples,
        flagged,
        sign_changes,
    })
}

/// Probes whether `∫_x^1 t f(t) dt` decreases without bound as `x → 0`
/// along `probe` (strictly decreasing, positive, at least two points).
pub fn check_collision_barrier<T: Scalar, L: InteractionLaw<T> + ?Sized>(
    law: &L,
    probe: &[T],
) -> Result<CollisionBarrierReport<T>, LawError> {
    if probe.len() < 2 {
        return Err(LawError::InsufficientProbe(probe.len()));
    }
    if let Some(bad) = probe.iter().position(|&x| !(x > T::zero())) {
        return Err(LawError::MalformedProbe(bad));
    }
    if let Some(bad) = probe.windows(2).position(|w| !(w[1] < w[0])) {
        return Err(LawError::MalformedProbe(bad + 1));
    }
    let samples: Vec<(T, T)> = probe.iter().map(|&x| (x, -law.edge_potential(x))).collect();
    let monotone = samples.windows(2).all(|w| w[1].1 < w[0].1);
    let rate = |a: (T, T), b: (T, T)| (a.1 - b.1) / (a.0 / b.0).ln();
    let head = rate(samples[0], samples[1]);
    let tail = rate(samples[samples.len() - 2], samples[samples.len() - 1]);
    let tail_rate_ratio = if head > T::zero() { tail / head } else { T::zero() };
    Ok(CollisionBarrierReport {
        ok: monotone && tail_rate_ratio >= T::lit(0.5),
        samples,
        monotone,
        tail_rate_ratio,
    })
}

/// Runs both checks.
pub fn validate_law<T: Scalar, L: InteractionLaw<T> + ?Sized>(
    law: &L,
    grid: &[T],
    probe: &[T],
) -> Result<LawValidationReport<T>, LawError> {
    Ok(LawValidationReport {
        c1: check_monotone_force(law, grid)?,
        c2: check_collision_barrier(law, probe)?,
    })
}

/// `{1e-1, 1e-2, …, 1e-8}` scaled by `d̄`.
pub fn default_probe<T: Scalar>(target: T) -> Vec<T> {
    (1..=8).map(|k| target * T::lit(10f64.powi(-k))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simpson_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson with a fixed, large panel count
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn standard_law_values() {
        let law = Law::standard(1.0).unwrap();
        assert_eq!(law.gain(1.0), 0.0);
        assert_relative_eq!(law.gain(2.0), 0.75, epsilon = 1e-15);
        assert_relative_eq!(law.gain_derivative(2.0), 2.0 / 8.0, epsilon = 1e-15);
        let oracle = simpson_oracle(|t| t * (t * t - 1.0) / (t * t), 1.0, 2.0, 20_000);
        assert_relative_eq!(oracle, 0.806853, epsilon = 1e-6);
        assert_relative_eq!(law.edge_potential(2.0), oracle, epsilon = 1e-9);
    }

    #[test]
    fn standard_law_zero_is_exact_for_any_target() {
        for target in [0.3, 1.0, 2.5, 7.0] {
            let law = Law::standard(target).unwrap();
            assert_eq!(law.gain(target), 0.0);
        }
    }

    #[test]
    fn rejects_bad_target() {
        assert!(matches!(Law::standard(0.0), Err(LawError::NonPositiveTarget(_))));
        assert!(matches!(Law::<f64>::affine(-1.0), Err(LawError::NonPositiveTarget(_))));
    }

    #[test]
    fn custom_law_quadrature_matches_closed_form() {
        let closed = Law::standard(1.3).unwrap();
        let custom = Law::custom(1.3, |d: f64| 1.0 - 1.69 / (d * d), |d: f64| 2.0 * 1.69 / (d * d * d));
        assert!(!custom.has_closed_form_potential());
        for d in [0.05, 0.4, 1.0, 2.0, 6.0] {
            assert_relative_eq!(custom.edge_potential(d), closed.edge_potential(d), epsilon = 1e-9);
        }
    }

    #[test]
    fn inverse_power_potential_matches_quadrature() {
        let law = Law::inverse_power(0.8, 3.0).unwrap();
        for d in [0.2, 0.9, 3.0] {
            let q = simpson_oracle(|t| t * law.gain(t), 1.0, d, 200_000);
            assert_relative_eq!(law.edge_potential(d), q, epsilon = 1e-8);
        }
    }

    #[test]
    fn c1_standard_passes() {
        let law = Law::standard(1.0).unwrap();
        let grid = default_grid(1.0, 100);
        let r = check_monotone_force(&law, &grid).unwrap();
        assert!(r.ok);
        assert_eq!(r.sign_changes, 1);
        for (x, dxf) in &r.samples {
            assert_relative_eq!(*dxf, 1.0 + 1.0 / (x * x), max_relative = 1e-12);
        }
    }

    #[test]
    fn c1_decreasing_law_fails() {
        let law = Law::custom(1.0, |d: f64| -d, |_| -1.0);
        let r = check_monotone_force(&law, &default_grid(1.0, 50)).unwrap();
        assert!(!r.ok);
        assert_eq!(r.flagged.len(), 50);
    }

    #[test]
    fn c1_affine_flags_points_below_half_target() {
        let law = Law::affine(1.0).unwrap();
        let grid = default_grid(1.0, 101);
        let r = check_monotone_force(&law, &grid).unwrap();
        let below: Vec<f64> = grid.iter().copied().filter(|&x| x <= 0.5).collect();
        assert!(!below.is_empty());
        assert_eq!(r.flagged, below);
        assert_eq!(r.sign_changes, 1);
        assert!(!r.ok);
        assert!(r.samples.iter().filter(|(x, _)| *x > 0.5).all(|(_, d)| *d > 0.0));
    }

    #[test]
    fn c1_rejects_narrow_grid() {
        let law = Law::standard(1.0).unwrap();
        assert_eq!(
            check_monotone_force(&law, &[0.5, 1.0, 2.0]).unwrap_err(),
            LawError::GridTooNarrow
        );
    }

    #[test]
    fn c2_standard_diverges() {
        let law = Law::standard(1.0).unwrap();
        let r = check_collision_barrier(&law, &default_probe(1.0)).unwrap();
        assert!(r.ok && r.monotone);
        for (x, v) in &r.samples {
            assert_relative_eq!(*v, -((x * x - 1.0) / 2.0 - f64::ln(*x)), max_relative = 1e-12);
        }
    }

    #[test]
    fn c2_affine_is_bounded() {
        let law = Law::affine(1.0).unwrap();
        let r = check_collision_barrier(&law, &default_probe(1.0)).unwrap();
        assert!(!r.ok);
        // bounded by the closed form limit 1/3 - 1/2
        assert!(r.samples.iter().all(|(_, v)| *v > -1.0 / 6.0 - 1e-12));
    }

    #[test]
    fn c2_weak_inverse_power_is_bounded() {
        let law = Law::inverse_power(1.0, 1.5).unwrap();
        assert!(!check_collision_barrier(&law, &default_probe(1.0)).unwrap().ok);
        let law = Law::inverse_power(1.0, 3.0).unwrap();
        assert!(check_collision_barrier(&law, &default_probe(1.0)).unwrap().ok);
    }

    #[test]
    fn c2_probe_too_short() {
        let law = Law::standard(1.0).unwrap();
        assert_eq!(
            check_collision_barrier(&law, &[0.1]).unwrap_err(),
            LawError::InsufficientProbe(1)
        );
        assert_eq!(
            check_collision_barrier(&law, &[0.1, 0.2]).unwrap_err(),
            LawError::MalformedProbe(1)
        );
    }

    #[test]
    fn family_round_trip() {
        for fam in [LawFamily::Standard, LawFamily::Affine, LawFamily::InversePower { exponent: 3.0 }] {
            let law: Law<f64> = fam.instantiate(1.5).unwrap();
            assert_eq!(law.family(), Some(fam));
            assert_eq!(LawFamily::parse(fam.name(), Some(3.0)).unwrap().name(), fam.name());
        }
        assert!(LawFamily::parse("sigmoid", None).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let law = Law::<f32>::standard(1.0).unwrap();
        assert!((law.gain(2.0) - 0.75).abs() < 1e-6);
        assert!((law.edge_potential(2.0) - 0.806_853).abs() < 1e-5);
    }
}
