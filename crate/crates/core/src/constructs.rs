//! Explicit counterexample builders: weights that break one of the
//! admissibility conditions come packaged with a piecewise-linear `u` and an
//! integrand for which the rearrangement inequality fails strictly.

use alloc::vec::Vec;
use core::fmt;

use crate::functional::Integrand;
use crate::math;
use crate::pl::PiecewiseLinear;
use crate::weight::{Weight, WeightError};

#[derive(Debug, Clone, PartialEq)]
pub enum ConstructError {
    /// The geometric parameters cannot produce the intended shape.
    InfeasibleSpec(&'static str),
    /// The required strict inequality failed at the given witness point.
    PreconditionFailed { y: f64, v: f64 },
    /// `2A <= A + delta`: the alpha bound is undefined.
    DegenerateBound,
    /// `alpha` outside `(1, alpha_max)`.
    AlphaOutOfRange { alpha: f64, alpha_max: f64 },
    Weight(WeightError),
}

impl fmt::Display for ConstructError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructError::InfeasibleSpec(msg) => write!(f, "infeasible parameters: {msg}"),
            ConstructError::PreconditionFailed { y, v } => {
                write!(f, "required strict inequality fails at (y, v) = ({y}, {v})")
            }
            ConstructError::DegenerateBound => write!(f, "2A <= A + delta: alpha bound undefined"),
            ConstructError::AlphaOutOfRange { alpha, alpha_max } => {
                write!(f, "alpha = {alpha} outside (1, {alpha_max})")
            }
            ConstructError::Weight(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConstructError {}

impl From<WeightError> for ConstructError {
    fn from(e: WeightError) -> Self {
        ConstructError::Weight(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// Odd part of the weight breaks the monotone inequality (F = p).
    Asymmetry,
    /// Near-linear power breaks it when the condition fails (F = p^alpha).
    Nonconcavity,
    /// Symmetric condition fails (F = p + gamma p^2).
    Nonconvexity,
}

/// Geometric and margin parameters of a counterexample instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleSpec {
    pub kind: CounterexampleKind,
    pub s: f64,
    pub t: f64,
    /// Ramp width.
    pub eps: f64,
    /// Violation margin of the strict inequality.
    pub delta: f64,
    /// Base level of `u`.
    pub vbar: f64,
    /// Known upper bound `A >= max a`; computed by grid maximization
    /// (with 10% inflation for non-grid weights) when absent.
    pub a_bound: Option<f64>,
}

impl CounterexampleSpec {
    fn validate(&self) -> Result<(), ConstructError> {
        if !(-1.0 <= self.s && self.s <= self.t && self.t <= 1.0) {
            return Err(ConstructError::InfeasibleSpec("need -1 <= s <= t <= 1"));
        }
        if !(self.eps > 0.0) {
            return Err(ConstructError::InfeasibleSpec("need eps > 0"));
        }
        if self.vbar < 0.0 {
            return Err(ConstructError::InfeasibleSpec("need vbar >= 0"));
        }
        Ok(())
    }
}

/// A built counterexample: the inequality `I(a, u~) <= I(a, u)` fails
/// strictly for this `u` and integrand (u~ the relevant rearrangement).
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub u: PiecewiseLinear,
    pub integrand: Integrand,
    /// The bound `A` used in the parameter formulas, when applicable.
    pub a_bound: Option<f64>,
    pub alpha_max: Option<f64>,
    pub gamma: Option<f64>,
}

fn pl_from_dedup(points: &[(f64, f64)]) -> PiecewiseLinear {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(x, y) in points {
        match pts.last() {
            Some(&(px, _)) if x <= px => {}
            _ => pts.push((x, y)),
        }
    }
    PiecewiseLinear::from_points(&pts).expect("construction produces valid breakpoints")
}

/// The two-plateau ramp function `u`: `vbar` outside `[s, t]`, rising with
/// unit slope on `[s, s+eps]`, plateau at `vbar + eps`, falling back on
/// `[t-eps, t]`.
fn plateau_u(s: f64, t: f64, eps: f64, vbar: f64) -> PiecewiseLinear {
    pl_from_dedup(&[
        (-1.0, vbar),
        (s, vbar),
        (s + eps, vbar + eps),
        (t - eps, vbar + eps),
        (t, vbar),
        (1.0, vbar),
    ])
}

/// Builds the two-plateau `u` together with the closed form of its monotone
/// rearrangement: `vbar` up to `1 - t + s`, then a slope-1/2 ramp of width
/// `2 eps`, then `vbar + eps`. Panics if the closed form and
/// `monotone_rearrange` disagree beyond breakpoint tolerance.
pub fn build_plateau_pair(
    spec: &CounterexampleSpec,
) -> Result<(PiecewiseLinear, PiecewiseLinear), ConstructError> {
    spec.validate()?;
    let (s, t, eps, vbar) = (spec.s, spec.t, spec.eps, spec.vbar);
    if s + eps > t - eps {
        return Err(ConstructError::InfeasibleSpec("need s + eps <= t - eps"));
    }
    if 1.0 - t + s + 2.0 * eps > 1.0 {
        return Err(ConstructError::InfeasibleSpec("ramp of u* must fit in [-1, 1]"));
    }
    let u = plateau_u(s, t, eps, vbar);
    let u_star = pl_from_dedup(&[
        (-1.0, vbar),
        (1.0 - t + s, vbar),
        (1.0 - t + s + 2.0 * eps, vbar + eps),
        (1.0, vbar + eps),
    ]);
    let computed = u.monotone_rearrange().expect("plateau u is rearrangeable");
    assert!(
        pl_close(&computed, &u_star, 1e-12),
        "closed-form rearrangement disagrees with the exact one"
    );
    Ok((u, u_star))
}

fn pl_close(a: &PiecewiseLinear, b: &PiecewiseLinear, tol: f64) -> bool {
    a.len() == b.len()
        && a.xs().iter().zip(b.xs()).all(|(p, q)| math::abs(p - q) <= tol)
        && a.ys().iter().zip(b.ys()).all(|(p, q)| math::abs(p - q) <= tol)
}

/// Scans `f` over `[0, y_max] x [v_lo, v_hi]` (101 x 33 points) and returns
/// the first point where the strict inequality `f < 0` fails.
fn grid_witness(
    y_max: f64,
    v_lo: f64,
    v_hi: f64,
    mut defect: impl FnMut(f64, f64) -> Result<f64, WeightError>,
) -> Result<Option<(f64, f64)>, ConstructError> {
    const NY: usize = 101;
    const NV: usize = 33;
    for iy in 0..NY {
        let y = y_max * (iy as f64) / ((NY - 1) as f64);
        for iv in 0..NV {
            let v = v_lo + (v_hi - v_lo) * (iv as f64) / ((NV - 1) as f64);
            if defect(y, v)? >= 0.0 {
                return Ok(Some((y, v)));
            }
        }
    }
    Ok(None)
}

/// Counterexample against the monotone inequality from strict asymmetry:
/// requires `a(x, v) < a(-x, v)` for `x` in `[xbar - eps, xbar]` and `v` in
/// `[vbar, vbar + eps]`. Returns the step-ramp `u` (high plateau left of
/// `xbar - eps`, unit downward ramp, low plateau right of `xbar`) with
/// `F = p`, for which the gap is `∫ (a(x, u) - a(-x, u)) dx < 0` over the ramp.
pub fn build_asymmetry_counterexample(
    a: &Weight,
    xbar: f64,
    vbar: f64,
    eps: f64,
) -> Result<Counterexample, ConstructError> {
    if !(eps > 0.0) || xbar - eps < -1.0 || xbar > 1.0 || vbar < 0.0 {
        return Err(ConstructError::InfeasibleSpec("need eps > 0 and [xbar - eps, xbar] in [-1, 1]"));
    }
    if let Some((y, v)) = grid_witness(eps, vbar, vbar + eps, |y, v| {
        let x = xbar - eps + y;
        Ok(a.eval(x, v)? - a.eval(-x, v)?)
    })? {
        return Err(ConstructError::PreconditionFailed { y: xbar - eps + y, v });
    }
    let u = pl_from_dedup(&[
        (-1.0, vbar + eps),
        (xbar - eps, vbar + eps),
        (xbar, vbar),
        (1.0, vbar),
    ]);
    Ok(Counterexample {
        u,
        integrand: Integrand::power(1.0).expect("alpha = 1 is valid"),
        a_bound: None,
        alpha_max: None,
        gamma: None,
    })
}

/// `alpha_max = 1 / log2(2A / (A + delta))`: any `alpha` in
/// `(1, alpha_max)` makes the nonconcavity construction violate the
/// inequality strictly.
pub fn counterexample_alpha(a_bound: f64, delta: f64) -> Result<f64, ConstructError> {
    if !(a_bound > 0.0) || !(delta > 0.0) {
        return Err(ConstructError::InfeasibleSpec("need A > 0 and delta > 0"));
    }
    let ratio = 2.0 * a_bound / (a_bound + delta);
    if ratio <= 1.0 {
        return Err(ConstructError::DegenerateBound);
    }
    Ok(1.0 / math::log2(ratio))
}

fn resolve_a_bound(
    a: &Weight,
    spec: &CounterexampleSpec,
) -> Result<f64, ConstructError> {
    match spec.a_bound {
        Some(b) if b > 0.0 => Ok(b),
        Some(_) => Err(ConstructError::InfeasibleSpec("a_bound must be positive")),
        None => Ok(a.max_bound(spec.vbar, spec.vbar + spec.eps)?),
    }
}

/// Counterexample from a margin-`delta` violation of the condition
/// `a(s, v) + a(t, v) >= a(1 - t + s, v)`: requires
/// `a(s + y, v) + a(t - y, v) + delta < a(1 - t + s + 2y, v)` for all
/// `y` in `[0, eps]`, `v` in `[vbar, vbar + eps]`. Pairs the plateau `u`
/// with `F = p^alpha` for a user-chosen `alpha` in `(1, alpha_max)`.
pub fn build_nonconcavity_counterexample(
    a: &Weight,
    spec: &CounterexampleSpec,
    alpha: f64,
) -> Result<Counterexample, ConstructError> {
    let (u, _) = build_plateau_pair(spec)?;
    let (s, t, eps, delta, vbar) = (spec.s, spec.t, spec.eps, spec.delta, spec.vbar);
    if let Some((y, v)) = grid_witness(eps, vbar, vbar + eps, |y, v| {
        Ok(a.eval(s + y, v)? + a.eval(t - y, v)? + delta - a.eval(1.0 - t + s + 2.0 * y, v)?)
    })? {
        return Err(ConstructError::PreconditionFailed { y, v });
    }
    let a_bound = resolve_a_bound(a, spec)?;
    let alpha_max = counterexample_alpha(a_bound, delta)?;
    if !(alpha > 1.0 && alpha < alpha_max) {
        return Err(ConstructError::AlphaOutOfRange { alpha, alpha_max });
    }
    Ok(Counterexample {
        u,
        integrand: Integrand::PowerAlpha { alpha },
        a_bound: Some(a_bound),
        alpha_max: Some(alpha_max),
        gamma: None,
    })
}

/// Counterexample against the symmetric inequality: requires the margin
/// violation `a(s+z, v) + a(t-z, v) + 2 delta < a((s-t)/2 + z, v) +
/// a((t-s)/2 - z, v)` for `z` in `[0, eps]`, plus `2 eps < t - s` and
/// `vbar = 0` (zero boundary trace). Pairs the plateau `u` with
/// `F = p + gamma p^2`, `gamma = (delta/eps) / (A/eps)^2`.
pub fn build_symmetric_counterexample(
    a: &Weight,
    spec: &CounterexampleSpec,
) -> Result<Counterexample, ConstructError> {
    if spec.vbar != 0.0 {
        return Err(ConstructError::InfeasibleSpec("symmetric counterexamples need vbar = 0"));
    }
    if !(2.0 * spec.eps < spec.t - spec.s) {
        return Err(ConstructError::InfeasibleSpec("need 2 eps < t - s"));
    }
    let (u, _) = build_plateau_pair(spec)?;
    let (s, t, eps, delta) = (spec.s, spec.t, spec.eps, spec.delta);
    if let Some((z, v)) = grid_witness(eps, 0.0, eps, |z, v| {
        let lhs = a.eval(s + z, v)? + a.eval(t - z, v)? + 2.0 * delta;
        let rhs = a.eval((s - t) / 2.0 + z, v)? + a.eval((t - s) / 2.0 - z, v)?;
        Ok(lhs - rhs)
    })? {
        return Err(ConstructError::PreconditionFailed { y: z, v });
    }
    let a_bound = resolve_a_bound(a, spec)?;
    let gamma = (delta / eps) / ((a_bound / eps) * (a_bound / eps));
    Ok(Counterexample {
        u,
        integrand: Integrand::QuadraticGamma { gamma },
        a_bound: Some(a_bound),
        alpha_max: None,
        gamma: Some(gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{evaluate_functional, verify_rearrangement, VerifyMode};

    const VR: (f64, f64) = (0.0, 2.0);

    fn spec(kind: CounterexampleKind, s: f64, t: f64, eps: f64, delta: f64, vbar: f64) -> CounterexampleSpec {
        CounterexampleSpec { kind, s, t, eps, delta, vbar, a_bound: Some(1.0) }
    }

    #[test]
    fn plateau_pair_closed_form() {
        let sp = spec(CounterexampleKind::Nonconcavity, -0.5, 0.5, 0.2, 0.0, 1.0);
        let (_u, star) = build_plateau_pair(&sp).unwrap();
        // ramp on [0, 0.4] with slope 1/2
        assert_eq!(star.xs(), &[-1.0, 0.0, 0.4, 1.0]);
        assert_eq!(star.ys(), &[1.0, 1.0, 1.2, 1.2]);

        let sp = spec(CounterexampleKind::Nonconcavity, 0.4, 0.6, 0.1, 0.0, 0.0);
        let (_u, star) = build_plateau_pair(&sp).unwrap();
        // ramp on [0.8, 1.0]; the top plateau degenerates
        assert!((star.xs()[1] - 0.8).abs() < 1e-15);
        assert!((star.eval(1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn plateau_pair_degenerate_middle() {
        // s + eps = t - eps: middle plateau empty, still valid
        let sp = spec(CounterexampleKind::Nonconcavity, -0.2, 0.2, 0.2, 0.0, 0.0);
        let (u, star) = build_plateau_pair(&sp).unwrap();
        assert!((u.eval(0.0) - 0.2).abs() < 1e-15);
        assert_eq!(star.eval(1.0), 0.2);
    }

    #[test]
    fn plateau_pair_infeasible() {
        let sp = spec(CounterexampleKind::Nonconcavity, -0.1, 0.1, 0.2, 0.0, 0.0);
        assert!(matches!(build_plateau_pair(&sp), Err(ConstructError::InfeasibleSpec(_))));
    }

    #[test]
    fn asymmetry_example_gap() {
        let a = Weight::parse("1 + x/2", VR).unwrap();
        let ce = build_asymmetry_counterexample(&a, -0.5, 0.0, 0.1).unwrap();
        let r = verify_rearrangement(&ce.integrand, &a, &ce.u, VerifyMode::Monotone, 1e-10).unwrap();
        // gap = ∫_{-0.6}^{-0.5} x dx = -0.055
        assert!((r.gap - (-0.055)).abs() < 1e-9, "gap = {}", r.gap);
        assert!(r.gap < -10.0 * r.quad_err);
    }

    #[test]
    fn asymmetry_other_direction() {
        let a = Weight::parse("1 - x/4", VR).unwrap();
        let ce = build_asymmetry_counterexample(&a, 0.5, 0.0, 0.1).unwrap();
        let r = verify_rearrangement(&ce.integrand, &a, &ce.u, VerifyMode::Monotone, 1e-10).unwrap();
        assert!(r.gap < -10.0 * r.quad_err, "gap = {}", r.gap);
    }

    #[test]
    fn asymmetry_needs_strictness() {
        let even = Weight::tent(VR);
        assert!(matches!(
            build_asymmetry_counterexample(&even, -0.5, 0.0, 0.1),
            Err(ConstructError::PreconditionFailed { .. })
        ));
    }

    #[test]
    fn alpha_bound_formula() {
        assert!(matches!(counterexample_alpha(1.0, 1.0), Err(ConstructError::DegenerateBound)));
        let a = counterexample_alpha(1.0, 0.5).unwrap();
        assert!((a - 2.4094).abs() < 1e-3, "alpha_max = {a}");
        let a = counterexample_alpha(1.0, 0.1).unwrap();
        assert!((a - 1.1594).abs() < 1e-3, "alpha_max = {a}");
    }

    #[test]
    fn nonconcavity_example() {
        let a = Weight::parse("x^2", VR).unwrap();
        let sp = spec(CounterexampleKind::Nonconcavity, 0.4, 0.6, 0.1, 0.1, 0.0);
        let ce = build_nonconcavity_counterexample(&a, &sp, 1.15).unwrap();
        assert!((ce.alpha_max.unwrap() - 1.1594).abs() < 1e-3);
        let r = verify_rearrangement(&ce.integrand, &a, &ce.u, VerifyMode::Monotone, 1e-10).unwrap();
        assert!(r.gap < -10.0 * r.quad_err, "gap = {}", r.gap);
        // the witnessed conditions agree: a = x^2 is not admissible
        assert!(!r.conditions.admissible());
    }

    #[test]
    fn nonconcavity_alpha_range() {
        let a = Weight::parse("x^2", VR).unwrap();
        let sp = spec(CounterexampleKind::Nonconcavity, 0.4, 0.6, 0.1, 0.1, 0.0);
        assert!(matches!(
            build_nonconcavity_counterexample(&a, &sp, 1.0),
            Err(ConstructError::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn nonconcavity_needs_violation() {
        let tent = Weight::tent(VR);
        let sp = spec(CounterexampleKind::Nonconcavity, 0.4, 0.6, 0.1, 0.1, 0.0);
        assert!(matches!(
            build_nonconcavity_counterexample(&tent, &sp, 1.1),
            Err(ConstructError::PreconditionFailed { .. })
        ));
    }

    #[test]
    fn symmetric_example() {
        let tent = Weight::tent(VR);
        let sp = spec(CounterexampleKind::Nonconvexity, 0.8, 1.0, 0.05, 0.1, 0.0);
        let ce = build_symmetric_counterexample(&tent, &sp).unwrap();
        assert!((ce.gamma.unwrap() - 0.005).abs() < 1e-15);
        let r = verify_rearrangement(&ce.integrand, &tent, &ce.u, VerifyMode::Symmetric, 1e-10).unwrap();
        assert!(r.gap < -10.0 * r.quad_err, "gap = {}", r.gap);
        assert!(!r.conditions.symmetric_ok());
    }

    #[test]
    fn symmetric_needs_violation() {
        let sq = Weight::parse("x^2", VR).unwrap();
        let sp = spec(CounterexampleKind::Nonconvexity, 0.8, 1.0, 0.05, 0.1, 0.0);
        assert!(matches!(
            build_symmetric_counterexample(&sq, &sp),
            Err(ConstructError::PreconditionFailed { .. })
        ));
    }

    #[test]
    fn symmetric_geometry_checks() {
        let tent = Weight::tent(VR);
        let sp = spec(CounterexampleKind::Nonconvexity, 0.8, 1.0, 0.1, 0.1, 0.0);
        assert!(matches!(
            build_symmetric_counterexample(&tent, &sp),
            Err(ConstructError::InfeasibleSpec(_))
        ));
        let sp = spec(CounterexampleKind::Nonconvexity, 0.8, 1.0, 0.05, 0.1, 0.5);
        assert!(matches!(
            build_symmetric_counterexample(&tent, &sp),
            Err(ConstructError::InfeasibleSpec(_))
        ));
    }

    #[test]
    fn computed_a_bound_is_inflated_upper_bound() {
        let a = Weight::parse("x^2", VR).unwrap();
        let sp = CounterexampleSpec { a_bound: None, ..spec(CounterexampleKind::Nonconcavity, 0.4, 0.6, 0.1, 0.1, 0.0) };
        let b = resolve_a_bound(&a, &sp).unwrap();
        assert!((b - 1.1).abs() < 1e-12, "A = {b}");
    }

    #[test]
    fn asymmetry_functional_values_match_oracle() {
        // F = p: I(u) integrates a over the ramp against unit slope
        let a = Weight::parse("1 + x/2", VR).unwrap();
        let ce = build_asymmetry_counterexample(&a, -0.5, 0.0, 0.1).unwrap();
        let r = evaluate_functional(&ce.integrand, &a, &ce.u, 1e-10).unwrap();
        // ∫_{-0.6}^{-0.5} (1 + x/2) dx = 0.1 - 0.055/2... direct: 0.1 + (x^2/4)|= 0.1 + (0.25-0.36)/4
        let oracle = 0.1 + (0.25 - 0.36) / 4.0;
        assert!((r.value - oracle).abs() < 1e-12, "I = {}", r.value);
        assert!(ce.alpha_max.is_none() && ce.gamma.is_none());
    }
}
