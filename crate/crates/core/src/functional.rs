//! The weighted first-order functional
//! `I(a, u) = ∫_{-1}^{1} F(u(x), a(x, u(x)) |u'(x)|) dx`
//! via segment-wise adaptive Gauss–Kronrod quadrature, plus verification of
//! the rearrangement inequalities `I(a, u*) <= I(a, u)` (and the symmetric
//! analogue).

use alloc::vec::Vec;
use core::fmt;

use crate::expr::{Bindings, EvalError, Expr};
use crate::math;
use crate::pl::{PiecewiseLinear, PlError};
use crate::weight::{ConditionReport, Resolution, Weight, WeightError};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalError {
    /// A stated precondition failed (tolerance, parameter range, sign of u).
    Precondition(&'static str),
    /// Adaptive bisection exceeded depth 40 on the given subinterval.
    NonConvergent { lo: f64, hi: f64 },
    Weight(WeightError),
    Eval(EvalError),
    Pl(PlError),
}

impl fmt::Display for FunctionalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalError::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            FunctionalError::NonConvergent { lo, hi } => {
                write!(f, "quadrature did not converge on [{lo}, {hi}]")
            }
            FunctionalError::Weight(e) => write!(f, "{e}"),
            FunctionalError::Eval(e) => write!(f, "{e}"),
            FunctionalError::Pl(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FunctionalError {}

impl From<WeightError> for FunctionalError {
    fn from(e: WeightError) -> Self {
        FunctionalError::Weight(e)
    }
}

impl From<EvalError> for FunctionalError {
    fn from(e: EvalError) -> Self {
        FunctionalError::Eval(e)
    }
}

impl From<PlError> for FunctionalError {
    fn from(e: PlError) -> Self {
        FunctionalError::Pl(e)
    }
}

/// The outer integrand `F(v, p)`, convex and nondecreasing in `p >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    /// `F = p^alpha`, `alpha >= 1`.
    PowerAlpha { alpha: f64 },
    /// `F = p + gamma p^2`, `gamma >= 0`.
    QuadraticGamma { gamma: f64 },
    /// User-supplied expression in `v` and `p`.
    Expr(Expr),
}

/// Sampled convexity/monotonicity certificate for an integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub convex: bool,
    pub nondecreasing: bool,
    pub nonnegative: bool,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.convex && self.nondecreasing && self.nonnegative
    }
}

impl Integrand {
    pub fn power(alpha: f64) -> Result<Self, FunctionalError> {
        if !(alpha >= 1.0) {
            return Err(FunctionalError::Precondition("power integrand needs alpha >= 1"));
        }
        Ok(Integrand::PowerAlpha { alpha })
    }

    pub fn quadratic(gamma: f64) -> Result<Self, FunctionalError> {
        if !(gamma >= 0.0) {
            return Err(FunctionalError::Precondition("quadratic integrand needs gamma >= 0"));
        }
        Ok(Integrand::QuadraticGamma { gamma })
    }

    /// Expression in `v` and `p` only; convexity is certified separately.
    pub fn from_expr(expr: Expr) -> Result<Self, FunctionalError> {
        let (uses_x, _, _) = expr.variables();
        if uses_x {
            return Err(FunctionalError::Precondition("integrand expressions may only use `v` and `p`"));
        }
        Ok(Integrand::Expr(expr))
    }

    pub fn parse(text: &str) -> Result<Self, FunctionalError> {
        let expr = Expr::parse(text)
            .map_err(|_| FunctionalError::Precondition("integrand expression failed to parse"))?;
        Self::from_expr(expr)
    }

    pub fn eval(&self, v: f64, p: f64) -> Result<f64, FunctionalError> {
        match self {
            Integrand::PowerAlpha { alpha } => {
                if p == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(math::pow(p, *alpha))
                }
            }
            Integrand::QuadraticGamma { gamma } => Ok(p + gamma * p * p),
            Integrand::Expr(e) => Ok(e.eval(&Bindings::vp(v, p))?),
        }
    }

    /// Finite-difference scan for convexity and monotonicity in `p` and
    /// nonnegativity, at 64 p-points by 16 v-points. The builtin families
    /// pass by construction; the scan is the arbiter for expressions.
    pub fn certificate(&self, v_range: (f64, f64), p_max: f64) -> Result<Certificate, FunctionalError> {
        const NP: usize = 64;
        const NV: usize = 16;
        const TOL: f64 = -1e-9;
        let p_max = math::max(p_max, 1e-6);
        let scale = math::max(1.0, self.eval(v_range.0, p_max).map(math::abs).unwrap_or(1.0));
        let mut cert = Certificate { convex: true, nondecreasing: true, nonnegative: true };
        for j in 0..NV {
            let v = if NV == 1 {
                v_range.0
            } else {
                v_range.0 + (v_range.1 - v_range.0) * (j as f64) / ((NV - 1) as f64)
            };
            let mut vals = [0.0_f64; NP];
            for (i, slot) in vals.iter_mut().enumerate() {
                let p = p_max * (i as f64) / ((NP - 1) as f64);
                *slot = self.eval(v, p)?;
            }
            for i in 0..NP {
                if vals[i] < TOL * scale {
                    cert.nonnegative = false;
                }
                if i + 1 < NP && vals[i + 1] - vals[i] < TOL * scale {
                    cert.nondecreasing = false;
                }
                if i + 2 < NP && vals[i] + vals[i + 2] - 2.0 * vals[i + 1] < TOL * scale {
                    cert.convex = false;
                }
            }
        }
        Ok(cert)
    }
}

/// Value of `I(a, u)` with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub err_estimate: f64,
    /// The part contributed by zero-slope segments, `Σ F(v, 0)·len`.
    /// `value - plateau_value` is the normalized value with `F(., 0) ≡ 0`.
    pub plateau_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Monotone,
    Symmetric,
}

/// Both sides of the rearrangement inequality with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub i_u: f64,
    pub i_rearranged: f64,
    /// `i_u - i_rearranged`, exactly as stored; `>= -(quad_err + 1e-9)`
    /// whenever the conditions hold and the certificate passes.
    pub gap: f64,
    pub quad_err: f64,
    pub mode: VerifyMode,
    pub conditions: ConditionReport,
    /// False downgrades the verdict to "inequality not guaranteed".
    pub certificate_ok: bool,
    /// Symmetric mode expects equal boundary traces `u(-1) = u(1)`.
    pub trace_warning: bool,
    /// Plateau contribution, identical on both sides.
    pub plateau_value: f64,
}

impl VerifyReport {
    /// True when the inequality is expected to hold for this input.
    pub fn guaranteed(&self) -> bool {
        self.certificate_ok
            && match self.mode {
                VerifyMode::Monotone => self.conditions.admissible(),
                VerifyMode::Symmetric => self.conditions.symmetric_ok(),
            }
    }

    pub fn holds(&self) -> bool {
        self.gap >= -(self.quad_err + 1e-9)
    }
}

/// Evaluates `I(a, u)` by adaptive 7/15 Gauss–Kronrod per linear segment of
/// `u`, splitting additionally at the weight's x-nodes. Zero-slope segments
/// contribute `F(u, 0)·len` exactly.
pub fn evaluate_functional(
    f: &Integrand,
    a: &Weight,
    u: &PiecewiseLinear,
    tol: f64,
) -> Result<EvalResult, FunctionalError> {
    if !(tol > 0.0) {
        return Err(FunctionalError::Precondition("tol must be positive"));
    }
    if u.min_value() < 0.0 {
        return Err(FunctionalError::Precondition("u must be nonnegative"));
    }
    let pieces = split_segments(a, u);
    let (dom_lo, dom_hi) = u.domain();
    let total_len = dom_hi - dom_lo;
    let mut values = Vec::with_capacity(pieces.len());
    let mut errors = Vec::with_capacity(pieces.len());
    let mut plateau = Vec::new();
    for &(x0, x1, y0, slope) in &pieces {
        if slope == 0.0 {
            let val = f.eval(y0, 0.0)? * (x1 - x0);
            values.push(val);
            errors.push(0.0);
            plateau.push(val);
            continue;
        }
        let tol_share = tol * (x1 - x0) / total_len;
        let mut g = |x: f64| -> Result<f64, FunctionalError> {
            let v = y0 + slope * (x - x0);
            let aval = a.eval(x, v)?;
            if aval < -1e-12 {
                return Err(FunctionalError::Weight(WeightError::Negative { x, v, value: aval }));
            }
            f.eval(v, math::max(aval, 0.0) * math::abs(slope))
        };
        let (val, err) = adaptive(&mut g, x0, x1, tol_share, tol, 0)?;
        values.push(val);
        errors.push(err);
    }
    Ok(EvalResult {
        value: math::pairwise_sum(&values),
        err_estimate: math::pairwise_sum(&errors),
        plateau_value: math::pairwise_sum(&plateau),
    })
}

/// Computes both sides of the rearrangement inequality and attaches the
/// relevant weight condition report and integrand certificate.
pub fn verify_rearrangement(
    f: &Integrand,
    a: &Weight,
    u: &PiecewiseLinear,
    mode: VerifyMode,
    tol: f64,
) -> Result<VerifyReport, FunctionalError> {
    let rearranged = match mode {
        VerifyMode::Monotone => u.monotone_rearrange()?,
        VerifyMode::Symmetric => u.symmetric_rearrange()?,
    };
    let lhs = evaluate_functional(f, a, u, tol)?;
    let rhs = evaluate_functional(f, a, &rearranged, tol)?;
    let conditions = match mode {
        VerifyMode::Monotone => a.check_admissible(Resolution::default())?,
        VerifyMode::Symmetric => a.check_symmetric_condition(Resolution::default())?,
    };
    let p_max = math::max(1.0, a.max_bound(u.min_value(), u.max_value())? * u.metrics().max_slope);
    let certificate = f.certificate((u.min_value(), u.max_value()), p_max)?;
    let trace_warning = mode == VerifyMode::Symmetric
        && math::abs(u.eval(-1.0) - u.eval(1.0)) > 1e-12;
    Ok(VerifyReport {
        i_u: lhs.value,
        i_rearranged: rhs.value,
        gap: lhs.value - rhs.value,
        quad_err: lhs.err_estimate + rhs.err_estimate,
        mode,
        conditions,
        certificate_ok: certificate.ok(),
        trace_warning,
        plateau_value: lhs.plateau_value,
    })
}

/// Segments of `u` further split at the weight's x-nodes.
/// Each entry is `(x0, x1, u(x0), slope)`.
fn split_segments(a: &Weight, u: &PiecewiseLinear) -> Vec<(f64, f64, f64, f64)> {
    let nodes = a.x_nodes();
    let mut out = Vec::new();
    for (x0, x1, y0, y1) in u.segments() {
        if x1 <= x0 {
            continue;
        }
        let slope = (y1 - y0) / (x1 - x0);
        let mut cuts = alloc::vec![x0];
        for &n in &nodes {
            if n > x0 && n < x1 {
                cuts.push(n);
            }
        }
        cuts.push(x1);
        for w in cuts.windows(2) {
            out.push((w[0], w[1], y0 + slope * (w[0] - x0), slope));
        }
    }
    out
}

fn adaptive<E>(
    g: &mut impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol_abs: f64,
    tol_rel: f64,
    depth: u32,
) -> Result<(f64, f64), FunctionalError>
where
    FunctionalError: From<E>,
{
    let (val, err) = qk15(g, lo, hi)?;
    if err <= math::max(tol_abs, tol_rel * math::abs(val)) {
        return Ok((val, err));
    }
    if depth >= 40 {
        return Err(FunctionalError::NonConvergent { lo, hi });
    }
    let mid = 0.5 * (lo + hi);
    let (lv, le) = adaptive(g, lo, mid, 0.5 * tol_abs, tol_rel, depth + 1)?;
    let (rv, re) = adaptive(g, mid, hi, 0.5 * tol_abs, tol_rel, depth + 1)?;
    Ok((lv + rv, le + re))
}

// 7-point Gauss / 15-point Kronrod abscissas and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 7/15 Gauss–Kronrod panel; returns (integral, error estimate).
fn qk15<E>(g: &mut impl FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<(f64, f64), E> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center)?;
    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];
    let mut res_gauss = 0.0;
    let mut res_kronrod = fc * WGK[7];
    let mut res_abs = math::abs(res_kronrod);
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += WG[j] * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (math::abs(f1) + math::abs(f2));
    }
    res_gauss += WG[3] * fc;
    for j in 0..4 {
        let jtw = 2 * j;
        let dx = half * XGK[jtw];
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (math::abs(f1) + math::abs(f2));
    }
    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * math::abs(fc - mean);
    for j in 0..7 {
        res_asc += WGK[j] * (math::abs(fv1[j] - mean) + math::abs(fv2[j] - mean));
    }
    let err = (res_kronrod - res_gauss) * half;
    let res_abs = res_abs * math::abs(half);
    let res_asc = res_asc * math::abs(half);
    Ok((res_kronrod * half, rescale_error(err, res_abs, res_asc)))
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = math::abs(err);
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = math::pow(200.0 * scaled / res_asc, 1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = math::max(scaled, 50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::PiecewiseLinear;

    const VR: (f64, f64) = (0.0, 2.5);
    const TOL: f64 = 1e-10;

    fn fig1() -> PiecewiseLinear {
        PiecewiseLinear::from_points(&[
            (-1.0, 1.0),
            (-0.5, 1.0),
            (-0.3, 1.2),
            (0.3, 1.2),
            (0.5, 1.0),
            (1.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn constant_integrand() {
        // F = p^2, a = 1, u = x + 1: p = 1 everywhere, I = 2
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::constant(1.0, VR);
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let r = evaluate_functional(&f, &a, &u, TOL).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.plateau_value, 0.0);
    }

    #[test]
    fn total_variation_via_f_eq_p() {
        let f = Integrand::power(1.0).unwrap();
        let a = Weight::constant(1.0, VR);
        let u = fig1();
        let r = evaluate_functional(&f, &a, &u, TOL).unwrap();
        assert!((r.value - 0.4).abs() < 1e-12, "I = {}", r.value);
        let star = u.monotone_rearrange().unwrap();
        let r = evaluate_functional(&f, &a, &star, TOL).unwrap();
        assert!((r.value - 0.2).abs() < 1e-12, "I* = {}", r.value);
    }

    #[test]
    fn tent_weight_squared() {
        // F = p^2, a = 1 - |x|, u = x + 1: I = ∫ (1-|x|)^2 = 2/3
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::tent(VR);
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let r = evaluate_functional(&f, &a, &u, TOL).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10, "I = {}", r.value);
    }

    #[test]
    fn plateau_contribution_without_normalization() {
        // F = p + 1 has F(., 0) = 1: plateaus contribute their length
        let f = Integrand::parse("p + 1").unwrap();
        let a = Weight::constant(1.0, VR);
        let u = fig1();
        let r = evaluate_functional(&f, &a, &u, TOL).unwrap();
        // plateaus: [-1,-0.5], [0.3 - (-0.3)], [0.5,1] → total length 1.6
        assert!((r.plateau_value - 1.6).abs() < 1e-12);
        // raw = TV + |domain| = 0.4 + 2
        assert!((r.value - 2.4).abs() < 1e-10);
    }

    #[test]
    fn quadrature_consistency_under_tol_halving() {
        let f = Integrand::power(1.5).unwrap();
        let a = Weight::parse("1 + cos(3*x)/2", VR).unwrap();
        let u = fig1();
        let mut tol = 1e-4;
        let mut prev = evaluate_functional(&f, &a, &u, tol).unwrap();
        for _ in 0..10 {
            tol *= 0.5;
            let next = evaluate_functional(&f, &a, &u, tol).unwrap();
            assert!((next.value - prev.value).abs() <= prev.err_estimate + 1e-15);
            prev = next;
        }
    }

    #[test]
    fn non_convergence_reported() {
        let f = Integrand::power(1.5).unwrap();
        let a = Weight::tent(VR);
        let u = fig1();
        assert!(matches!(
            evaluate_functional(&f, &a, &u, 1e-300),
            Err(FunctionalError::NonConvergent { .. })
        ));
    }

    #[test]
    fn verify_classical_polya_szego() {
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::constant(1.0, VR);
        for u in [
            fig1(),
            PiecewiseLinear::from_points(&[(-1.0, 0.3), (-0.2, 1.7), (0.1, 0.1), (0.6, 2.0), (1.0, 0.0)]).unwrap(),
            PiecewiseLinear::from_points(&[(-1.0, 2.0), (0.0, 0.0), (1.0, 2.0)]).unwrap(),
        ] {
            let r = verify_rearrangement(&f, &a, &u, VerifyMode::Monotone, 1e-9).unwrap();
            assert!(r.guaranteed() && r.holds(), "gap = {}", r.gap);
            assert_eq!(r.gap, r.i_u - r.i_rearranged);
        }
    }

    #[test]
    fn verify_admissible_tent() {
        let f = Integrand::power(1.5).unwrap();
        let a = Weight::tent(VR);
        let r = verify_rearrangement(&f, &a, &fig1(), VerifyMode::Monotone, 1e-9).unwrap();
        assert!(r.guaranteed());
        assert!(r.gap >= -1e-8, "gap = {}", r.gap);
    }

    #[test]
    fn symmetric_trace_warning() {
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::parse("x^2", VR).unwrap();
        let even_u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        let r = verify_rearrangement(&f, &a, &even_u, VerifyMode::Symmetric, 1e-9).unwrap();
        assert!(!r.trace_warning);
        assert!(r.guaranteed() && r.holds());

        let skew = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 1.0)]).unwrap();
        let r = verify_rearrangement(&f, &a, &skew, VerifyMode::Symmetric, 1e-9).unwrap();
        assert!(r.trace_warning);
    }

    #[test]
    fn certificate_scan() {
        let ok = Integrand::parse("v + p^2").unwrap();
        assert!(ok.certificate((0.0, 2.0), 4.0).unwrap().ok());
        let concave = Integrand::parse("p^0.5").unwrap();
        let c = concave.certificate((0.0, 2.0), 4.0).unwrap();
        assert!(!c.convex && c.nondecreasing && c.nonnegative);
        let decreasing = Integrand::parse("1 - p").unwrap();
        let c = decreasing.certificate((0.0, 2.0), 4.0).unwrap();
        assert!(!c.nondecreasing && !c.nonnegative);
    }

    #[test]
    fn failed_certificate_downgrades_not_errors() {
        let f = Integrand::parse("p^0.5").unwrap();
        let a = Weight::constant(1.0, VR);
        let r = verify_rearrangement(&f, &a, &fig1(), VerifyMode::Monotone, 1e-9).unwrap();
        assert!(!r.certificate_ok);
        assert!(!r.guaranteed());
    }

    #[test]
    fn jensen_step_at_sampled_levels() {
        // Σ b_k F(v, a(y_k, v)/b_k) >= F(v, a(y*, v)/Σ b_k) · Σ b_k
        // for admissible a, with b_k = 1/|slope_k|
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::tent(VR);
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.3), (-0.2, 1.7), (0.1, 0.1), (0.6, 2.0), (1.0, 0.0)]).unwrap();
        for w in u.level_windows() {
            let v = 0.5 * (w.lo + w.hi);
            let y_star = u.rearranged_preimage(v).unwrap();
            let mut lhs = 0.0;
            let mut b_sum = 0.0;
            for br in &w.branches {
                let b = 1.0 / br.slope.abs();
                let aval = a.eval(br.x_at(v), v).unwrap();
                lhs += b * f.eval(v, aval / b).unwrap();
                b_sum += b;
            }
            let rhs = f.eval(v, a.eval(y_star, v).unwrap() / b_sum).unwrap() * b_sum;
            assert!(lhs >= rhs - 1e-9, "v = {v}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn grid_weight_split_is_exact() {
        // a PL in x, F = p: integrand is PL per subsegment → err estimate 0
        let a = Weight::tent(VR).interpolate(4).unwrap();
        let f = Integrand::power(1.0).unwrap();
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let r = evaluate_functional(&f, &a, &u, TOL).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(Integrand::power(0.5).is_err());
        assert!(Integrand::quadratic(-1.0).is_err());
        assert!(Integrand::parse("x + p").is_err());
        let f = Integrand::power(2.0).unwrap();
        let a = Weight::constant(1.0, VR);
        let u = fig1();
        assert!(matches!(
            evaluate_functional(&f, &a, &u, 0.0),
            Err(FunctionalError::Precondition(_))
        ));
        let neg = PiecewiseLinear::from_points(&[(-1.0, -0.5), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            evaluate_functional(&f, &a, &neg, TOL),
            Err(FunctionalError::Precondition(_))
        ));
    }
}
