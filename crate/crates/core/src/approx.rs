//! Lipschitz approximation of steep piecewise-linear functions: cover the
//! set where `|u'| > h` with whole-segment intervals, replace `u` there by
//! chords (`v_h`), stretch the abscissa so slopes cap at 1 (`phi_h`), and
//! pull back: `u_h = v_h ∘ phi_h^{-1}` restricted to the unit interval.
//! Mass stretched beyond the right endpoint is discarded.

use alloc::vec::Vec;
use core::fmt;

use crate::functional::{evaluate_functional, FunctionalError, Integrand};
use crate::math;
use crate::pl::{PiecewiseLinear, PlError};
use crate::weight::{Weight, WeightError};

#[derive(Debug, Clone, PartialEq)]
pub enum ApproxError {
    /// The whole working interval exceeds the threshold: nothing to keep.
    ThresholdTooSmall,
    Precondition(&'static str),
    Pl(PlError),
    Functional(FunctionalError),
}

impl fmt::Display for ApproxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxError::ThresholdTooSmall => {
                write!(f, "threshold too small: the steep set covers the whole interval")
            }
            ApproxError::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            ApproxError::Pl(e) => write!(f, "{e}"),
            ApproxError::Functional(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ApproxError {}

impl From<PlError> for ApproxError {
    fn from(e: PlError) -> Self {
        ApproxError::Pl(e)
    }
}

impl From<FunctionalError> for ApproxError {
    fn from(e: FunctionalError) -> Self {
        ApproxError::Functional(e)
    }
}

impl From<WeightError> for ApproxError {
    fn from(e: WeightError) -> Self {
        ApproxError::Functional(FunctionalError::Weight(e))
    }
}

/// Which half of `[-1, 1]` the stage works on. `Right` treats `u` on
/// `[0, 1]` directly; `Left` works on the reflection `x -> u(-x)`, so all
/// stage data is expressed on `[0, 1]` in both cases, anchored at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One maximal interval of the steep cover, with its width `alpha` and the
/// increment `beta = u(hi) - u(lo)` of `u` across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverInterval {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// One approximation stage at threshold `h`. All functions live on
/// `[0, 1]` in the working frame (see [`Side`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxStage {
    pub h: f64,
    pub side: Side,
    /// The steep cover `A_h` (minimal whole-segment union; nested in `h`).
    pub cover: Vec<CoverInterval>,
    /// `u` with chords substituted on the cover.
    pub v_h: PiecewiseLinear,
    /// The stretching map, `phi_h(0) = 0`, slopes `max(|beta|/alpha, 1)`.
    pub phi_h: PiecewiseLinear,
    /// `v_h ∘ phi_h^{-1}` restricted to `[0, 1]`.
    pub u_h: PiecewiseLinear,
    /// The working copy of `u` on `[0, 1]` the stage approximates.
    pub u_work: PiecewiseLinear,
}

impl ApproxStage {
    pub fn cover_measure(&self) -> f64 {
        let widths: Vec<f64> = self.cover.iter().map(|c| c.alpha).collect();
        math::pairwise_sum(&widths)
    }

    pub fn beta_sum(&self) -> f64 {
        let betas: Vec<f64> = self.cover.iter().map(|c| math::abs(c.beta)).collect();
        math::pairwise_sum(&betas)
    }

    /// `∫ |phi_h'|` over `[0, 1]`; bounded by `1 + Σ |beta|`.
    pub fn phi_variation(&self) -> f64 {
        self.phi_h.eval(1.0) - self.phi_h.eval(0.0)
    }

    /// `|phi_h(A_h)| = Σ max(|beta|, alpha)`, before truncation.
    pub fn cover_image_measure(&self) -> f64 {
        let terms: Vec<f64> = self
            .cover
            .iter()
            .map(|c| math::max(math::abs(c.beta), c.alpha))
            .collect();
        math::pairwise_sum(&terms)
    }

    /// Stage images of the cover intervals, clipped to `[0, 1]`.
    pub fn cover_image(&self) -> Vec<(f64, f64)> {
        self.cover
            .iter()
            .filter_map(|c| {
                let lo = self.phi_h.eval(c.lo);
                let hi = math::min(self.phi_h.eval(c.hi), 1.0);
                (hi > lo).then_some((lo, hi))
            })
            .collect()
    }
}

/// Builds one stage for `u` on `[-1, 1]`. The steep set
/// `{|u'| > h}` is covered by whole segments; chords, stretch and pullback
/// follow, anchored at `x = 0` with `u_h(0) = u(0)`.
pub fn lipschitz_approximate(
    u: &PiecewiseLinear,
    h: f64,
    side: Side,
) -> Result<ApproxStage, ApproxError> {
    if !(h > 0.0) {
        return Err(ApproxError::Precondition("threshold must be positive"));
    }
    if u.min_value() < 0.0 {
        return Err(ApproxError::Precondition("u must be nonnegative"));
    }
    if !u.is_unit_domain() {
        return Err(ApproxError::Precondition("u must live on [-1, 1]"));
    }
    let work = match side {
        Side::Right => u.restrict(0.0, 1.0)?,
        Side::Left => u.reflect().restrict(0.0, 1.0)?,
    };
    stage_on_unit(work, h, side)
}

fn stage_on_unit(work: PiecewiseLinear, h: f64, side: Side) -> Result<ApproxStage, ApproxError> {
    // merge consecutive steep segments into maximal cover intervals
    let mut cover: Vec<CoverInterval> = Vec::new();
    for (i, (x0, x1, _, _)) in work.segments().enumerate() {
        if math::abs(work.segment_slope(i)) <= h {
            continue;
        }
        match cover.last_mut() {
            Some(c) if c.hi == x0 => c.hi = x1,
            _ => cover.push(CoverInterval { lo: x0, hi: x1, alpha: 0.0, beta: 0.0 }),
        }
    }
    for c in &mut cover {
        c.alpha = c.hi - c.lo;
        c.beta = work.eval(c.hi) - work.eval(c.lo);
    }
    if cover.len() == 1 && cover[0].lo == 0.0 && cover[0].hi == 1.0 {
        return Err(ApproxError::ThresholdTooSmall);
    }

    // v_h: keep breakpoints outside the cover, chord across each interval
    let inside = |x: f64| cover.iter().any(|c| c.lo < x && x < c.hi);
    let mut vx = Vec::new();
    let mut vy = Vec::new();
    for (&x, &y) in work.xs().iter().zip(work.ys()) {
        if !inside(x) {
            vx.push(x);
            vy.push(y);
        }
    }
    let v_h = PiecewiseLinear::new(vx, vy)?;

    // phi_h: slope max(|beta|/alpha, 1) on the cover, 1 elsewhere
    let mut px = Vec::with_capacity(v_h.len());
    let mut py = Vec::with_capacity(v_h.len());
    px.push(0.0);
    py.push(0.0);
    for w in v_h.xs().windows(2) {
        let slope = cover
            .iter()
            .find(|c| c.lo == w[0] && c.hi == w[1])
            .map(|c| math::max(math::abs(c.beta) / c.alpha, 1.0))
            .unwrap_or(1.0);
        px.push(w[1]);
        py.push(py.last().unwrap() + slope * (w[1] - w[0]));
    }
    let phi_h = PiecewiseLinear::new(px, py)?;

    // u_h(x') = v_h(phi_h^{-1}(x')) on [0, 1]; breakpoints are the images
    // phi_h(x_i), truncated at 1
    let mut ux = Vec::new();
    let mut uy = Vec::new();
    for (&x, &y) in v_h.xs().iter().zip(v_h.ys()) {
        let img = phi_h.eval(x);
        if img >= 1.0 {
            // interpolate the value at the cut and stop
            let (x0, y0) = (*ux.last().unwrap(), *uy.last().unwrap());
            if x0 < 1.0 {
                ux.push(1.0);
                uy.push(y0 + (y - y0) * (1.0 - x0) / (img - x0));
            }
            break;
        }
        ux.push(img);
        uy.push(y);
    }
    if *ux.last().unwrap() < 1.0 {
        // phi_h(1) = 1 exactly (empty cover tail); close the interval
        let y = *uy.last().unwrap();
        if *ux.last().unwrap() < 1.0 - 1e-15 {
            ux.push(1.0);
            uy.push(y);
        } else {
            *ux.last_mut().unwrap() = 1.0;
        }
    }
    let u_h = PiecewiseLinear::new(ux, uy)?;

    let stage = ApproxStage { h, side, cover, v_h, phi_h, u_h, u_work: work };
    debug_assert!(stage.phi_variation() <= 1.0 + stage.beta_sum() + 1e-12);
    Ok(stage)
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// `‖u_h - u‖_{L¹}` over `[-1, 1]` (exact PL arithmetic).
    pub l1: f64,
    /// `‖u_h' - u'‖_{L¹}` over `[-1, 1]` (exact PL arithmetic).
    pub l1_deriv: f64,
    pub i_uh: f64,
    /// `|I(a, u_h) - I(a, u)|`.
    pub i_err: f64,
    pub cover_measure: f64,
    pub beta_sum: f64,
    /// Chord-replacement part: `|I(a, v_h) - I(a, u)|`.
    pub p1: f64,
    /// Contribution of `u_h` over the stretched image of the cover.
    pub p2: f64,
    /// Contribution of `u` over the cover itself.
    pub p3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub i_u: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Whether `a(., v)` is increasing on `[-1, 0]` and decreasing on
    /// `[0, 1]` (sampled); the convergence guarantee needs this shape.
    pub hypothesis_ok: bool,
}

/// Runs both half-interval stages per threshold and reports approximation
/// and functional errors along the ladder. Numbers are computed regardless
/// of the monotonicity hypothesis on `a`; the flag records it.
pub fn convergence_report(
    f: &Integrand,
    a: &Weight,
    u: &PiecewiseLinear,
    ladder: &[f64],
    tol: f64,
) -> Result<ConvergenceReport, ApproxError> {
    if ladder.is_empty() {
        return Err(ApproxError::Precondition("ladder must be nonempty"));
    }
    let i_u = evaluate_functional(f, a, u, tol)?.value;
    let hypothesis_ok = weight_shape_ok(a, u.min_value(), u.max_value())?;
    let mut rows = Vec::with_capacity(ladder.len());
    for &h in ladder {
        let right = lipschitz_approximate(u, h, Side::Right)?;
        let left = lipschitz_approximate(u, h, Side::Left)?;
        let u_h = glue(&left, &right)?;
        let v_glued = glue_raw(&left.v_h, &right.v_h)?;
        let i_uh = evaluate_functional(f, a, &u_h, tol)?.value;
        let p1 = math::abs(evaluate_functional(f, a, &v_glued, tol)?.value - i_u);
        let p2 = integrate_over(f, a, &u_h, &original_intervals(&left.cover_image(), &right.cover_image()), tol)?;
        let p3 = integrate_over(
            f,
            a,
            u,
            &original_intervals(
                &left.cover.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>(),
                &right.cover.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>(),
            ),
            tol,
        )?;
        rows.push(ConvergenceRow {
            h,
            l1: u_h.l1_distance(u),
            l1_deriv: u_h.l1_derivative_distance(u),
            i_uh,
            i_err: math::abs(i_uh - i_u),
            cover_measure: left.cover_measure() + right.cover_measure(),
            beta_sum: left.beta_sum() + right.beta_sum(),
            p1,
            p2,
            p3,
        });
    }
    Ok(ConvergenceReport { i_u, rows, hypothesis_ok })
}

/// Reflects left-stage working intervals back to `[-1, 0]` and merges with
/// the right-stage ones.
fn original_intervals(left: &[(f64, f64)], right: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = left.iter().map(|&(lo, hi)| (-hi, -lo)).collect();
    out.extend_from_slice(right);
    out
}

fn integrate_over(
    f: &Integrand,
    a: &Weight,
    u: &PiecewiseLinear,
    intervals: &[(f64, f64)],
    tol: f64,
) -> Result<f64, ApproxError> {
    let mut parts = Vec::with_capacity(intervals.len());
    for &(lo, hi) in intervals {
        if hi <= lo {
            continue;
        }
        let piece = u.restrict(math::max(lo, -1.0), math::min(hi, 1.0))?;
        parts.push(evaluate_functional(f, a, &piece, tol)?.value);
    }
    Ok(math::pairwise_sum(&parts))
}

/// Glues a left stage (reflected back to `[-1, 0]`) with a right stage.
/// Both are anchored at the working origin with value `u(0)`, so the glue
/// is continuous.
fn glue(left: &ApproxStage, right: &ApproxStage) -> Result<PiecewiseLinear, ApproxError> {
    glue_raw(&left.u_h, &right.u_h)
}

fn glue_raw(left_on_unit: &PiecewiseLinear, right: &PiecewiseLinear) -> Result<PiecewiseLinear, ApproxError> {
    let l = left_on_unit.reflect();
    let mut xs: Vec<f64> = l.xs().to_vec();
    let mut ys: Vec<f64> = l.ys().to_vec();
    for (&x, &y) in right.xs().iter().zip(right.ys()) {
        if x > 0.0 {
            xs.push(x);
            ys.push(y);
        }
    }
    Ok(PiecewiseLinear::new(xs, ys)?)
}

fn weight_shape_ok(a: &Weight, v_lo: f64, v_hi: f64) -> Result<bool, WeightError> {
    const NX: usize = 65;
    const NV: usize = 17;
    const TOL: f64 = 1e-9;
    for j in 0..NV {
        let v = v_lo + (v_hi - v_lo) * (j as f64) / ((NV - 1) as f64);
        let mut prev = a.eval(-1.0, v)?;
        for i in 1..NX {
            let x = -1.0 + 2.0 * (i as f64) / ((NX - 1) as f64);
            let cur = a.eval(x, v)?;
            if x <= 0.0 && cur < prev - TOL {
                return Ok(false);
            }
            if x > 0.0 && cur > prev + TOL {
                return Ok(false);
            }
            prev = cur;
        }
    }
    Ok(true)
}
