//! Continuous piecewise-linear functions and their rearrangements.
//!
//! The carrier is [`PiecewiseLinear`]: sorted breakpoint abscissas plus one
//! value per breakpoint. Rearrangement operations require the canonical
//! domain `[-1, 1]` and nonnegative values; the distribution function lives
//! on the value interval `[min u, max u]` and may contain vertical jumps
//! (two consecutive points with equal abscissa) at plateau levels.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Breakpoints closer than this are merged after rearrangement.
pub const BREAKPOINT_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PlError {
    /// Breakpoint abscissas not strictly increasing, fewer than two points,
    /// mismatched lengths, or non-finite data.
    BadBreakpoints,
    /// Operation requires `u >= 0`.
    NegativeValues { x: f64, y: f64 },
    /// Operation requires the canonical domain `[-1, 1]`.
    DomainNotUnit { lo: f64, hi: f64 },
    /// The level hits a breakpoint image or a plateau; preimage branches are
    /// not well defined there.
    IrregularLevel { level: f64 },
}

impl fmt::Display for PlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlError::BadBreakpoints => write!(f, "breakpoints must be finite, strictly increasing and at least two"),
            PlError::NegativeValues { x, y } => write!(f, "negative value {y} at x = {x}; rearrangements require u >= 0"),
            PlError::DomainNotUnit { lo, hi } => write!(f, "domain [{lo}, {hi}] is not [-1, 1]"),
            PlError::IrregularLevel { level } => write!(f, "level {level} is irregular (breakpoint image or plateau)"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PlError {}

/// A continuous piecewise-linear function: `ys[i]` at `xs[i]`, affine in
/// between. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Summary quantities of a PL function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlMetrics {
    pub integral: f64,
    pub total_variation: f64,
    pub min: f64,
    pub max: f64,
    pub max_slope: f64,
}

/// A distribution function `m(t) = |{u > t}|` on `[min u, max u]`.
///
/// Stored as a polyline with nondecreasing `t` and strictly decreasing `m`;
/// equal consecutive `t`s encode the jump at a plateau level.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFn {
    ts: Vec<f64>,
    ms: Vec<f64>,
}

/// One affine preimage branch `v -> x(v)` inside a level window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// Segment start abscissa.
    pub x0: f64,
    /// Value at `x0`.
    pub y0: f64,
    /// Slope of `u` on the segment (nonzero).
    pub slope: f64,
}

impl Branch {
    /// Preimage abscissa of level `v` on this branch.
    pub fn x_at(&self, v: f64) -> f64 {
        self.x0 + (v - self.y0) / self.slope
    }
}

/// A maximal value interval `(lo, hi)` over which the number of preimage
/// branches of `u` is constant, together with the ordered branches.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWindow {
    pub lo: f64,
    pub hi: f64,
    /// Branches ordered by abscissa over the whole window.
    pub branches: Vec<Branch>,
}

impl LevelWindow {
    pub fn multiplicity(&self) -> usize {
        self.branches.len()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, PlError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(PlError::BadBreakpoints);
        }
        if xs.iter().chain(ys.iter()).any(|t| !t.is_finite()) {
            return Err(PlError::BadBreakpoints);
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PlError::BadBreakpoints);
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, PlError> {
        let xs = points.iter().map(|p| p.0).collect();
        let ys = points.iter().map(|p| p.1).collect();
        Self::new(xs, ys)
    }

    /// Constant function on `[-1, 1]`.
    pub fn constant(c: f64) -> Self {
        PiecewiseLinear { xs: alloc::vec![-1.0, 1.0], ys: alloc::vec![c, c] }
    }

    /// Samples `f` at `n + 1` uniform nodes over `[lo, hi]`.
    pub fn sample(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self, PlError> {
        let n = n.max(1);
        let mut xs = Vec::with_capacity(n + 1);
        let mut ys = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = lo + (hi - lo) * (i as f64) / (n as f64);
            xs.push(x);
            ys.push(f(x));
        }
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn is_unit_domain(&self) -> bool {
        self.xs[0] == -1.0 && *self.xs.last().unwrap() == 1.0
    }

    pub(crate) fn require_unit_domain(&self) -> Result<(), PlError> {
        if self.is_unit_domain() {
            Ok(())
        } else {
            let (lo, hi) = self.domain();
            Err(PlError::DomainNotUnit { lo, hi })
        }
    }

    pub(crate) fn require_nonnegative(&self) -> Result<(), PlError> {
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if y < 0.0 {
                return Err(PlError::NegativeValues { x, y });
            }
        }
        Ok(())
    }

    /// Evaluation with clamping outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.ys.last().unwrap();
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            i => i - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Iterator over segments `(x0, x1, y0, y1)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.xs.len() - 1).map(move |i| (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]))
    }

    pub fn segment_slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn min_value(&self) -> f64 {
        self.ys.iter().fold(f64::INFINITY, |a, &b| math::min(a, b))
    }

    pub fn max_value(&self) -> f64 {
        self.ys.iter().fold(f64::NEG_INFINITY, |a, &b| math::max(a, b))
    }

    pub fn metrics(&self) -> PlMetrics {
        let mut integral_parts = Vec::with_capacity(self.xs.len() - 1);
        let mut tv_parts = Vec::with_capacity(self.xs.len() - 1);
        let mut max_slope = 0.0_f64;
        for (x0, x1, y0, y1) in self.segments() {
            let dx = x1 - x0;
            integral_parts.push(0.5 * (y0 + y1) * dx);
            tv_parts.push(math::abs(y1 - y0));
            max_slope = math::max(max_slope, math::abs((y1 - y0) / dx));
        }
        PlMetrics {
            integral: math::pairwise_sum(&integral_parts),
            total_variation: math::pairwise_sum(&tv_parts),
            min: self.min_value(),
            max: self.max_value(),
            max_slope,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] <= w[1])
    }

    /// Even on the breakpoint lattice: mirrored abscissas and equal values.
    pub fn is_even(&self) -> bool {
        let n = self.xs.len();
        (0..n).all(|i| self.xs[i] == -self.xs[n - 1 - i] && self.ys[i] == self.ys[n - 1 - i])
    }

    /// Restriction to `[lo, hi]`; the domain must contain the interval.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self, PlError> {
        let (a, b) = self.domain();
        if lo < a || hi > b || lo >= hi {
            return Err(PlError::BadBreakpoints);
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        xs.push(lo);
        ys.push(self.eval(lo));
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > lo && x < hi {
                xs.push(x);
                ys.push(y);
            }
        }
        xs.push(hi);
        ys.push(self.eval(hi));
        PiecewiseLinear::new(xs, ys)
    }

    /// Reflection `x -> -x`.
    pub fn reflect(&self) -> Self {
        let xs = self.xs.iter().rev().map(|&x| -x).collect();
        let ys = self.ys.iter().rev().copied().collect();
        PiecewiseLinear { xs, ys }
    }

    /// Distribution function `m(t) = |{x : u(x) > t}|`.
    ///
    /// Exact for PL inputs: `m` is affine between critical levels and jumps
    /// by the total plateau length at plateau levels.
    pub fn distribution(&self) -> Result<DistributionFn, PlError> {
        self.require_nonnegative()?;
        let levels = self.critical_levels();
        let mut ts = Vec::new();
        let mut ms = Vec::new();
        let (lo, hi) = self.domain();
        for (i, &v) in levels.iter().enumerate() {
            let above = self.measure_above(v, false); // |{u > v}|
            // {u >= min u} is the whole domain; keep it exact
            let at_least = if i == 0 { hi - lo } else { self.measure_above(v, true) };
            push_dedup(&mut ts, &mut ms, v, at_least);
            if at_least - above > BREAKPOINT_MERGE_TOL {
                push_dedup(&mut ts, &mut ms, v, above);
            }
        }
        // last level is max u: m drops to exactly 0 there
        if *ms.last().unwrap() != 0.0 {
            let t_last = *ts.last().unwrap();
            push_dedup(&mut ts, &mut ms, t_last, 0.0);
        }
        Ok(DistributionFn { ts, ms })
    }

    /// The nondecreasing rearrangement `u*` on `[-1, 1]`, anchored at the
    /// right end (superlevel sets pushed to `[1 - |A_t|, 1]`).
    pub fn monotone_rearrange(&self) -> Result<Self, PlError> {
        self.require_unit_domain()?;
        self.require_nonnegative()?;
        if self.is_nondecreasing() {
            // already rearranged: identity, breakpoint for breakpoint
            return Ok(self.clone());
        }
        let d = self.distribution()?;
        // invert the graph: (t, m) -> (1 - m, t)
        let mut pts: Vec<(f64, f64)> = d
            .ts
            .iter()
            .zip(&d.ms)
            .map(|(&t, &m)| (1.0 - m, t))
            .collect();
        pts[0].0 = -1.0;
        pts.last_mut().unwrap().0 = 1.0;
        merge_close_breakpoints(&mut pts);
        PiecewiseLinear::from_points(&pts)
    }

    /// The symmetric rearrangement `ū`: even, nonincreasing in `|x|`,
    /// equimeasurable with `u`; satisfies `ū(y) = u*(2y + 1)` on `[-1, 0]`.
    pub fn symmetric_rearrange(&self) -> Result<Self, PlError> {
        self.require_unit_domain()?;
        self.require_nonnegative()?;
        if self.is_even() && self.restrict(0.0, 1.0)?.ys.windows(2).all(|w| w[0] >= w[1]) {
            // even and nonincreasing in |x|: fixed point
            return Ok(self.clone());
        }
        let star = self.monotone_rearrange()?;
        let n = star.xs.len();
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            pts.push(((star.xs[i] - 1.0) / 2.0, star.ys[i]));
        }
        for i in (0..n - 1).rev() {
            pts.push(((1.0 - star.xs[i]) / 2.0, star.ys[i]));
        }
        pts[0].0 = -1.0;
        pts.last_mut().unwrap().0 = 1.0;
        merge_close_breakpoints(&mut pts);
        PiecewiseLinear::from_points(&pts)
    }

    /// Distinct breakpoint values, sorted ascending.
    pub fn critical_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.ys.clone();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        levels
    }

    /// Lebesgue measure of `{u > v}` (`strict = false`) or `{u >= v}`.
    fn measure_above(&self, v: f64, at_least: bool) -> f64 {
        let mut parts = Vec::with_capacity(self.xs.len() - 1);
        for (x0, x1, y0, y1) in self.segments() {
            let dx = x1 - x0;
            let (lo, hi) = (math::min(y0, y1), math::max(y0, y1));
            let m = if at_least {
                if lo >= v {
                    dx
                } else if hi < v {
                    0.0
                } else {
                    dx * (hi - v) / (hi - lo)
                }
            } else if lo > v {
                dx
            } else if hi <= v {
                0.0
            } else {
                dx * (hi - v) / (hi - lo)
            };
            parts.push(m);
        }
        math::pairwise_sum(&parts)
    }

    /// Level windows `G_j` with their ordered preimage branches.
    ///
    /// Only non-degenerate windows intersecting the range interior appear;
    /// the branch count is constant on each window.
    pub fn level_windows(&self) -> Vec<LevelWindow> {
        let levels = self.critical_levels();
        let mut windows = Vec::new();
        for w in levels.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let mut branches = Vec::new();
            for i in 0..self.xs.len() - 1 {
                let (y0, y1) = (self.ys[i], self.ys[i + 1]);
                if math::min(y0, y1) <= lo && hi <= math::max(y0, y1) {
                    branches.push(Branch {
                        x0: self.xs[i],
                        y0,
                        slope: self.segment_slope(i),
                    });
                }
            }
            branches.sort_by(|a, b| a.x_at(mid).partial_cmp(&b.x_at(mid)).unwrap());
            if !branches.is_empty() {
                windows.push(LevelWindow { lo, hi, branches });
            }
        }
        windows
    }

    /// Preimage of a regular level `v` under `u*`, via the alternating sum of
    /// the ordered preimages of `u`, selected by the parity of the branch
    /// count and the sign of `u(-1) - v`.
    pub fn rearranged_preimage(&self, v: f64) -> Result<f64, PlError> {
        self.require_unit_domain()?;
        self.require_nonnegative()?;
        let windows = self.level_windows();
        let window = windows
            .iter()
            .find(|w| w.contains(v))
            .ok_or(PlError::IrregularLevel { level: v })?;
        let m = window.multiplicity();
        // alternating sum Σ (-1)^k y_k, k = 1..m
        let mut alt = 0.0;
        for (k, b) in window.branches.iter().enumerate() {
            let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
            alt += sign * b.x_at(v);
        }
        let left_value = self.ys[0];
        debug_assert!(left_value != v, "window interiors exclude breakpoint values");
        let y_star = match (left_value < v, m % 2 == 0) {
            (true, true) => 1.0 - alt,
            (true, false) => -alt,
            (false, true) => -1.0 + alt,
            (false, false) => alt,
        };
        Ok(y_star)
    }

    /// Exact `∫ |u - other|` over the common domain (domains must agree).
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let grid = merged_grid(&self.xs, &other.xs);
        let mut acc = Vec::new();
        for w in grid.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let d0 = self.eval(x0) - other.eval(x0);
            let d1 = self.eval(x1) - other.eval(x1);
            let dx = x1 - x0;
            if d0 * d1 >= 0.0 {
                acc.push(0.5 * (math::abs(d0) + math::abs(d1)) * dx);
            } else {
                // sign change: split at the root
                let r = d0 / (d0 - d1);
                acc.push(0.5 * (math::abs(d0) * r + math::abs(d1) * (1.0 - r)) * dx);
            }
        }
        math::pairwise_sum(&acc)
    }

    /// Exact `∫ |u' - other'|` (piecewise-constant derivatives).
    pub fn l1_derivative_distance(&self, other: &Self) -> f64 {
        let grid = merged_grid(&self.xs, &other.xs);
        let mut acc = Vec::new();
        for w in grid.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let mid = 0.5 * (x0 + x1);
            let s0 = self.slope_at(mid);
            let s1 = other.slope_at(mid);
            acc.push(math::abs(s0 - s1) * (x1 - x0));
        }
        math::pairwise_sum(&acc)
    }

    /// Slope of the segment containing `x` (left segment at breakpoints,
    /// 0 outside the domain).
    pub fn slope_at(&self, x: f64) -> f64 {
        let (a, b) = self.domain();
        if x <= a || x >= b {
            return 0.0;
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            i => (i - 1).min(self.xs.len() - 2),
        };
        self.segment_slope(i)
    }
}

impl DistributionFn {
    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn ms(&self) -> &[f64] {
        &self.ms
    }

    /// Right-continuous evaluation: below the range returns the full domain
    /// length, at or above the top returns 0.
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.ts[0] {
            return self.ms[0];
        }
        if t >= *self.ts.last().unwrap() {
            return *self.ms.last().unwrap();
        }
        // last index with ts[i] <= t picks the lower branch of a jump
        let i = self.ts.partition_point(|&s| s <= t) - 1;
        if i + 1 >= self.ts.len() || self.ts[i + 1] == self.ts[i] {
            return self.ms[i];
        }
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (m0, m1) = (self.ms[i], self.ms[i + 1]);
        m0 + (m1 - m0) * (t - t0) / (t1 - t0)
    }
}

fn push_dedup(ts: &mut Vec<f64>, ms: &mut Vec<f64>, t: f64, m: f64) {
    if let (Some(&lt), Some(&lm)) = (ts.last(), ms.last()) {
        if lt == t && lm == m {
            return;
        }
    }
    ts.push(t);
    ms.push(m);
}

fn merge_close_breakpoints(pts: &mut Vec<(f64, f64)>) {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts.iter() {
        match out.last() {
            Some(&(lx, _)) if p.0 - lx <= BREAKPOINT_MERGE_TOL => {}
            _ => out.push(p),
        }
    }
    // the final abscissa must survive the merge
    if let (Some(&last_in), Some(last_out)) = (pts.last(), out.last_mut()) {
        if last_out.0 != last_in.0 {
            *last_out = last_in;
        }
    }
    *pts = out;
}

fn merged_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g.dedup();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fig1(vbar: f64, s: f64, t: f64, eps: f64) -> PiecewiseLinear {
        let pts = [
            (-1.0, vbar),
            (s, vbar),
            (s + eps, vbar + eps),
            (t - eps, vbar + eps),
            (t, vbar),
            (1.0, vbar),
        ];
        let mut kept: Vec<(f64, f64)> = Vec::new();
        for &(x, y) in &pts {
            match kept.last() {
                Some(&(px, _)) if x <= px => {}
                _ => kept.push((x, y)),
            }
        }
        PiecewiseLinear::from_points(&kept).unwrap()
    }

    #[test]
    fn metrics_constant() {
        let m = PiecewiseLinear::constant(1.0).metrics();
        assert_eq!(m.integral, 2.0);
        assert_eq!(m.total_variation, 0.0);
    }

    #[test]
    fn metrics_affine() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let m = u.metrics();
        assert_eq!(m.integral, 2.0);
        assert_eq!(m.total_variation, 2.0);
        assert_eq!(m.max_slope, 1.0);
    }

    #[test]
    fn metrics_fig1() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let m = u.metrics();
        assert!((m.total_variation - 0.4).abs() < 1e-15);
    }

    #[test]
    fn distribution_constant() {
        let d = PiecewiseLinear::constant(1.5).distribution().unwrap();
        assert_eq!(d.ts(), &[1.5, 1.5]);
        assert_eq!(d.ms(), &[2.0, 0.0]);
        assert_eq!(d.eval(1.0), 2.0);
        assert_eq!(d.eval(1.5), 0.0);
    }

    #[test]
    fn distribution_affine() {
        // u = x + 1 on [-1,1]: m(t) = 2 - t on [0, 2]
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let d = u.distribution().unwrap();
        assert!((d.eval(0.5) - 1.5).abs() < 1e-15);
        assert!((d.eval(1.7) - 0.3).abs() < 1e-15);
        assert_eq!(d.eval(2.0), 0.0);
    }

    #[test]
    fn distribution_fig1_plateaus() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let d = u.distribution().unwrap();
        assert_eq!(d.eval(0.5), 2.0);
        // jump at the base plateau level
        assert!((d.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((d.eval(1.1) - 0.8).abs() < 1e-15);
        // top plateau jump to zero
        assert!((d.eval(1.1999999) - 0.6).abs() < 1e-6);
        assert_eq!(d.eval(1.2), 0.0);
    }

    #[test]
    fn distribution_rejects_negative() {
        let u = PiecewiseLinear::from_points(&[(-1.0, -0.5), (1.0, 1.0)]).unwrap();
        assert!(matches!(u.distribution(), Err(PlError::NegativeValues { .. })));
    }

    #[test]
    fn monotone_rearrange_identity() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 0.5), (1.0, 2.0)]).unwrap();
        assert_eq!(u.monotone_rearrange().unwrap(), u);
    }

    #[test]
    fn monotone_rearrange_fig1() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let star = u.monotone_rearrange().unwrap();
        // 1 on [-1, 0], slope 1/2 ramp on [0, 0.4], 1.2 on [0.4, 1]
        assert!((star.eval(-0.5) - 1.0).abs() < 1e-12);
        assert!((star.eval(0.2) - 1.1).abs() < 1e-12);
        assert!((star.eval(0.7) - 1.2).abs() < 1e-12);
        assert!(star.is_nondecreasing());
    }

    #[test]
    fn monotone_rearrange_tent() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        let star = u.monotone_rearrange().unwrap();
        // tent -> (x + 1) / 2
        for &x in &[-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert!((star.eval(x) - (x + 1.0) / 2.0).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn symmetric_rearrange_affine() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let bar = u.symmetric_rearrange().unwrap();
        for &x in &[-1.0, -0.4, 0.0, 0.4, 1.0] {
            assert!((bar.eval(x) - (2.0 - 2.0 * x.abs())).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn symmetric_rearrange_tent_fixed_point() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(u.symmetric_rearrange().unwrap(), u);
    }

    #[test]
    fn symmetric_matches_section8_display() {
        // v̄ = 0, s = 0.8, t = 1.0, ε = 0.05
        let u = fig1(0.0, 0.8, 1.0, 0.05);
        let bar = u.symmetric_rearrange().unwrap();
        let (s, t, eps) = (0.8, 1.0, 0.05);
        let st2 = (s - t) / 2.0;
        assert!((bar.eval(st2 - 0.1) - 0.0).abs() < 1e-12);
        assert!((bar.eval(st2 + 0.02) - 0.02).abs() < 1e-12);
        assert!((bar.eval(0.0) - eps).abs() < 1e-12);
        assert!((bar.eval(-st2 + 0.1) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn change_of_variable_identity() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let star = u.monotone_rearrange().unwrap();
        let bar = u.symmetric_rearrange().unwrap();
        let mut y = -1.0;
        while y <= 0.0 {
            assert!((bar.eval(y) - star.eval(2.0 * y + 1.0)).abs() < 1e-12);
            y += 0.01;
        }
    }

    #[test]
    fn rearranged_preimage_fig1() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let y = u.rearranged_preimage(1.1).unwrap();
        assert!((y - 0.2).abs() < 1e-12);
        let star = u.monotone_rearrange().unwrap();
        assert!((star.eval(y) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn rearranged_preimage_monotone_identity() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let y = u.rearranged_preimage(0.7).unwrap();
        assert!((y - (-0.3)).abs() < 1e-12);
    }

    #[test]
    fn rearranged_preimage_tent() {
        let u = PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        let y = u.rearranged_preimage(0.5).unwrap();
        assert!((y - 0.0).abs() < 1e-12);
        let star = u.monotone_rearrange().unwrap();
        assert!((star.eval(y) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rearranged_preimage_irregular() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        assert!(matches!(u.rearranged_preimage(1.2), Err(PlError::IrregularLevel { .. })));
        assert!(matches!(u.rearranged_preimage(1.0), Err(PlError::IrregularLevel { .. })));
    }

    #[test]
    fn slope_identity_on_windows() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let star = u.monotone_rearrange().unwrap();
        for w in u.level_windows() {
            let v = 0.5 * (w.lo + w.hi);
            let ystar = u.rearranged_preimage(v).unwrap();
            let inv_star = 1.0 / star.slope_at(ystar).abs();
            let sum: f64 = w.branches.iter().map(|b| (1.0 / b.slope).abs()).sum();
            assert!((inv_star - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn equimeasurable_and_conserving() {
        let u = fig1(1.0, -0.5, 0.5, 0.2);
        let star = u.monotone_rearrange().unwrap();
        let bar = u.symmetric_rearrange().unwrap();
        let du = u.distribution().unwrap();
        let ds = star.distribution().unwrap();
        let db = bar.distribution().unwrap();
        let mut t = 0.9;
        while t < 1.3 {
            assert!((du.eval(t) - ds.eval(t)).abs() < 1e-12);
            assert!((du.eval(t) - db.eval(t)).abs() < 1e-12);
            t += 0.003;
        }
        let (mu, ms, mb) = (u.metrics(), star.metrics(), bar.metrics());
        assert!((mu.integral - ms.integral).abs() < 1e-12);
        assert!((mu.integral - mb.integral).abs() < 1e-12);
        assert_eq!(mu.min, ms.min);
        assert_eq!(mu.max, ms.max);
    }

    #[test]
    fn l1_distances_exact() {
        let a = PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        let b = PiecewiseLinear::from_points(&[(-1.0, 2.0), (1.0, 0.0)]).unwrap();
        // |(x+1) - (1-x)| = 2|x|, integral = 2
        assert!((a.l1_distance(&b) - 2.0).abs() < 1e-15);
        assert!((a.l1_derivative_distance(&b) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn bad_breakpoints_rejected() {
        assert!(PiecewiseLinear::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0], vec![1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![f64::NAN, 2.0]).is_err());
    }
}
