//! Weights `a(x, v) >= 0` on `[-1, 1] x [v_min, v_max]` and the conditions
//! that govern the rearrangement inequalities.
//!
//! A weight is backed either by a parsed expression in `x, v`, by a uniform
//! grid (PL in `x` at even `k`, linear in `v` between samples), or by a
//! lazy combination (pointwise max/sum, zero-mollification). For grid-backed
//! weights the node-only condition check is exact: the defect of the
//! inequality is linear between node configurations, so it attains its sign
//! at the nodes.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{Bindings, EvalError, Expr};
use crate::math;
use crate::pl::PiecewiseLinear;

/// Verdict tolerance for sampled condition checks.
pub const CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightError {
    /// The weight took a negative value on the evaluation grid.
    Negative { x: f64, v: f64, value: f64 },
    /// Expression evaluation failed (domain error or stray variable).
    Eval(EvalError),
    /// The expression may only use the variables `x` and `v`.
    InvalidExpression,
    /// Grid backing must have an even `k >= 2` and matching row lengths.
    BadGrid,
    /// Combined weights need overlapping `v` ranges.
    IncompatibleRange,
    /// No sampled `v` had a nontrivial slice `a(., v)`.
    EmptyU,
    /// The alternating-sum point left `[-1, 1]`.
    ArgumentPointOutsideDomain { point: f64 },
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::Negative { x, v, value } => {
                write!(f, "weight is negative: a({x}, {v}) = {value}")
            }
            WeightError::Eval(e) => write!(f, "weight evaluation failed: {e}"),
            WeightError::InvalidExpression => write!(f, "weight expressions may only use `x` and `v`"),
            WeightError::BadGrid => write!(f, "grid weight needs even k >= 2 and rows of k + 1 values"),
            WeightError::IncompatibleRange => write!(f, "weights have disjoint v ranges"),
            WeightError::EmptyU => write!(f, "a(., v) vanishes identically for every sampled v"),
            WeightError::ArgumentPointOutsideDomain { point } => {
                write!(f, "alternating-sum point {point} is outside [-1, 1]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WeightError {}

impl From<EvalError> for WeightError {
    fn from(e: EvalError) -> Self {
        WeightError::Eval(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Max,
    Sum,
}

/// A closed subset of the value axis: finite union of points and intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSet {
    intervals: Vec<(f64, f64)>,
}

impl ValueSet {
    /// Builds from (lo, hi) pairs; points are degenerate intervals.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|&(lo, hi)| lo <= hi);
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = math::max(last.1, hi),
                _ => merged.push((lo, hi)),
            }
        }
        ValueSet { intervals: merged }
    }

    pub fn point(v: f64) -> Self {
        ValueSet::new(alloc::vec![(v, v)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Exact distance from `v` to the set (infinity when empty).
    pub fn dist(&self, v: f64) -> f64 {
        let mut d = f64::INFINITY;
        for &(lo, hi) in &self.intervals {
            let di = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            d = math::min(d, di);
        }
        d
    }
}

/// Uniform grid backing: values at `x_i = -1 + 2i/k` per `v` sample,
/// PL in `x`, linear in `v` between samples (clamped outside).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    k: usize,
    v_samples: Vec<f64>,
    /// `values[j][i]` is the value at `(x_i, v_samples[j])`.
    values: Vec<Vec<f64>>,
}

impl Grid {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v_samples(&self) -> &[f64] {
        &self.v_samples
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn eval(&self, x: f64, v: f64) -> f64 {
        let row = |j: usize| -> f64 {
            let vals = &self.values[j];
            let x = math::min(math::max(x, -1.0), 1.0);
            let pos = (x + 1.0) * (self.k as f64) / 2.0;
            let i = (math::floor(pos) as usize).min(self.k - 1);
            let frac = pos - i as f64;
            vals[i] * (1.0 - frac) + vals[i + 1] * frac
        };
        let n = self.v_samples.len();
        if n == 1 || v <= self.v_samples[0] {
            return row(0);
        }
        if v >= self.v_samples[n - 1] {
            return row(n - 1);
        }
        let j = self.v_samples.partition_point(|&s| s <= v) - 1;
        let (v0, v1) = (self.v_samples[j], self.v_samples[j + 1]);
        let w = (v - v0) / (v1 - v0);
        row(j) * (1.0 - w) + row(j + 1) * w
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Backing {
    Expr(Expr),
    Grid(Grid),
    Combine {
        lhs: Box<Weight>,
        rhs: Box<Weight>,
        mode: CombineMode,
    },
    Mollified {
        base: Box<Weight>,
        zero_near: ValueSet,
        ell: u32,
    },
}

/// A weight `a(x, v)` with its value interval of interest. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    backing: Backing,
    v_range: (f64, f64),
}

/// Grid sizes for sampled condition checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub x: usize,
    pub v: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { x: 257, v: 129 }
    }
}

impl Resolution {
    pub fn coarse() -> Self {
        Resolution { x: 65, v: 17 }
    }
}

/// Worst violating configuration of a sampled condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub s: f64,
    pub t: f64,
    pub v: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub holds: bool,
    pub worst: Option<Violation>,
}

impl Check {
    fn from_worst(worst: Option<Violation>) -> Self {
        Check { holds: worst.is_none(), worst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    /// Node-only check on a uniform PL grid; exact by linearity.
    ExactNodes { k: usize },
    Sampled { x: usize, v: usize },
}

/// Outcome of the admissibility / convexity condition checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub even: Check,
    /// `a(s,v) + a(t,v) >= a(1 - t + s, v)` for `s <= t`.
    pub cond_c: Option<Check>,
    /// `a(s,v) + a(t,v) >= a((s-t)/2, v) + a((t-s)/2, v)`.
    pub cond_sym: Option<Check>,
    /// Midpoint convexity on the `x` grid (the equivalent characterization
    /// of the symmetric condition together with evenness).
    pub midpoint_convex: Option<Check>,
    /// Whether the direct symmetric check and even+convex agree.
    pub verdicts_agree: bool,
    pub method: CheckMethod,
}

impl ConditionReport {
    /// Even and satisfying the monotone-rearrangement condition.
    pub fn admissible(&self) -> bool {
        self.even.holds && self.cond_c.as_ref().is_some_and(|c| c.holds)
    }

    /// Satisfying the symmetric-rearrangement condition.
    pub fn symmetric_ok(&self) -> bool {
        self.cond_sym.as_ref().is_some_and(|c| c.holds)
    }
}

/// Result of the alternating chain bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainBound {
    pub lhs: f64,
    /// Value at the primary alternating-sum point.
    pub rhs: f64,
    pub rhs_point: f64,
    pub holds: bool,
    /// Value at the even-weight variant point.
    pub rhs_even: f64,
    pub rhs_even_point: f64,
    pub holds_even: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroSetVerdict {
    AllZero,
    NoZeros,
    Periodic { period: f64 },
    /// Zero pattern inconsistent with an admissible weight.
    Violates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSetReport {
    pub zeros: Vec<f64>,
    pub verdict: ZeroSetVerdict,
}

impl Weight {
    pub fn from_expr(expr: Expr, v_range: (f64, f64)) -> Result<Self, WeightError> {
        let (_, _, uses_p) = expr.variables();
        if uses_p || v_range.0 > v_range.1 {
            return Err(WeightError::InvalidExpression);
        }
        Ok(Weight { backing: Backing::Expr(expr), v_range })
    }

    pub fn parse(text: &str, v_range: (f64, f64)) -> Result<Self, WeightError> {
        let expr = Expr::parse(text).map_err(|_| WeightError::InvalidExpression)?;
        Self::from_expr(expr, v_range)
    }

    pub fn from_grid(k: usize, v_samples: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, WeightError> {
        if k < 2 || k % 2 != 0 || v_samples.is_empty() || values.len() != v_samples.len() {
            return Err(WeightError::BadGrid);
        }
        if values.iter().any(|row| row.len() != k + 1) {
            return Err(WeightError::BadGrid);
        }
        if v_samples.windows(2).any(|w| w[0] >= w[1]) {
            return Err(WeightError::BadGrid);
        }
        let v_range = (v_samples[0], *v_samples.last().unwrap());
        Ok(Weight {
            backing: Backing::Grid(Grid { k, v_samples, values }),
            v_range,
        })
    }

    pub fn constant(c: f64, v_range: (f64, f64)) -> Self {
        Weight { backing: Backing::Expr(Expr::Num(c)), v_range }
    }

    /// The auxiliary tent weight `Λ(x) = 1 - |x|`.
    pub fn tent(v_range: (f64, f64)) -> Self {
        Weight::parse("1 - abs(x)", v_range).unwrap()
    }

    pub fn v_range(&self) -> (f64, f64) {
        self.v_range
    }

    pub fn eval(&self, x: f64, v: f64) -> Result<f64, WeightError> {
        match &self.backing {
            Backing::Expr(e) => Ok(e.eval(&Bindings::xv(x, v))?),
            Backing::Grid(g) => Ok(g.eval(x, v)),
            Backing::Combine { lhs, rhs, mode } => {
                let (a, b) = (lhs.eval(x, v)?, rhs.eval(x, v)?);
                Ok(match mode {
                    CombineMode::Max => math::max(a, b),
                    CombineMode::Sum => a + b,
                })
            }
            Backing::Mollified { base, zero_near, ell } => {
                let a = base.eval(x, v)?;
                let d = zero_near.dist(v);
                Ok(a * rho((*ell as f64) * d - 1.0))
            }
        }
    }

    /// x-abscissas where the weight is only piecewise-smooth (grid nodes),
    /// used as mandatory quadrature split points.
    pub fn x_nodes(&self) -> Vec<f64> {
        match &self.backing {
            Backing::Expr(_) => Vec::new(),
            Backing::Grid(g) => (0..=g.k).map(|i| -1.0 + 2.0 * (i as f64) / (g.k as f64)).collect(),
            Backing::Combine { lhs, rhs, .. } => {
                let mut n = lhs.x_nodes();
                n.extend(rhs.x_nodes());
                n.sort_by(|a, b| a.partial_cmp(b).unwrap());
                n.dedup();
                n
            }
            Backing::Mollified { base, .. } => base.x_nodes(),
        }
    }

    /// True when the weight is exactly PL in `x` on the uniform `k`-grid.
    pub fn exact_node_k(&self) -> Option<usize> {
        match &self.backing {
            Backing::Grid(g) => Some(g.k),
            Backing::Mollified { base, .. } => base.exact_node_k(),
            Backing::Combine { lhs, rhs, mode: CombineMode::Sum } => match (lhs.exact_node_k(), rhs.exact_node_k()) {
                (Some(a), Some(b)) if a == b => Some(a),
                _ => None,
            },
            _ => None,
        }
    }

    /// Grid maximum of the weight over `[-1, 1] x [v_lo, v_hi]`, inflated by
    /// 10% unless the weight is exactly grid-backed. Upper bound for the
    /// counterexample parameter formulas.
    pub fn max_bound(&self, v_lo: f64, v_hi: f64) -> Result<f64, WeightError> {
        let (nx, nv) = (513, 129);
        let mut m = 0.0_f64;
        for j in 0..nv {
            let v = lerp_idx(v_lo, v_hi, j, nv);
            for i in 0..nx {
                let x = lerp_idx(-1.0, 1.0, i, nx);
                m = math::max(m, self.eval(x, v)?);
            }
        }
        if self.exact_node_k().is_some() {
            Ok(m)
        } else {
            Ok(m * 1.1)
        }
    }

    fn v_grid(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| lerp_idx(self.v_range.0, self.v_range.1, j, n)).collect()
    }

    /// Values on a uniform x-grid for one `v`, rejecting negatives.
    fn sample_row(&self, n: usize, v: f64) -> Result<Vec<f64>, WeightError> {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let x = lerp_idx(-1.0, 1.0, i, n);
            let val = self.eval(x, v)?;
            if val < -1e-12 {
                return Err(WeightError::Negative { x, v, value: val });
            }
            row.push(val);
        }
        Ok(row)
    }

    /// Decides evenness and the monotone-rearrangement condition
    /// `a(s,v) + a(t,v) >= a(1 - t + s, v)`.
    ///
    /// For grid-backed weights the check runs on the nodes only and is
    /// exact; otherwise it samples `resolution.x` x-nodes by `resolution.v`
    /// v-values over the weight's `v` range.
    pub fn check_admissible(&self, resolution: Resolution) -> Result<ConditionReport, WeightError> {
        let (n, vs, method) = self.check_lattice(resolution)?;
        let mut even_worst: Option<Violation> = None;
        let mut cond_worst: Option<Violation> = None;
        for &v in &vs {
            let w = self.sample_row(n, v)?;
            scan_evenness(&w, v, n, &mut even_worst);
            // 1 - t + s lands back on the lattice: index n-1-(j-i)
            for j in 0..n {
                for i in 0..=j {
                    let defect = w[n - 1 - (j - i)] - w[i] - w[j];
                    if defect > CONDITION_TOL {
                        note_worst(&mut cond_worst, Violation {
                            s: lerp_idx(-1.0, 1.0, i, n),
                            t: lerp_idx(-1.0, 1.0, j, n),
                            v,
                            magnitude: defect,
                        });
                    }
                }
            }
        }
        Ok(ConditionReport {
            even: Check::from_worst(even_worst),
            cond_c: Some(Check::from_worst(cond_worst)),
            cond_sym: None,
            midpoint_convex: None,
            verdicts_agree: true,
            method,
        })
    }

    /// Decides the symmetric-rearrangement condition
    /// `a(s,v) + a(t,v) >= a((s-t)/2, v) + a((t-s)/2, v)` and, alongside,
    /// the equivalent even + midpoint-convex characterization.
    pub fn check_symmetric_condition(&self, resolution: Resolution) -> Result<ConditionReport, WeightError> {
        let (n, vs, method) = self.check_lattice(resolution)?;
        // (s - t)/2 lives on the half-step lattice; sample 2n - 1 points
        let dn = 2 * n - 1;
        let mut even_worst: Option<Violation> = None;
        let mut sym_worst: Option<Violation> = None;
        let mut convex_worst: Option<Violation> = None;
        for &v in &vs {
            let dw = self.sample_row(dn, v)?;
            let w: Vec<f64> = (0..n).map(|i| dw[2 * i]).collect();
            scan_evenness(&w, v, n, &mut even_worst);
            for j in 0..n {
                for i in 0..=j {
                    // (s - t)/2 with s = x_i <= t = x_j: offset -(j-i) half-steps from 0
                    let mid = (dn - 1) / 2;
                    let defect = dw[mid - (j - i)] + dw[mid + (j - i)] - w[i] - w[j];
                    if defect > CONDITION_TOL {
                        note_worst(&mut sym_worst, Violation {
                            s: lerp_idx(-1.0, 1.0, i, n),
                            t: lerp_idx(-1.0, 1.0, j, n),
                            v,
                            magnitude: defect,
                        });
                    }
                }
            }
            for i in 1..n - 1 {
                let defect = 2.0 * w[i] - w[i - 1] - w[i + 1];
                if defect > CONDITION_TOL {
                    note_worst(&mut convex_worst, Violation {
                        s: lerp_idx(-1.0, 1.0, i - 1, n),
                        t: lerp_idx(-1.0, 1.0, i + 1, n),
                        v,
                        magnitude: defect,
                    });
                }
            }
        }
        let even = Check::from_worst(even_worst);
        let sym = Check::from_worst(sym_worst);
        let convex = Check::from_worst(convex_worst);
        let verdicts_agree = sym.holds == (even.holds && convex.holds);
        Ok(ConditionReport {
            even,
            cond_c: None,
            cond_sym: Some(sym),
            midpoint_convex: Some(convex),
            verdicts_agree,
            method,
        })
    }

    fn check_lattice(&self, resolution: Resolution) -> Result<(usize, Vec<f64>, CheckMethod), WeightError> {
        if let Backing::Grid(g) = &self.backing {
            Ok((g.k + 1, g.v_samples.clone(), CheckMethod::ExactNodes { k: g.k }))
        } else {
            let n = resolution.x.max(3);
            let nv = resolution.v.max(1);
            Ok((n, self.v_grid(nv), CheckMethod::Sampled { x: n, v: nv }))
        }
    }

    /// PL interpolation at the uniform nodes `-1 + 2i/k`. Preserves the
    /// monotone-rearrangement condition (interpolation is linear between
    /// node configurations).
    pub fn interpolate(&self, k: usize) -> Result<Weight, WeightError> {
        if k < 2 || k % 2 != 0 {
            return Err(WeightError::BadGrid);
        }
        let v_samples = match &self.backing {
            Backing::Grid(g) => g.v_samples.clone(),
            _ => {
                if self.v_range.0 == self.v_range.1 {
                    alloc::vec![self.v_range.0]
                } else {
                    self.v_grid(129)
                }
            }
        };
        let mut values = Vec::with_capacity(v_samples.len());
        for &v in &v_samples {
            values.push(self.sample_row(k + 1, v)?);
        }
        Weight::from_grid(k, v_samples, values)
    }

    /// Pointwise max or sum; closed under both admissibility conditions.
    pub fn combine(&self, other: &Weight, mode: CombineMode) -> Result<Weight, WeightError> {
        let lo = math::max(self.v_range.0, other.v_range.0);
        let hi = math::min(self.v_range.1, other.v_range.1);
        if lo > hi {
            return Err(WeightError::IncompatibleRange);
        }
        Ok(Weight {
            backing: Backing::Combine {
                lhs: Box::new(self.clone()),
                rhs: Box::new(other.clone()),
                mode,
            },
            v_range: (lo, hi),
        })
    }

    /// Checks the alternating chain bounds for a sorted tuple `ts`.
    pub fn chain_bound(&self, v: f64, ts: &[f64]) -> Result<ChainBound, WeightError> {
        let n = ts.len();
        assert!(n >= 1, "chain bound needs at least one point");
        let mut lhs = 0.0;
        let mut alt = 0.0; // Σ (-1)^k t_k, k = 1..n
        for (k, &t) in ts.iter().enumerate() {
            lhs += self.eval(t, v)?;
            alt += if (k + 1) % 2 == 0 { t } else { -t };
        }
        let (rhs_point, rhs_even_point) = if n % 2 == 0 {
            (1.0 - alt, -1.0 + alt)
        } else {
            (-alt, alt)
        };
        for &p in &[rhs_point, rhs_even_point] {
            if !(-1.0..=1.0).contains(&p) {
                return Err(WeightError::ArgumentPointOutsideDomain { point: p });
            }
        }
        let rhs = self.eval(rhs_point, v)?;
        let rhs_even = self.eval(rhs_even_point, v)?;
        Ok(ChainBound {
            lhs,
            rhs,
            rhs_point,
            holds: lhs >= rhs - CONDITION_TOL,
            rhs_even,
            rhs_even_point,
            holds_even: lhs >= rhs_even - CONDITION_TOL,
        })
    }

    /// Finds and classifies the zero set of `a(., v)` per the periodicity
    /// dichotomy: identically zero, or zeros periodic with a period
    /// dividing `1 - x0`.
    pub fn zero_set_analysis(&self, v: f64, tol: f64) -> Result<ZeroSetReport, WeightError> {
        const N: usize = 4097;
        let dx = 2.0 / ((N - 1) as f64);
        let mut zeros = Vec::new();
        let mut all_zero = true;
        let mut cluster: Option<(f64, f64)> = None; // (best_x, best_val)
        for i in 0..N {
            let x = lerp_idx(-1.0, 1.0, i, N);
            let val = self.eval(x, v)?;
            if val < -1e-12 {
                return Err(WeightError::Negative { x, v, value: val });
            }
            if val <= tol {
                cluster = match cluster {
                    Some((_, bv)) if val < bv => Some((x, val)),
                    Some(c) => Some(c),
                    None => Some((x, val)),
                };
            } else {
                all_zero = false;
                if let Some((bx, _)) = cluster.take() {
                    zeros.push(bx);
                }
            }
        }
        if let Some((bx, _)) = cluster {
            zeros.push(bx);
        }
        if all_zero {
            return Ok(ZeroSetReport { zeros, verdict: ZeroSetVerdict::AllZero });
        }
        if zeros.is_empty() {
            return Ok(ZeroSetReport { zeros, verdict: ZeroSetVerdict::NoZeros });
        }
        let grid_tol = 2.0 * dx;
        let x0 = zeros[0];
        let verdict = if math::abs(zeros[zeros.len() - 1] - 1.0) > grid_tol {
            // s = t = x0 in the condition forces a(1) = 0
            ZeroSetVerdict::Violates
        } else if zeros.len() == 1 {
            ZeroSetVerdict::Periodic { period: 0.0 }
        } else {
            let mut period = f64::INFINITY;
            for w in zeros.windows(2) {
                period = math::min(period, w[1] - w[0]);
            }
            let ok = zeros.iter().all(|&z| {
                let ratio = (z - x0) / period;
                math::abs(ratio - math::floor(ratio + 0.5)) * period <= grid_tol
            }) && {
                let ratio = (1.0 - x0) / period;
                math::abs(ratio - math::floor(ratio + 0.5)) * period <= grid_tol
            };
            if ok {
                ZeroSetVerdict::Periodic { period }
            } else {
                ZeroSetVerdict::Violates
            }
        };
        Ok(ZeroSetReport { zeros, verdict })
    }

    /// The oscillation-to-minimum ratio `D_k` near the graph of `u`:
    /// sup over sampled `v` with `a(., v)` nontrivial of
    /// (max oscillation of `a(., v)` over windows of width `2/k`) /
    /// (min of `a(., v)` within distance `2/k` of the level set of `v`).
    ///
    /// Returns `+inf` when a denominator vanishes.
    pub fn oscillation_ratio(&self, u: &PiecewiseLinear, k: usize) -> Result<f64, WeightError> {
        assert!(k >= 2, "D_k needs k >= 2");
        const NX: usize = 2049;
        const NV: usize = 129;
        let dx = 2.0 / ((NX - 1) as f64);
        let window = 2.0 / (k as f64);
        let w_idx = ((window / dx) as usize).max(1);
        let (v_lo, v_hi) = (u.min_value(), u.max_value());
        let mut sup = 0.0_f64;
        let mut seen_nontrivial = false;
        for j in 0..NV {
            let v = lerp_idx(v_lo, v_hi, j, NV);
            let row = self.sample_row(NX, v)?;
            if row.iter().all(|&a| a <= 1e-12) {
                continue;
            }
            seen_nontrivial = true;
            let osc = max_window_oscillation(&row, w_idx);
            let denom = min_near_level_set(&row, u, v, window, dx);
            if denom <= 1e-300 {
                return Ok(f64::INFINITY);
            }
            sup = math::max(sup, osc / denom);
        }
        if !seen_nontrivial {
            return Err(WeightError::EmptyU);
        }
        Ok(sup)
    }

    /// Multiplies the weight by a ramp vanishing on the `(1/ell)`-
    /// neighborhood of `zero_near` and saturating to 1 outside the
    /// `(2/ell)`-neighborhood. Nondecreasing in `ell`, never exceeds `a`.
    pub fn zero_mollify(&self, zero_near: ValueSet, ell: u32) -> Weight {
        assert!(ell >= 1);
        Weight {
            backing: Backing::Mollified {
                base: Box::new(self.clone()),
                zero_near,
                ell,
            },
            v_range: self.v_range,
        }
    }
}

fn rho(d: f64) -> f64 {
    math::min(1.0, math::max(0.0, d))
}

fn lerp_idx(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        return lo;
    }
    lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
}

fn note_worst(slot: &mut Option<Violation>, v: Violation) {
    match slot {
        Some(w) if w.magnitude >= v.magnitude => {}
        _ => *slot = Some(v),
    }
}

fn scan_evenness(w: &[f64], v: f64, n: usize, worst: &mut Option<Violation>) {
    for i in 0..n / 2 {
        let mag = math::abs(w[i] - w[n - 1 - i]);
        if mag > CONDITION_TOL {
            let x = lerp_idx(-1.0, 1.0, i, n);
            note_worst(worst, Violation { s: x, t: -x, v, magnitude: mag });
        }
    }
}

/// Max over all index windows of width `w` of (window max - window min),
/// via monotone deques.
fn max_window_oscillation(row: &[f64], w: usize) -> f64 {
    let n = row.len();
    let mut maxq: Vec<usize> = Vec::new();
    let mut minq: Vec<usize> = Vec::new();
    let mut best = 0.0_f64;
    for i in 0..n {
        while maxq.first().is_some_and(|&f| i - f > w) {
            maxq.remove(0);
        }
        while minq.first().is_some_and(|&f| i - f > w) {
            minq.remove(0);
        }
        while maxq.last().is_some_and(|&l| row[l] <= row[i]) {
            maxq.pop();
        }
        while minq.last().is_some_and(|&l| row[l] >= row[i]) {
            minq.pop();
        }
        maxq.push(i);
        minq.push(i);
        best = math::max(best, row[maxq[0]] - row[minq[0]]);
    }
    best
}

/// Min of `row` over grid points within `radius` of the level set
/// `{x : u(x) = v}` (plateaus at the level contribute whole intervals).
fn min_near_level_set(row: &[f64], u: &PiecewiseLinear, v: f64, radius: f64, dx: f64) -> f64 {
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (x0, x1, y0, y1) in u.segments() {
        if y0 == y1 {
            if y0 == v {
                intervals.push((x0 - radius, x1 + radius));
            }
        } else if (math::min(y0, y1)..=math::max(y0, y1)).contains(&v) {
            let xc = x0 + (v - y0) * (x1 - x0) / (y1 - y0);
            intervals.push((xc - radius, xc + radius));
        }
    }
    if intervals.is_empty() {
        return f64::INFINITY;
    }
    let set = ValueSet::new(intervals);
    let mut m = f64::INFINITY;
    for (i, &val) in row.iter().enumerate() {
        let x = -1.0 + (i as f64) * dx;
        if set.dist(x) == 0.0 {
            m = math::min(m, val);
        }
    }
    m
}

/// Discrete inf-convolution with `|.|`: the largest 1-Lipschitz minorant of
/// the samples on the grid. Zero set is preserved.
pub fn lipschitz_envelope(values: &[f64], grid: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), grid.len());
    let n = values.len();
    let mut out = values.to_vec();
    for i in 1..n {
        let step = grid[i] - grid[i - 1];
        out[i] = math::min(out[i], out[i - 1] + step);
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let step = grid[i + 1] - grid[i];
        out[i] = math::min(out[i], out[i + 1] + step);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const VR: (f64, f64) = (0.0, 2.0);

    #[test]
    fn constant_weight_admissible() {
        let a = Weight::constant(1.0, VR);
        let r = a.check_admissible(Resolution::coarse()).unwrap();
        assert!(r.even.holds);
        assert!(r.admissible());
    }

    #[test]
    fn abs_weight_fails_condition() {
        let a = Weight::parse("abs(x)", VR).unwrap();
        let r = a.check_admissible(Resolution::coarse()).unwrap();
        assert!(r.even.holds);
        let c = r.cond_c.unwrap();
        assert!(!c.holds);
        let w = c.worst.unwrap();
        // worst violation is at s = t = 0: 0 + 0 < a(1) = 1
        assert!((w.s - 0.0).abs() < 1e-12 && (w.t - 0.0).abs() < 1e-12);
        assert!((w.magnitude - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tent_weight_admissible() {
        let a = Weight::tent(VR);
        let r = a.check_admissible(Resolution::coarse()).unwrap();
        assert!(r.admissible());
    }

    #[test]
    fn asymmetric_weight_fails_evenness() {
        let a = Weight::parse("1 + x/2", VR).unwrap();
        let r = a.check_admissible(Resolution::coarse()).unwrap();
        assert!(!r.even.holds);
    }

    #[test]
    fn symmetric_condition_examples() {
        let sq = Weight::parse("x^2", VR).unwrap();
        let r = sq.check_symmetric_condition(Resolution::coarse()).unwrap();
        assert!(r.symmetric_ok());
        assert!(r.verdicts_agree);

        let tent = Weight::tent(VR);
        let r = tent.check_symmetric_condition(Resolution::coarse()).unwrap();
        assert!(!r.symmetric_ok());
        assert!(r.verdicts_agree);

        let tilted = Weight::parse("1 + x/2", VR).unwrap();
        let r = tilted.check_symmetric_condition(Resolution::coarse()).unwrap();
        assert!(!r.symmetric_ok());
        assert!(!r.even.holds);
    }

    #[test]
    fn tent_violates_81_with_known_witness() {
        // s = 0.8, t = 1: 0.2 + 0 < a(-0.1) + a(0.1) = 1.8
        let a = Weight::tent(VR);
        let lhs = a.eval(0.8, 0.0).unwrap() + a.eval(1.0, 0.0).unwrap();
        let rhs = a.eval(-0.1, 0.0).unwrap() + a.eval(0.1, 0.0).unwrap();
        assert!(lhs + 1.0 < rhs);
    }

    #[test]
    fn interpolation_fixed_point_and_node_check() {
        let tent = Weight::tent(VR);
        let g = tent.interpolate(2).unwrap();
        for &x in &[-1.0, -0.5, 0.0, 0.3, 1.0] {
            assert!((g.eval(x, 1.0).unwrap() - (1.0 - x.abs())).abs() < 1e-12);
        }
        assert!(g.check_admissible(Resolution::coarse()).unwrap().admissible());

        let cosw = Weight::parse("cos(1.5707963267948966*x)", VR).unwrap();
        let g = cosw.interpolate(4).unwrap();
        assert!((g.eval(-0.5, 0.0).unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(g.check_admissible(Resolution::default()).unwrap().admissible());

        // |x| still violates at the nodes
        let absw = Weight::parse("abs(x)", VR).unwrap();
        let g = absw.interpolate(2).unwrap();
        assert!(!g.check_admissible(Resolution::coarse()).unwrap().admissible());
    }

    #[test]
    fn combine_closure() {
        let tent = Weight::tent(VR);
        let half = Weight::constant(0.5, VR);
        let m = tent.combine(&half, CombineMode::Max).unwrap();
        assert!(m.interpolate(64).unwrap().check_admissible(Resolution::coarse()).unwrap().admissible());
        let s = tent.combine(&Weight::constant(1.0, VR), CombineMode::Sum).unwrap();
        assert!(s.check_admissible(Resolution::coarse()).unwrap().admissible());
        // idempotence of max
        let mm = tent.combine(&tent, CombineMode::Max).unwrap();
        assert!((mm.eval(0.3, 0.5).unwrap() - tent.eval(0.3, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn chain_bound_cases() {
        let a = Weight::tent(VR);
        // n = 1 identity
        let r = a.chain_bound(0.0, &[0.3]).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-15);
        assert!((r.rhs_point - 0.3).abs() < 1e-15);
        // even n
        let r = a.chain_bound(0.0, &[-0.5, 0.5]).unwrap();
        assert!((r.rhs_point - 0.0).abs() < 1e-15);
        assert!(r.holds && (r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
        // odd n
        let r = a.chain_bound(0.0, &[-0.8, 0.0, 0.8]).unwrap();
        assert!(r.holds && r.holds_even);
    }

    #[test]
    fn zero_set_classification() {
        let tent = Weight::tent(VR);
        let r = tent.zero_set_analysis(0.5, 1e-9).unwrap();
        assert!(matches!(r.verdict, ZeroSetVerdict::Periodic { period } if (period - 2.0).abs() < 1e-2));

        let sine = Weight::parse("abs(sin(3.141592653589793*x))", VR).unwrap();
        let r = sine.zero_set_analysis(0.5, 1e-6).unwrap();
        assert!(matches!(r.verdict, ZeroSetVerdict::Periodic { period } if (period - 1.0).abs() < 1e-2));
        assert_eq!(r.zeros.len(), 3);

        let zero = Weight::constant(0.0, VR);
        let r = zero.zero_set_analysis(0.5, 1e-9).unwrap();
        assert!(matches!(r.verdict, ZeroSetVerdict::AllZero));

        let one = Weight::constant(1.0, VR);
        let r = one.zero_set_analysis(0.5, 1e-9).unwrap();
        assert!(matches!(r.verdict, ZeroSetVerdict::NoZeros));
    }

    #[test]
    fn oscillation_ratio_examples() {
        let u = crate::pl::PiecewiseLinear::from_points(&[(-1.0, 0.0), (1.0, 2.0)]).unwrap();
        // constant weight: zero oscillation
        let one = Weight::constant(1.0, VR);
        assert_eq!(one.oscillation_ratio(&u, 10).unwrap(), 0.0);
        // 1 - |x|/2: min 1/2, oscillation over width 2/k is 1/k
        let a = Weight::parse("1 - abs(x)/2", VR).unwrap();
        let d = a.oscillation_ratio(&u, 10).unwrap();
        assert!(d <= 0.2 + 1e-6, "D_10 = {d}");
        // a zero on the graph of u
        let z = Weight::parse("abs(x)", VR).unwrap();
        let u0 = crate::pl::PiecewiseLinear::from_points(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(z.oscillation_ratio(&u0, 8).unwrap().is_infinite());
    }

    #[test]
    fn mollification_profile() {
        let one = Weight::constant(1.0, VR);
        let b = one.zero_mollify(ValueSet::point(0.5), 10);
        assert_eq!(b.eval(0.0, 0.45).unwrap(), 0.0);
        assert_eq!(b.eval(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(b.eval(0.0, 0.8).unwrap(), 1.0);
        assert!((b.eval(0.0, 0.65).unwrap() - 0.5).abs() < 1e-12);
        // monotone in ell, below the base
        let b2 = one.zero_mollify(ValueSet::point(0.5), 20);
        let mut v = 0.0;
        while v <= 2.0 {
            let (x, y) = (b.eval(0.0, v).unwrap(), b2.eval(0.0, v).unwrap());
            assert!(x <= y + 1e-15 && y <= 1.0);
            v += 0.01;
        }
    }

    #[test]
    fn envelope_basic() {
        let grid = vec![0.0, 1.0];
        assert_eq!(lipschitz_envelope(&[3.0, 3.0], &grid), vec![3.0, 3.0]);
        assert_eq!(lipschitz_envelope(&[0.0, 5.0], &grid), vec![0.0, 1.0]);
    }

    #[test]
    fn envelope_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..40);
            let grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.13).collect();
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            let env = lipschitz_envelope(&vals, &grid);
            // O(n^2) oracle
            for i in 0..n {
                let oracle = (0..n)
                    .map(|j| vals[j] + (grid[i] - grid[j]).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!((env[i] - oracle).abs() < 1e-12);
            }
            // 1-Lipschitz by pairwise scan
            for i in 0..n {
                for j in 0..n {
                    assert!((env[i] - env[j]).abs() <= (grid[i] - grid[j]).abs() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn negative_weight_detected() {
        let a = Weight::parse("x", VR).unwrap();
        assert!(matches!(
            a.check_admissible(Resolution::coarse()),
            Err(WeightError::Negative { .. })
        ));
    }
}
