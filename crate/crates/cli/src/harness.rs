//! Seeded random instance generation and batch verification sweeps.
//!
//! Determinism contract: an identical [`SweepConfig`] yields an identical
//! instance stream (fixed ChaCha8 PRNG) and a byte-identical JSON report
//! (instances are generated up front and results are assembled in index
//! order regardless of worker scheduling).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rearrange_core::functional::{verify_rearrangement, Integrand, VerifyMode};
use rearrange_core::pl::PiecewiseLinear;
use rearrange_core::weight::{Resolution, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Monotone,
    Symmetric,
}

impl Mode {
    pub fn verify_mode(self) -> VerifyMode {
        match self {
            Mode::Monotone => VerifyMode::Monotone,
            Mode::Symmetric => VerifyMode::Symmetric,
        }
    }
}

/// Which pool of weights to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFamily {
    /// Even concave PL grids, their max/sum combinations, scaled tents,
    /// constants; re-verified by the admissibility check before emission.
    Admissible,
    /// Even convex weights; re-verified by the symmetric-condition check.
    EvenConvex,
    /// Known violators: `x^2`, `|x|`, `1 + x/2`, random grids.
    Violating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub count: usize,
    pub mode: Mode,
    pub family: WeightFamily,
    pub tolerance: f64,
    /// Range of interior breakpoint counts for random `u`.
    pub breakpoints: (usize, usize),
    /// Value range for random `u` (nonnegative).
    pub value_range: (f64, f64),
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 42,
            count: 100,
            mode: Mode::Monotone,
            family: WeightFamily::Admissible,
            tolerance: 1e-8,
            breakpoints: (2, 16),
            value_range: (0.0, 2.0),
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.count < 1 {
            return Err(HarnessError::Config("count must be >= 1"));
        }
        if self.breakpoints.0 > self.breakpoints.1 {
            return Err(HarnessError::Config("breakpoint range is inverted"));
        }
        if !(self.value_range.0 >= 0.0 && self.value_range.0 < self.value_range.1) {
            return Err(HarnessError::Config("value range must be nonnegative and nonempty"));
        }
        if !(self.tolerance > 0.0) {
            return Err(HarnessError::Config("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarnessError {
    /// 1000 consecutive weight candidates failed verification.
    GeneratorStall,
    Config(&'static str),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::GeneratorStall => write!(f, "weight generator stalled: 1000 rejections in a row"),
            HarnessError::Config(msg) => write!(f, "bad sweep config: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

#[derive(Debug, Clone)]
pub struct Instance {
    pub u: PiecewiseLinear,
    pub weight: Weight,
    pub integrand: Integrand,
    pub weight_desc: String,
    pub integrand_desc: String,
}

/// Draws `cfg.count` deterministic `(u, a, F)` triples. Admissible and
/// even-convex weights are re-verified before emission (rejection
/// sampling).
pub fn generate_instances(cfg: &SweepConfig) -> Result<Vec<Instance>, HarnessError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let u = random_u(&mut rng, cfg, cfg.mode == Mode::Symmetric);
        let (weight, weight_desc) = random_weight(&mut rng, cfg)?;
        let (integrand, integrand_desc) = random_integrand(&mut rng);
        out.push(Instance { u, weight, integrand, weight_desc, integrand_desc });
    }
    Ok(out)
}

fn random_u(rng: &mut ChaCha8Rng, cfg: &SweepConfig, zero_trace: bool) -> PiecewiseLinear {
    random_pl(rng, cfg.breakpoints, cfg.value_range, zero_trace)
}

/// Random nonnegative PL function on `[-1, 1]`: interior breakpoint count
/// drawn from `breakpoints`, values uniform in `value_range`, plateaus with
/// probability 0.3; `zero_trace` pins `u(-1) = u(1)` to the bottom of the
/// value range, so the boundary trace is also the minimum.
pub fn random_pl(
    rng: &mut ChaCha8Rng,
    breakpoints: (usize, usize),
    value_range: (f64, f64),
    zero_trace: bool,
) -> PiecewiseLinear {
    let interior = rng.gen_range(breakpoints.0..=breakpoints.1);
    let mut xs = vec![-1.0];
    let mut cursor = -1.0;
    for _ in 0..interior {
        // forward steps keep breakpoints strictly increasing
        cursor += rng.gen_range(0.01..1.0);
        if cursor >= 0.99 {
            break;
        }
        xs.push(cursor);
    }
    xs.push(1.0);
    let (lo, hi) = value_range;
    let mut ys: Vec<f64> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        if i > 0 && rng.gen_bool(0.3) {
            ys.push(ys[i - 1]); // plateau
        } else {
            ys.push(rng.gen_range(lo..hi));
        }
    }
    if zero_trace {
        ys[0] = lo;
        *ys.last_mut().unwrap() = lo;
    }
    PiecewiseLinear::new(xs, ys).expect("generated breakpoints are valid")
}

/// Even PL profile on the uniform `k`-grid from half-profile drops:
/// ascending drops give concavity, descending-from-center rises give
/// convexity.
fn even_profile(rng: &mut ChaCha8Rng, k: usize, concave: bool) -> Vec<f64> {
    let half = k / 2;
    let mut steps: Vec<f64> = (0..half).map(|_| rng.gen_range(0.0..1.0)).collect();
    steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = steps.iter().sum();
    let base = rng.gen_range(0.0..1.0);
    let center = if concave { base + total } else { base };
    let mut right = Vec::with_capacity(half + 1);
    right.push(center);
    let mut acc = center;
    for &d in &steps {
        acc += if concave { -d } else { d };
        right.push(acc);
    }
    let mut values: Vec<f64> = right.iter().rev().skip(1).copied().collect();
    values.extend(right);
    values
}

fn grid_weight(values: Vec<f64>) -> Weight {
    let k = values.len() - 1;
    Weight::from_grid(k, vec![0.0], vec![values]).expect("profile forms a valid grid")
}

fn random_weight(rng: &mut ChaCha8Rng, cfg: &SweepConfig) -> Result<(Weight, String), HarnessError> {
    let mut stalls = 0usize;
    loop {
        let (candidate, desc) = draw_weight(rng, cfg);
        let ok = match cfg.family {
            WeightFamily::Admissible => candidate
                .check_admissible(Resolution::default())
                .map(|r| r.admissible())
                .unwrap_or(false),
            WeightFamily::EvenConvex => candidate
                .check_symmetric_condition(Resolution::default())
                .map(|r| r.symmetric_ok())
                .unwrap_or(false),
            WeightFamily::Violating => true,
        };
        if ok {
            return Ok((candidate, desc));
        }
        stalls += 1;
        if stalls >= 1000 {
            return Err(HarnessError::GeneratorStall);
        }
    }
}

fn draw_weight(rng: &mut ChaCha8Rng, cfg: &SweepConfig) -> (Weight, String) {
    let vr = cfg.value_range;
    match cfg.family {
        WeightFamily::Admissible => match rng.gen_range(0..5u8) {
            0 => {
                let k = *[4usize, 8, 16, 32].get(rng.gen_range(0..4)).unwrap();
                (grid_weight(even_profile(rng, k, true)), format!("concave-grid(k={k})"))
            }
            1 => {
                let a = grid_weight(even_profile(rng, 8, true));
                let b = grid_weight(even_profile(rng, 8, true));
                (
                    a.combine(&b, rearrange_core::weight::CombineMode::Max).unwrap(),
                    "max(concave-grid,concave-grid)".to_string(),
                )
            }
            2 => {
                let a = grid_weight(even_profile(rng, 8, true));
                let b = grid_weight(even_profile(rng, 8, true));
                (
                    a.combine(&b, rearrange_core::weight::CombineMode::Sum).unwrap(),
                    "sum(concave-grid,concave-grid)".to_string(),
                )
            }
            3 => {
                let c = rng.gen_range(0.1..2.0);
                (
                    Weight::parse(&format!("{c}*(1-abs(x))"), vr).unwrap(),
                    format!("{c}*(1-abs(x))"),
                )
            }
            _ => {
                let c = rng.gen_range(0.1..2.0);
                (Weight::constant(c, vr), format!("const {c}"))
            }
        },
        WeightFamily::EvenConvex => match rng.gen_range(0..4u8) {
            0 => (Weight::parse("x^2", vr).unwrap(), "x^2".to_string()),
            1 => {
                let c = rng.gen_range(0.1..2.0);
                (Weight::constant(c, vr), format!("const {c}"))
            }
            2 => (Weight::parse("1+x^2", vr).unwrap(), "1+x^2".to_string()),
            _ => {
                let k = *[8usize, 16].get(rng.gen_range(0..2)).unwrap();
                (grid_weight(even_profile(rng, k, false)), format!("convex-grid(k={k})"))
            }
        },
        WeightFamily::Violating => match rng.gen_range(0..4u8) {
            0 => (Weight::parse("x^2", vr).unwrap(), "x^2".to_string()),
            1 => (Weight::parse("abs(x)", vr).unwrap(), "abs(x)".to_string()),
            2 => (Weight::parse("1+x/2", vr).unwrap(), "1+x/2".to_string()),
            _ => {
                let values: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..2.0)).collect();
                (grid_weight(values), "random-grid(k=8)".to_string())
            }
        },
    }
}

fn random_integrand(rng: &mut ChaCha8Rng) -> (Integrand, String) {
    match rng.gen_range(0..3u8) {
        0 => {
            let alpha = rng.gen_range(1.0..3.0);
            (Integrand::PowerAlpha { alpha }, format!("p^{alpha}"))
        }
        1 => {
            let gamma = rng.gen_range(0.0..1.0);
            (Integrand::QuadraticGamma { gamma }, format!("p + {gamma}*p^2"))
        }
        _ => (
            Integrand::parse("(1+v)*p^2").unwrap(),
            "(1+v)*p^2".to_string(),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub index: usize,
    pub weight: String,
    pub integrand: String,
    pub i_u: Option<f64>,
    pub i_rearranged: Option<f64>,
    pub gap: Option<f64>,
    pub quad_err: Option<f64>,
    /// Conditions + certificate passed: the inequality is guaranteed.
    pub guaranteed: bool,
    /// `gap >= -(quad_err + tolerance)`.
    pub holds: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub min_gap: Option<f64>,
    /// Guaranteed instances whose gap fell below `-(quad_err + tolerance)`.
    pub failures: usize,
    /// Instances with strictly negative gap (violations observed).
    pub confirmations: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub config: SweepConfig,
    pub results: Vec<InstanceResult>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn passed(&self) -> bool {
        self.summary.failures == 0 && self.summary.errors == 0
    }
}

/// Worker count: `RR_THREADS` if set, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var("RR_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `verify_rearrangement` over the whole instance stream with a fixed
/// worker pool and assembles an order-deterministic report.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepReport, HarnessError> {
    let instances = generate_instances(cfg)?;
    let n = instances.len();
    let slots: Mutex<Vec<Option<InstanceResult>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    let workers = worker_count().min(n);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = run_instance(i, &instances[i], cfg);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let results: Vec<InstanceResult> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect();
    let mut min_gap: Option<f64> = None;
    let mut failures = 0;
    let mut confirmations = 0;
    let mut errors = 0;
    for r in &results {
        match r.gap {
            Some(g) => {
                min_gap = Some(min_gap.map_or(g, |m: f64| m.min(g)));
                if r.guaranteed && !r.holds {
                    failures += 1;
                }
                if g < 0.0 {
                    confirmations += 1;
                }
            }
            None => errors += 1,
        }
    }
    Ok(SweepReport {
        schema: 1,
        config: *cfg,
        results,
        summary: SweepSummary { min_gap, failures, confirmations, errors },
    })
}

fn run_instance(index: usize, inst: &Instance, cfg: &SweepConfig) -> InstanceResult {
    match verify_rearrangement(
        &inst.integrand,
        &inst.weight,
        &inst.u,
        cfg.mode.verify_mode(),
        cfg.tolerance,
    ) {
        Ok(report) => InstanceResult {
            index,
            weight: inst.weight_desc.clone(),
            integrand: inst.integrand_desc.clone(),
            i_u: Some(report.i_u),
            i_rearranged: Some(report.i_rearranged),
            gap: Some(report.gap),
            quad_err: Some(report.quad_err),
            guaranteed: report.guaranteed(),
            holds: report.gap >= -(report.quad_err + cfg.tolerance),
            error: None,
        },
        Err(e) => InstanceResult {
            index,
            weight: inst.weight_desc.clone(),
            integrand: inst.integrand_desc.clone(),
            i_u: None,
            i_rearranged: None,
            gap: None,
            quad_err: None,
            guaranteed: false,
            holds: false,
            error: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SweepConfig { count: 5, ..SweepConfig::default() };
        let a = generate_instances(&cfg).unwrap();
        let b = generate_instances(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.u, y.u);
            assert_eq!(x.weight_desc, y.weight_desc);
            assert_eq!(x.integrand_desc, y.integrand_desc);
        }
    }

    #[test]
    fn admissible_instances_pass_check() {
        let cfg = SweepConfig { count: 20, ..SweepConfig::default() };
        for inst in generate_instances(&cfg).unwrap() {
            assert!(inst
                .weight
                .check_admissible(Resolution::default())
                .unwrap()
                .admissible());
        }
    }

    #[test]
    fn violating_x_squared_witness() {
        let w = Weight::parse("x^2", (0.0, 2.0)).unwrap();
        let r = w.check_admissible(Resolution::default()).unwrap();
        let c = r.cond_c.unwrap();
        assert!(!c.holds);
        // s = t = 0.5 violates: 0.25 + 0.25 < a(1) = 1
        assert!(0.25 + 0.25 < w.eval(1.0, 0.0).unwrap());
        // the worst configuration is s = t = 0: 0 + 0 < a(1) = 1
        let worst = c.worst.unwrap();
        assert!((worst.magnitude - 1.0).abs() < 1e-9);
        assert!(worst.s.abs() < 1e-9 && worst.t.abs() < 1e-9);
    }

    #[test]
    fn small_admissible_sweep_has_no_failures() {
        let cfg = SweepConfig { count: 25, ..SweepConfig::default() };
        let report = sweep(&cfg).unwrap();
        assert!(report.passed(), "{:?}", report.summary);
        assert_eq!(report.results.len(), 25);
    }

    #[test]
    fn symmetric_zero_trace_generation() {
        let cfg = SweepConfig {
            count: 10,
            mode: Mode::Symmetric,
            family: WeightFamily::EvenConvex,
            ..SweepConfig::default()
        };
        for inst in generate_instances(&cfg).unwrap() {
            assert_eq!(inst.u.eval(-1.0), inst.u.eval(1.0));
        }
    }

    #[test]
    fn sweep_reports_are_byte_identical() {
        let cfg = SweepConfig { count: 10, ..SweepConfig::default() };
        let a = sweep(&cfg).unwrap().to_json();
        let b = sweep(&cfg).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_configs_rejected() {
        let cfg = SweepConfig { count: 0, ..SweepConfig::default() };
        assert!(matches!(sweep(&cfg), Err(HarnessError::Config(_))));
        let cfg = SweepConfig { value_range: (-1.0, 1.0), ..SweepConfig::default() };
        assert!(matches!(sweep(&cfg), Err(HarnessError::Config(_))));
    }
}
