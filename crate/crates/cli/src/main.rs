//! Command-line front end. Exit codes: 0 = success with verdicts holding,
//! 1 = a verdict failed (inequality violated where guaranteed, sweep
//! failures, condition check negative), 2 = usage or input syntax errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rearrange::harness::{self, SweepConfig};
use rearrange::io;
use rearrange_core::approx::convergence_report;
use rearrange_core::constructs::{
    build_asymmetry_counterexample, build_nonconcavity_counterexample,
    build_symmetric_counterexample, CounterexampleKind, CounterexampleSpec,
};
use rearrange_core::expr::Expr;
use rearrange_core::functional::{evaluate_functional, verify_rearrangement, Integrand, VerifyMode};
use rearrange_core::pl::PiecewiseLinear;
use rearrange_core::weight::{Resolution, Weight};

#[derive(Parser)]
#[command(name = "rearrange", version, about = "Rearrangements of piecewise-linear functions and the weighted functionals they decrease")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Monotone,
    Symmetric,
}

impl ModeArg {
    fn verify(self) -> VerifyMode {
        match self {
            ModeArg::Monotone => VerifyMode::Monotone,
            ModeArg::Symmetric => VerifyMode::Symmetric,
        }
    }
}

#[derive(Args)]
struct FunctionalArgs {
    /// Function as a `pl:x0:y0,...` literal.
    #[arg(long)]
    u: String,
    /// Weight: expression in x, v or `grid:@file.csv`.
    #[arg(long)]
    weight: String,
    /// Integrand F(v, p): `p^a` shorthand or an expression in v, p.
    #[arg(long = "F", alias = "f")]
    f: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the monotone or symmetric rearrangement of a PL function.
    Rearrange {
        #[arg(long)]
        u: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Monotone)]
        mode: ModeArg,
        /// Write (x, u, rearranged) samples to a CSV file.
        #[arg(long)]
        emit_plot: Option<PathBuf>,
    },
    /// Evaluate I(a, u).
    Evaluate {
        #[command(flatten)]
        args: FunctionalArgs,
    },
    /// Compute both sides of the rearrangement inequality.
    Verify {
        #[command(flatten)]
        args: FunctionalArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Monotone)]
        mode: ModeArg,
    },
    /// Check the admissibility conditions of a weight.
    CheckWeight {
        #[arg(long)]
        weight: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Monotone)]
        condition: ModeArg,
        /// Value range `lo:hi` the weight is checked over.
        #[arg(long, default_value = "0:2")]
        v_range: String,
        /// Sampled check grid `nx:nv`.
        #[arg(long, default_value = "257:129")]
        resolution: String,
    },
    /// Build one of the explicit counterexamples and confirm the violation.
    Counterexample {
        #[command(subcommand)]
        kind: CeCmd,
    },
    /// Run the Lipschitz-approximation ladder and report convergence.
    Approx {
        #[command(flatten)]
        args: FunctionalArgs,
        /// Comma-separated thresholds.
        #[arg(long, default_value = "4,8,16,32,64")]
        ladder: String,
    },
    /// Random instance sweep with machine-readable verdicts.
    Sweep {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Monotone)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = FamilyArg::Admissible)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Parse an expression and echo its normalized form.
    Parse {
        #[arg(long)]
        expr: String,
    },
}

#[derive(Subcommand)]
enum CeCmd {
    /// Theorem-2.1(1)-style: strictly asymmetric weight, F = p.
    Asymmetry {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        xbar: f64,
        #[arg(long, default_value_t = 0.0)]
        vbar: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Condition violation with F = p^alpha.
    Nonconcavity {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        alpha: f64,
        /// Override the computed weight bound A.
        #[arg(long)]
        a_bound: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        vbar: f64,
    },
    /// Symmetric-condition violation with F = p + gamma p^2.
    Nonconvexity {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        a_bound: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Admissible,
    EvenConvex,
    Violating,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, ok)) => {
            let text = render(&report, cli.format);
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => println!("{text}"),
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn render(report: &serde_json::Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes"),
        Format::Csv => io::json_to_csv(report),
        Format::Human => {
            let mut out = String::new();
            for (k, v) in io::json_to_pairs(report) {
                out.push_str(&k);
                out.push_str(" = ");
                out.push_str(&v);
                out.push('\n');
            }
            out
        }
    }
}

fn parse_integrand(text: &str) -> Result<Integrand, String> {
    // `p^a` shorthand maps to the builtin power family
    if let Some(rest) = text.strip_prefix("p^") {
        if let Ok(alpha) = rest.trim().parse::<f64>() {
            return Integrand::power(alpha).map_err(|e| e.to_string());
        }
    }
    if text.trim() == "p" {
        return Integrand::power(1.0).map_err(|e| e.to_string());
    }
    Integrand::parse(text).map_err(|e| e.to_string())
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("{what}: expected `lo:hi`"))?;
    let lo = a.trim().parse().map_err(|e| format!("{what}: {e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("{what}: {e}"))?;
    Ok((lo, hi))
}

fn pl_json(u: &PiecewiseLinear) -> serde_json::Value {
    json!({
        "literal": io::format_pl(u),
        "breakpoints": u.len(),
        "min": u.min_value(),
        "max": u.max_value(),
        "integral": u.metrics().integral,
    })
}

type Outcome = Result<(serde_json::Value, bool), String>;

fn run(cli: &Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Rearrange { u, mode, emit_plot } => {
            let u = io::parse_pl(u)?;
            let (result, label) = match mode {
                ModeArg::Monotone => (u.monotone_rearrange(), "u_star"),
                ModeArg::Symmetric => (u.symmetric_rearrange(), "u_bar"),
            };
            let result = result.map_err(|e| e.to_string())?;
            if let Some(path) = emit_plot {
                std::fs::write(path, io::plot_csv(&u, &result, label))
                    .map_err(|e| format!("cannot write plot: {e}"))?;
            }
            Ok((
                json!({
                    "schema": 1,
                    "input": pl_json(&u),
                    label: pl_json(&result),
                }),
                true,
            ))
        }
        Cmd::Evaluate { args } => {
            let (u, a, f) = parse_functional(args)?;
            let r = evaluate_functional(&f, &a, &u, args.tol).map_err(|e| e.to_string())?;
            Ok((
                json!({
                    "schema": 1,
                    "value": r.value,
                    "err_estimate": r.err_estimate,
                    "plateau_value": r.plateau_value,
                }),
                true,
            ))
        }
        Cmd::Verify { args, mode } => {
            let (u, a, f) = parse_functional(args)?;
            let r = verify_rearrangement(&f, &a, &u, mode.verify(), args.tol)
                .map_err(|e| e.to_string())?;
            let ok = !r.guaranteed() || r.holds();
            let report = json!({
                "schema": 1,
                "mode": match r.mode { VerifyMode::Monotone => "monotone", VerifyMode::Symmetric => "symmetric" },
                "I_u": r.i_u,
                "I_rearranged": r.i_rearranged,
                "gap": r.gap,
                "quad_err": r.quad_err,
                "plateau_value": r.plateau_value,
                "guaranteed": r.guaranteed(),
                "holds": r.holds(),
                "certificate_ok": r.certificate_ok,
                "trace_warning": r.trace_warning,
            });
            Ok((report, ok))
        }
        Cmd::CheckWeight { weight, condition, v_range, resolution } => {
            let vr = parse_pair(v_range, "--v-range")?;
            let (nx, nv) = parse_pair(resolution, "--resolution")?;
            let res = Resolution { x: nx as usize, v: nv as usize };
            let a = io::parse_weight(weight, vr)?;
            let (report, holds) = match condition {
                ModeArg::Monotone => {
                    let r = a.check_admissible(res).map_err(|e| e.to_string())?;
                    (condition_json(&r), r.admissible())
                }
                ModeArg::Symmetric => {
                    let r = a.check_symmetric_condition(res).map_err(|e| e.to_string())?;
                    (condition_json(&r), r.symmetric_ok())
                }
            };
            Ok((json!({"schema": 1, "conditions": report, "holds": holds}), holds))
        }
        Cmd::Counterexample { kind } => run_counterexample(kind),
        Cmd::Approx { args, ladder } => {
            let (u, a, f) = parse_functional(args)?;
            let ladder: Vec<f64> = ladder
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| format!("--ladder: {e}")))
                .collect::<Result<_, _>>()?;
            let r = convergence_report(&f, &a, &u, &ladder, args.tol).map_err(|e| e.to_string())?;
            let rows: Vec<serde_json::Value> = r
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "h": row.h,
                        "l1": row.l1,
                        "l1_deriv": row.l1_deriv,
                        "I_uh": row.i_uh,
                        "I_err": row.i_err,
                        "cover_measure": row.cover_measure,
                        "beta_sum": row.beta_sum,
                        "p1": row.p1,
                        "p2": row.p2,
                        "p3": row.p3,
                    })
                })
                .collect();
            Ok((
                json!({
                    "schema": 1,
                    "I_u": r.i_u,
                    "hypothesis_ok": r.hypothesis_ok,
                    "rows": rows,
                }),
                true,
            ))
        }
        Cmd::Sweep { seed, count, mode, family, tol } => {
            let cfg = SweepConfig {
                seed: *seed,
                count: *count,
                mode: match mode {
                    ModeArg::Monotone => harness::Mode::Monotone,
                    ModeArg::Symmetric => harness::Mode::Symmetric,
                },
                family: match family {
                    FamilyArg::Admissible => harness::WeightFamily::Admissible,
                    FamilyArg::EvenConvex => harness::WeightFamily::EvenConvex,
                    FamilyArg::Violating => harness::WeightFamily::Violating,
                },
                tolerance: *tol,
                ..SweepConfig::default()
            };
            let report = harness::sweep(&cfg).map_err(|e| e.to_string())?;
            let ok = report.passed();
            let value = serde_json::to_value(&report).expect("report serializes");
            Ok((value, ok))
        }
        Cmd::Parse { expr } => {
            let parsed = Expr::parse(expr).map_err(|e| e.to_string())?;
            let (x, v, p) = parsed.variables();
            Ok((
                json!({
                    "schema": 1,
                    "normalized": parsed.to_string(),
                    "variables": {"x": x, "v": v, "p": p},
                }),
                true,
            ))
        }
    }
}

fn parse_functional(args: &FunctionalArgs) -> Result<(PiecewiseLinear, Weight, Integrand), String> {
    let u = io::parse_pl(&args.u)?;
    let a = io::parse_weight(&args.weight, (u.min_value(), u.max_value()))?;
    let f = parse_integrand(&args.f)?;
    Ok((u, a, f))
}

fn condition_json(r: &rearrange_core::weight::ConditionReport) -> serde_json::Value {
    fn check(c: &rearrange_core::weight::Check) -> serde_json::Value {
        match &c.worst {
            None => json!({"holds": true}),
            Some(w) => json!({
                "holds": false,
                "worst": {"s": w.s, "t": w.t, "v": w.v, "magnitude": w.magnitude},
            }),
        }
    }
    let mut obj = serde_json::Map::new();
    obj.insert("even".into(), check(&r.even));
    if let Some(c) = &r.cond_c {
        obj.insert("cond_c".into(), check(c));
    }
    if let Some(c) = &r.cond_sym {
        obj.insert("cond_sym".into(), check(c));
    }
    if let Some(c) = &r.midpoint_convex {
        obj.insert("midpoint_convex".into(), check(c));
    }
    obj.insert("verdicts_agree".into(), json!(r.verdicts_agree));
    obj.insert(
        "method".into(),
        match r.method {
            rearrange_core::weight::CheckMethod::ExactNodes { k } => json!({"exact_nodes": k}),
            rearrange_core::weight::CheckMethod::Sampled { x, v } => json!({"sampled": {"x": x, "v": v}}),
        },
    );
    serde_json::Value::Object(obj)
}

fn run_counterexample(kind: &CeCmd) -> Outcome {
    let (a, ce, mode, spec_json) = match kind {
        CeCmd::Asymmetry { weight, xbar, vbar, eps } => {
            let a = io::parse_weight(weight, (*vbar, vbar + eps))?;
            let ce = build_asymmetry_counterexample(&a, *xbar, *vbar, *eps)
                .map_err(|e| e.to_string())?;
            (
                a,
                ce,
                VerifyMode::Monotone,
                json!({"kind": "asymmetry", "xbar": xbar, "vbar": vbar, "eps": eps}),
            )
        }
        CeCmd::Nonconcavity { weight, s, t, eps, delta, alpha, a_bound, vbar } => {
            let a = io::parse_weight(weight, (*vbar, vbar + eps))?;
            let spec = CounterexampleSpec {
                kind: CounterexampleKind::Nonconcavity,
                s: *s,
                t: *t,
                eps: *eps,
                delta: *delta,
                vbar: *vbar,
                a_bound: *a_bound,
            };
            let ce = build_nonconcavity_counterexample(&a, &spec, *alpha)
                .map_err(|e| e.to_string())?;
            (
                a,
                ce,
                VerifyMode::Monotone,
                json!({"kind": "nonconcavity", "s": s, "t": t, "eps": eps, "delta": delta, "alpha": alpha}),
            )
        }
        CeCmd::Nonconvexity { weight, s, t, eps, delta, a_bound } => {
            let a = io::parse_weight(weight, (0.0, *eps))?;
            let spec = CounterexampleSpec {
                kind: CounterexampleKind::Nonconvexity,
                s: *s,
                t: *t,
                eps: *eps,
                delta: *delta,
                vbar: 0.0,
                a_bound: *a_bound,
            };
            let ce = build_symmetric_counterexample(&a, &spec).map_err(|e| e.to_string())?;
            (
                a,
                ce,
                VerifyMode::Symmetric,
                json!({"kind": "nonconvexity", "s": s, "t": t, "eps": eps, "delta": delta}),
            )
        }
    };
    let r = verify_rearrangement(&ce.integrand, &a, &ce.u, mode, 1e-10).map_err(|e| e.to_string())?;
    let confirmed = r.gap < 0.0;
    Ok((
        json!({
            "schema": 1,
            "spec": spec_json,
            "u": pl_json(&ce.u),
            "a_bound": ce.a_bound,
            "alpha_max": ce.alpha_max,
            "gamma": ce.gamma,
            "I_u": r.i_u,
            "I_rearranged": r.i_rearranged,
            "gap": r.gap,
            "quad_err": r.quad_err,
            "confirmed": confirmed,
        }),
        confirmed,
    ))
}
