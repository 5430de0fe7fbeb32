//! `grushin`: command-line front end for the Grushin heat kernel library.

mod report;
mod sweep;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use grushin_core::asymptotics::{
    asym_difficult_scaled, asym_simple_scaled, classical_bounds, classical_grad_bound, detect_mode, envelope_difficult,
    envelope_main_log, leading_term, polynomial_grad_bound, smalltime, SmallTimeMode, DEFAULT_BIG_R,
};
use grushin_core::geometry::reduce_pair;
use grushin_core::kernel::{grad_kernel, kernel_unit, kernel_with, MethodChoice};
use grushin_core::oracle::{fd_gradient, mc_kernel, pde_kernel, semigroup_residual, GridSpec, QuadGrid};
use grushin_core::{GrushinError, Point, QuadSpec, Regime};

#[derive(Parser, Debug)]
#[command(name = "grushin", version, about = "Heat kernel of the Grushin operator Δ_x + |x|²Δ_u")]
struct Cli {
    /// Worker threads for sweeps (0 = one per core)
    #[arg(long, global = true, env = "GRUSHIN_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Carnot–Carathéodory distance and pair invariants
    Distance(PointArgs),
    /// Evaluate p_h(g, g')
    Kernel(EvalArgs),
    /// Compare the kernel with the two-sided envelopes and gradient bounds
    Bounds(BoundsArgs),
    /// Large-distance asymptotic formulas against the kernel
    Asym(EvalArgs),
    /// Small-time leading terms
    Smalltime(SmallTimeArgs),
    /// Independent reference solvers
    Oracle(OracleArgs),
    /// Evaluate a grid of points described by a JSON config, writing CSV
    Sweep(SweepArgs),
    /// Aggregate a sweep CSV into fitted constants and pass/fail checks
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct PointArgs {
    /// Dimension of x
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Dimension of u
    #[arg(long, default_value_t = 1)]
    np: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xp: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    u: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    up: Option<Vec<f64>>,
    /// Both points at the origin
    #[arg(long, conflicts_with_all = ["x", "xp", "u", "up"])]
    zero: bool,
    /// Time
    #[arg(long, default_value_t = 1.0)]
    h: f64,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    #[command(flatten)]
    point: PointArgs,
    /// auto | direct | transformed | asym
    #[arg(long, default_value = "auto")]
    method: MethodChoice,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Raise the cancellation budget of direct quadrature
    #[arg(long)]
    extended: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Constant C of the envelopes
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    /// ε of the classical Li–Yau lower exponent d²/((4 − ε)h)
    #[arg(long, default_value_t = 1.0)]
    eps_ly: f64,
}

#[derive(Args, Debug)]
struct SmallTimeArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// proposition | corollary-i | corollary-ii | corollary-iii | off-cut (default: detected)
    #[arg(long)]
    mode: Option<SmallTimeMode>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum OracleKind {
    Pde,
    Mc,
    Fd,
    Semigroup,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, value_enum)]
    kind: OracleKind,
    /// Samples for the sampling oracle
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative finite-difference step
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Sweep CSV to aggregate
    input: PathBuf,
    /// Write the JSON report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A report whose checks did not all pass.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("one or more checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

impl PointArgs {
    fn vector(&self, v: &Option<Vec<f64>>, len: usize, name: &str) -> anyhow::Result<Vec<f64>> {
        match v {
            None => Ok(vec![0.0; len]),
            Some(v) if v.len() == len => Ok(v.clone()),
            Some(v) => bail!("--{name} has {} components, expected {len}", v.len()),
        }
    }

    fn points(&self) -> anyhow::Result<(Point, Point)> {
        if self.n == 0 || self.np == 0 {
            bail!("--n and --np must be at least 1");
        }
        let g = Point::new(self.vector(&self.x, self.n, "x")?, self.vector(&self.u, self.np, "u")?)?;
        let gp = Point::new(self.vector(&self.xp, self.n, "xp")?, self.vector(&self.up, self.np, "up")?)?;
        Ok((g, gp))
    }
}

impl EvalArgs {
    fn spec(&self) -> QuadSpec {
        QuadSpec { extended_precision: self.extended, ..QuadSpec::with_tol(self.tol) }
    }
}

fn point_json(g: &Point) -> Value {
    json!({ "x": g.x, "u": g.u })
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

/// Error message of a fallible quantity, or its value.
fn either<T: serde::Serialize>(r: grushin_core::Result<T>) -> Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cmd_distance(a: &PointArgs) -> anyhow::Result<()> {
    let (g, gp) = a.points()?;
    let p = reduce_pair(&g, &gp)?;
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "d2": p.d2,
        "d": p.d(),
        "r": p.r,
        "a": p.a,
        "eps": p.eps,
        "theta_norm": p.theta_norm,
        "branch": p.branch,
        "regime": Regime::of(&p),
        "cancellation_exponent": p.cancellation_exponent(a.h),
    }))
}

fn cmd_kernel(a: &EvalArgs) -> anyhow::Result<()> {
    let (g, gp) = a.point.points()?;
    let h = a.point.h;
    let k = kernel_with(&g, &gp, h, &a.spec(), a.method)?;
    let p = reduce_pair(&g, &gp)?;
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "h": h,
        "d2": p.d2,
        "value": k.value,
        "scaled": k.scaled,
        "log_value": k.log_value,
        "abs_err": k.abs_err,
        "rel_err": k.rel_err(),
        "method": k.method,
        "regime": k.regime,
    }))
}

fn cmd_bounds(b: &BoundsArgs) -> anyhow::Result<()> {
    let a = &b.eval;
    let (g, gp) = a.point.points()?;
    let h = a.point.h;
    let spec = a.spec();
    let k = kernel_with(&g, &gp, h, &spec, a.method)?;
    let unit = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    let dil = -(unit.n as f64 / 2.0 + unit.np as f64) * h.ln();
    let main = envelope_main_log(&unit).map(|l| {
        json!({ "log_expression": l + dil, "log_ratio": k.log_value - l - dil })
    });
    let difficult = if unit.satisfies_an() && unit.eps < grushin_core::DELTA0 {
        either(envelope_difficult(&unit, b.constant, DEFAULT_BIG_R).map(|e| {
            json!({ "log_expression": e.expression.ln() + dil, "log_ratio": k.log_value - e.expression.ln() - dil })
        }))
    } else {
        Value::Null
    };
    let classical = classical_bounds(&g, &gp, h, b.constant, b.eps_ly).map(|e| {
        json!({ "lower": e.lower, "upper": e.upper, "contains": e.contains(k.value), "constant": e.constant_used })
    });
    let grad = grad_kernel(&g, &gp, h, &spec).map(|v| {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        json!({
            "norm": norm,
            "polynomial_bound": polynomial_grad_bound(&g, &gp, h, b.constant).ok(),
            "classical_bound": classical_grad_bound(&g, &gp, h, 1, b.constant, b.eps_ly).ok(),
        })
    });
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "h": h,
        "d2": unit.d2 * h,
        "regime": Regime::of(&unit),
        "method": k.method,
        "value": k.value,
        "log_value": k.log_value,
        "main_envelope": either(main),
        "difficult_envelope": difficult,
        "classical": either(classical),
        "gradient": either(grad),
    }))
}

fn cmd_asym(a: &EvalArgs) -> anyhow::Result<()> {
    let (g, gp) = a.point.points()?;
    let h = a.point.h;
    let spec = a.spec();
    // Everything is compared at unit time on the dilated pair, where `scaled`
    // values are finite.
    let unit = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    let k = kernel_unit(&unit, &spec, a.method)?;
    let ratio = |r: grushin_core::Result<f64>| either(r.map(|s| json!({ "scaled": s, "ratio": k.scaled / s })));
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "h": h,
        "d2_unit": unit.d2,
        "eps": unit.eps,
        "a": unit.a,
        "regime": k.regime,
        "method": k.method,
        "kernel_scaled": k.scaled,
        "simple": ratio(asym_simple_scaled(&unit)),
        "difficult": ratio(asym_difficult_scaled(&unit, &spec)),
        "leading_term": ratio(leading_term(&unit, &spec).map(|r| r.scaled)),
    }))
}

fn cmd_smalltime(s: &SmallTimeArgs) -> anyhow::Result<()> {
    let a = &s.eval;
    let (g, gp) = a.point.points()?;
    let h = a.point.h;
    let spec = a.spec();
    let pair = reduce_pair(&g, &gp)?;
    let mode = match s.mode.or_else(|| detect_mode(&pair)) {
        Some(m) => m,
        None => return Err(GrushinError::Precondition("no small-time formula applies to this pair".into()).into()),
    };
    let lead = smalltime(&g, &gp, h, mode, &spec)?;
    let k = kernel_with(&g, &gp, h, &spec, a.method);
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "h": h,
        "mode": mode,
        "leading": lead,
        "kernel": either(k.map(|k| json!({ "value": k.value, "method": k.method, "ratio": k.value / lead }))),
    }))
}

fn cmd_oracle(o: &OracleArgs) -> anyhow::Result<()> {
    let a = &o.eval;
    let (g, gp) = a.point.points()?;
    let h = a.point.h;
    let spec = a.spec();
    let reference = || kernel_with(&g, &gp, h, &spec, a.method);
    let body = match o.kind {
        OracleKind::Pde | OracleKind::Mc => {
            let r = match o.kind {
                OracleKind::Pde => pde_kernel(&g, &gp, h, &GridSpec::default_for(&g, &gp, h))?,
                _ => mc_kernel(&g, &gp, h, o.samples, o.seed)?,
            };
            let k = reference()?;
            json!({
                "oracle": r.value,
                "oracle_err": r.abs_err,
                "kernel": k.value,
                "kernel_method": k.method,
                "rel_dev": (r.value / k.value - 1.0).abs(),
            })
        }
        OracleKind::Fd => {
            let fd = fd_gradient(&g, &gp, h, o.step)?;
            let an = grad_kernel(&g, &gp, h, &spec)?;
            let scale = an.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let dev = fd.iter().zip(&an).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            json!({ "fd": fd, "analytic": an, "rel_dev": dev })
        }
        OracleKind::Semigroup => {
            json!({ "residual": semigroup_residual(&g, &gp, h, &QuadGrid::default())? })
        }
    };
    print_json(&json!({
        "g": point_json(&g),
        "gp": point_json(&gp),
        "h": h,
        "kind": format!("{:?}", o.kind).to_lowercase(),
        "result": body,
    }))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Distance(a) => cmd_distance(a),
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Asym(a) => cmd_asym(a),
        Cmd::Smalltime(a) => cmd_smalltime(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Sweep(a) => {
            if cli.threads > 0 {
                rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
            }
            let spec = sweep::SweepSpec::load(&a.config)?;
            let csv = sweep::run(&spec)?;
            match &a.out {
                Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().lock().write_all(&csv)?,
            }
            Ok(())
        }
        Cmd::Report(a) => {
            let rep = report::aggregate(&a.input)?;
            let text = serde_json::to_string_pretty(&rep)? + "\n";
            match &a.out {
                Some(p) => std::fs::write(p, text)?,
                None => std::io::stdout().lock().write_all(text.as_bytes())?,
            }
            if rep.pass {
                Ok(())
            } else {
                Err(ChecksFailed.into())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)) {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            if e.downcast_ref::<GrushinError>().is_some() || e.downcast_ref::<ChecksFailed>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
