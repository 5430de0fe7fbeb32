//! Parameter sweeps: a JSON config expands to a list of rows, evaluated in
//! parallel and written as CSV in row order.

use std::path::Path;

use anyhow::{bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use grushin_core::asymptotics::envelope_main_log;
use grushin_core::geometry::{pair_from_invariants, reduce_pair};
use grushin_core::kernel::{kernel_with, MethodChoice};
use grushin_core::{EvalResult, GrushinError, Point, QuadSpec, Regime};

/// Version tag of the CSV column layout.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub grid: Grid,
    /// First entry is evaluated; a second entry is the reference for `log_ratio`.
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodChoice>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub extended_precision: bool,
    /// Also report `log(p / expression)` for the main two-sided envelope.
    #[serde(default)]
    pub envelope: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_methods() -> Vec<MethodChoice> {
    vec![MethodChoice::Auto]
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Grid {
    /// Explicit pairs, each at every time in `h`.
    Points { pairs: Vec<PairSpec>, h: Vec<f64> },
    /// Cartesian product of reduced invariants.
    Invariants { n: Vec<usize>, np: Vec<usize>, eps: Vec<f64>, a: Vec<f64>, d: Vec<f64>, h: Vec<f64> },
    /// `count` draws from ranges of the invariants (ε log-uniform).
    Random { count: usize, n: Vec<usize>, np: Vec<usize>, eps: [f64; 2], a: [f64; 2], d: [f64; 2], h: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub g: Point,
    pub gp: Point,
}

impl SweepSpec {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let spec: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.methods.is_empty() || self.methods.len() > 2 {
            bail!("methods must list one or two entries");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            bail!("tol must lie in (0, 1)");
        }
        let empty = match &self.grid {
            Grid::Points { pairs, h } => pairs.is_empty() || h.is_empty(),
            Grid::Invariants { n, np, eps, a, d, h } => {
                [n.len(), np.len(), eps.len(), a.len(), d.len(), h.len()].contains(&0)
            }
            Grid::Random { count, n, np, h, .. } => *count == 0 || n.is_empty() || np.is_empty() || h.is_empty(),
        };
        if empty {
            bail!("the sweep grid is empty");
        }
        Ok(())
    }

    /// Rows in output order. Invalid invariant combinations become rows
    /// that carry their construction error.
    fn expand(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        match &self.grid {
            Grid::Points { pairs, h } => {
                for p in pairs {
                    for &h in h {
                        jobs.push(Job { pair: Ok((p.g.clone(), p.gp.clone())), h });
                    }
                }
            }
            Grid::Invariants { n, np, eps, a, d, h } => {
                for &n in n {
                    for &np in np {
                        for &e in eps {
                            for &a in a {
                                for &d in d {
                                    for &h in h {
                                        jobs.push(Job { pair: pair_from_invariants(n, np, e, a, d), h });
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Grid::Random { count, n, np, eps, a, d, h } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                for _ in 0..*count {
                    let nn = n[rng.gen_range(0..n.len())];
                    let nnp = np[rng.gen_range(0..np.len())];
                    let e = draw_log(&mut rng, eps[0], eps[1]);
                    let aa = draw(&mut rng, a[0], a[1]);
                    let dd = draw(&mut rng, d[0], d[1]);
                    let hh = h[rng.gen_range(0..h.len())];
                    jobs.push(Job { pair: pair_from_invariants(nn, nnp, e, aa, dd), h: hh });
                }
            }
        }
        jobs
    }
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn draw_log(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > lo {
        rng.gen_range(lo.ln()..hi.ln()).exp().min(hi)
    } else {
        draw(rng, lo, hi)
    }
}

struct Job {
    pair: grushin_core::Result<(Point, Point)>,
    h: f64,
}

/// One CSV line. Missing quantities are empty fields, never NaN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub row: usize,
    pub n: Option<usize>,
    pub np: Option<usize>,
    pub x: String,
    pub xp: String,
    pub u: String,
    pub up: String,
    pub h: f64,
    pub d: Option<f64>,
    pub d2: Option<f64>,
    pub eps: Option<f64>,
    pub a: Option<f64>,
    pub regime: String,
    pub method: String,
    /// `ok`, `skipped` (precondition not met) or `error`.
    pub status: String,
    pub value: Option<f64>,
    pub log_value: Option<f64>,
    pub scaled: Option<f64>,
    pub abs_err: Option<f64>,
    pub ref_method: String,
    pub ref_status: String,
    pub ref_log_value: Option<f64>,
    /// `log_value − ref_log_value`.
    pub log_ratio: Option<f64>,
    /// `log(p_h / expression)` for the main envelope.
    pub envelope_log_ratio: Option<f64>,
    pub message: String,
    /// Standalone command reproducing the evaluation.
    pub command: String,
}

fn fin(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn method_name(m: MethodChoice) -> &'static str {
    match m {
        MethodChoice::Auto => "auto",
        MethodChoice::Direct => "direct",
        MethodChoice::Transformed => "transformed",
        MethodChoice::Asym => "asym",
    }
}

fn status_of(e: &GrushinError) -> &'static str {
    match e {
        GrushinError::Precondition(_) => "skipped",
        _ => "error",
    }
}

fn evaluate(spec: &SweepSpec, index: usize, job: &Job) -> SweepRow {
    let quad = QuadSpec { extended_precision: spec.extended_precision, ..QuadSpec::with_tol(spec.tol) };
    let primary = spec.methods[0];
    let mut row = SweepRow {
        row: index,
        n: None,
        np: None,
        x: String::new(),
        xp: String::new(),
        u: String::new(),
        up: String::new(),
        h: job.h,
        d: None,
        d2: None,
        eps: None,
        a: None,
        regime: String::new(),
        method: method_name(primary).into(),
        status: "error".into(),
        value: None,
        log_value: None,
        scaled: None,
        abs_err: None,
        ref_method: spec.methods.get(1).map(|&m| method_name(m)).unwrap_or("").into(),
        ref_status: String::new(),
        ref_log_value: None,
        log_ratio: None,
        envelope_log_ratio: None,
        message: String::new(),
        command: String::new(),
    };
    let (g, gp) = match &job.pair {
        Ok(p) => p,
        Err(e) => {
            row.status = status_of(e).into();
            row.message = e.to_string();
            return row;
        }
    };
    row.n = Some(g.n());
    row.np = Some(g.np());
    row.x = join(&g.x);
    row.xp = join(&gp.x);
    row.u = join(&g.u);
    row.up = join(&gp.u);
    row.command = format!(
        "grushin kernel --n {} --np {} --x={} --xp={} --u={} --up={} --h={} --method {} --tol={}{}",
        g.n(),
        g.np(),
        row.x,
        row.xp,
        row.u,
        row.up,
        job.h,
        row.method,
        spec.tol,
        if spec.extended_precision { " --extended" } else { "" }
    );
    let unit = match reduce_pair(&g.dilate(job.h), &gp.dilate(job.h)) {
        Ok(p) => p,
        Err(e) => {
            row.status = status_of(&e).into();
            row.message = e.to_string();
            return row;
        }
    };
    row.d2 = fin(unit.d2 * job.h);
    row.d = fin((unit.d2 * job.h).sqrt());
    row.eps = fin(unit.eps);
    row.a = fin(unit.a);
    row.regime = format!("{:?}", Regime::of(&unit)).to_lowercase();
    let eval = |m: MethodChoice| -> Result<EvalResult, String> {
        match kernel_with(g, gp, job.h, &quad, m) {
            Ok(r) if r.log_value.is_finite() => Ok(r),
            Ok(_) => Err("error: non-finite result".into()),
            Err(e) => Err(format!("{}: {e}", status_of(&e))),
        }
    };
    let split = |msg: &str| -> (String, String) {
        let (s, m) = msg.split_once(": ").unwrap_or(("error", msg));
        (s.to_string(), m.to_string())
    };
    let main = eval(primary);
    match &main {
        Ok(r) => {
            row.status = "ok".into();
            row.value = fin(r.value);
            row.log_value = fin(r.log_value);
            row.scaled = fin(r.scaled);
            row.abs_err = fin(r.abs_err);
        }
        Err(msg) => {
            let (s, m) = split(msg);
            row.status = s;
            row.message = m;
        }
    }
    if let Some(&rm) = spec.methods.get(1) {
        match eval(rm) {
            Ok(r) => {
                row.ref_status = "ok".into();
                row.ref_log_value = fin(r.log_value);
                if let (Some(a), Some(b)) = (row.log_value, row.ref_log_value) {
                    row.log_ratio = fin(a - b);
                }
            }
            Err(msg) => {
                let (s, m) = split(&msg);
                row.ref_status = s;
                if row.message.is_empty() {
                    row.message = format!("reference: {m}");
                }
            }
        }
    }
    if spec.envelope {
        if let (Some(lv), Ok(env)) = (row.log_value, envelope_main_log(&unit)) {
            let dil = -(unit.n as f64 / 2.0 + unit.np as f64) * job.h.ln();
            row.envelope_log_ratio = fin(lv - env - dil);
        }
    }
    row
}

/// Runs the sweep and returns the CSV bytes.
pub fn run(spec: &SweepSpec) -> anyhow::Result<Vec<u8>> {
    let jobs = spec.expand();
    let rows: Vec<SweepRow> = jobs.par_iter().enumerate().map(|(i, j)| evaluate(spec, i, j)).collect();
    let mut buf = format!("# grushin-sweep v{CSV_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}
