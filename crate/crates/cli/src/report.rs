//! Aggregation of a sweep CSV into fitted constants and threshold checks.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;

use crate::sweep::{SweepRow, CSV_VERSION};

/// Agreement required between direct and transformed quadrature.
const METHOD_AGREEMENT: f64 = 1e-6;
/// Largest admissible spread of `log(p / expression)`.
const ENVELOPE_RANGE: f64 = 2.0 * std::f64::consts::LN_10;
/// Largest admissible least-squares slope of `log(p / expression)` in `d`.
const ENVELOPE_SLOPE: f64 = 0.01;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub method: String,
    pub ref_method: String,
    pub rows: usize,
    pub max_rel_dev: f64,
    pub log_ratio_min: f64,
    pub log_ratio_max: f64,
}

#[derive(Debug, Serialize)]
pub struct EnvelopeFit {
    pub rows: usize,
    pub log_ratio_min: f64,
    pub log_ratio_max: f64,
    /// `C` with `p / expression ∈ [m/C, m·C]` for the geometric midpoint `m`.
    pub fitted_constant: f64,
    pub midpoint: f64,
    pub slope_vs_d: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: u32,
    pub rows: usize,
    pub ok: usize,
    pub skipped: usize,
    pub errors: usize,
    pub comparisons: Vec<Comparison>,
    pub envelope: Option<EnvelopeFit>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn read_rows(path: &Path) -> anyhow::Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    let expected = format!("# grushin-sweep v{CSV_VERSION}");
    if first.trim() != expected {
        bail!("{} is not a v{CSV_VERSION} sweep file (first line {first:?})", path.display());
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for r in rd.deserialize() {
        rows.push(r.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(rows)
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn aggregate(path: &Path) -> anyhow::Result<Report> {
    let rows = read_rows(path)?;
    let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
    let mut checks = Vec::new();

    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(lr) = r.log_ratio {
            groups.entry((r.method.clone(), r.ref_method.clone())).or_default().push(lr);
        }
    }
    let comparisons: Vec<Comparison> = groups
        .into_iter()
        .map(|((method, ref_method), lrs)| Comparison {
            rows: lrs.len(),
            max_rel_dev: lrs.iter().map(|l| l.exp_m1().abs()).fold(0.0, f64::max),
            log_ratio_min: lrs.iter().cloned().fold(f64::INFINITY, f64::min),
            log_ratio_max: lrs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            method,
            ref_method,
        })
        .collect();
    for c in &comparisons {
        let pair = [c.method.as_str(), c.ref_method.as_str()];
        if pair.contains(&"direct") && pair.contains(&"transformed") {
            checks.push(Check {
                name: format!("{} vs {} agreement", c.method, c.ref_method),
                value: c.max_rel_dev,
                limit: METHOD_AGREEMENT,
                pass: c.max_rel_dev <= METHOD_AGREEMENT,
            });
        }
    }

    let (ds, ls): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| Some((r.d?, r.envelope_log_ratio?))).unzip();
    let envelope = (!ls.is_empty()).then(|| {
        let lo = ls.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        EnvelopeFit {
            rows: ls.len(),
            log_ratio_min: lo,
            log_ratio_max: hi,
            fitted_constant: (0.5 * (hi - lo)).exp(),
            midpoint: (0.5 * (hi + lo)).exp(),
            slope_vs_d: slope(&ds, &ls),
        }
    });
    if let Some(e) = &envelope {
        let range = e.log_ratio_max - e.log_ratio_min;
        checks.push(Check { name: "envelope log-ratio range".into(), value: range, limit: ENVELOPE_RANGE, pass: range <= ENVELOPE_RANGE });
        if let Some(s) = e.slope_vs_d {
            checks.push(Check { name: "envelope slope in d".into(), value: s.abs(), limit: ENVELOPE_SLOPE, pass: s.abs() <= ENVELOPE_SLOPE });
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        version: CSV_VERSION,
        rows: rows.len(),
        ok: count("ok"),
        skipped: count("skipped"),
        errors: count("error"),
        comparisons,
        envelope,
        checks,
        pass,
    })
}
