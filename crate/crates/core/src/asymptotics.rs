//! Leading-order asymptotics and two-sided envelopes.
//!
//! Envelopes carry an explicit constant `C ≥ 1`; the underlying results only
//! assert that some constant exists, so callers fit it on sweeps.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::geometry::{ball_volume_envelope, distance2, reduce_pair, Branch, Envelope, PairGeometry, Point};
use crate::kernel::{EvalResult, Method, QuadSpec, Regime, TransformedContext};
use crate::quad::{adaptive_gk_points, radial_gaussian};
use crate::special::sphere_area;

/// Default threshold `𝐑` on `d` for the difficult-regime results.
pub const DEFAULT_BIG_R: f64 = 10.0;

/// `(4π)^{−n/2−n'}(8π)^{n'/2} V(iθ) / √det(−Hess_θ φ)` with
/// `det = R^{2n'}(μ_a(|θ|)/|θ|)^{n'−1} μ_a'(|θ|)`; no range check.
fn simple_coefficient(pair: &PairGeometry) -> f64 {
    let (n, np) = (pair.n as f64, pair.np as f64);
    let t = pair.theta_norm;
    let (mu, dmu) = pair.mixing().mu_at_eps(pair.eps);
    let ratio = if t > 0.0 { mu / t } else { dmu };
    let det = pair.r2_sum.powf(np) * ratio.powf(np - 1.0) * dmu;
    let v = if t > 0.0 { (t / t.sin()).powf(0.5 * n) } else { 1.0 };
    (4.0 * PI).powf(-0.5 * n - np) * (8.0 * PI).powf(0.5 * np) * v / det.sqrt()
}

/// `p e^{d²/4}` to leading order in the simple regime `ε ≥ π/8`.
pub fn asym_simple_scaled(pair: &PairGeometry) -> Result<f64> {
    if pair.eps < crate::DELTA0 {
        return Err(precondition(format!("asym_simple needs eps >= pi/8, got {}", pair.eps)));
    }
    if !(pair.r2_sum > 0.0) {
        return Err(precondition("asym_simple needs R > 0"));
    }
    Ok(simple_coefficient(pair))
}

pub fn asym_simple(pair: &PairGeometry) -> Result<f64> {
    Ok(asym_simple_scaled(pair)? * (-0.25 * pair.d2).exp())
}

fn beta(pair: &PairGeometry) -> f64 {
    let b = pair.one_plus_a;
    (b / (b + pair.eps * pair.eps)).sqrt()
}

/// Log of the main two-sided expression, finite where `e^{−d²/4}` underflows.
pub fn envelope_main_log(pair: &PairGeometry) -> Result<f64> {
    if !pair.satisfies_an() {
        return Err(precondition("envelope_main needs x + x' != 0 and eps > 0"));
    }
    let d = pair.d();
    let (n, np) = (pair.n as f64, pair.np as f64);
    let (b, e) = (beta(pair), pair.eps);
    let se = e.sqrt();
    let den = 1.0 + b * se * d + e * d;
    let ratio = (1.0 + b * d.sqrt()) / (1.0 + b * se * d + (e * d).sqrt());
    Ok(-0.25 * pair.d2 + 0.5 * n * (1.0 + d).ln() - np * (1.0 + d + pair.r2_sum.sqrt()).ln() - den.ln()
        + (n - 2.0) * ratio.ln())
}

pub fn envelope_main(pair: &PairGeometry, constant: f64) -> Result<Envelope> {
    Envelope::new(envelope_main_log(pair)?.exp(), constant, "main")
}

/// Logs of the two difficult-regime expressions `(1 + a ≥ ε², 1 + a ≤ ε²)`,
/// both evaluated regardless of which case applies.
pub fn difficult_expressions_log(pair: &PairGeometry) -> (f64, f64) {
    let d = pair.d();
    let (n, np) = (pair.n as f64, pair.np as f64);
    let e = pair.eps;
    let y = pair.y2.sqrt();
    let base = -0.25 * pair.d2;
    let first = base + (n - np - 1.0) * d.ln() - (n - 1.0) * (1.0 + e.sqrt() * d).ln();
    let ed = e * d;
    let second = base - 0.5 * n * e.ln() - np * d.ln() + ed.ln() - (1.0 + y + ed).ln()
        + (0.5 * n - 1.0) * ((pair.y2 + ed) / (1.0 + pair.y2 + ed)).ln();
    (first, second)
}

pub fn envelope_difficult(pair: &PairGeometry, constant: f64, big_r: f64) -> Result<Envelope> {
    if !(pair.eps > 0.0 && pair.eps <= crate::DELTA0) {
        return Err(precondition(format!("difficult envelope needs 0 < eps <= pi/8, got {}", pair.eps)));
    }
    if pair.d() < big_r {
        return Err(precondition(format!("difficult envelope needs d >= {big_r}, got {}", pair.d())));
    }
    let (first, second) = difficult_expressions_log(pair);
    if pair.one_plus_a >= pair.eps * pair.eps {
        Envelope::new(first.exp(), constant, "difficult-i")
    } else {
        Envelope::new(second.exp(), constant, "difficult-ii")
    }
}

fn difficult_context(pair: &PairGeometry, big_r: f64) -> Result<TransformedContext> {
    if pair.eps > crate::DELTA0 {
        return Err(precondition(format!("difficult regime needs eps <= pi/8, got {}", pair.eps)));
    }
    if pair.d() < big_r {
        return Err(precondition(format!("difficult regime needs d >= {big_r}, got {}", pair.d())));
    }
    TransformedContext::new(pair)
}

/// `C̃ V(iθ) ∫ exp(−½|y_g − ξ|² − ½E_g(ξ)) / √det 𝔸_g(ξ) dξ`, i.e. the
/// difficult-regime leading term times `e^{d²/4}`.
pub fn asym_difficult_scaled(pair: &PairGeometry, spec: &QuadSpec) -> Result<f64> {
    spec.validate()?;
    let ctx = difficult_context(pair, DEFAULT_BIG_R)?;
    let out = ctx.outer_integral(spec, |rho| (-0.5 * ctx.e_g(rho)).exp() / ctx.det_a(rho).sqrt());
    if !out.converged {
        return Err(GrushinError::NonConvergence {
            what: "asym_difficult",
            detail: format!("{:e} +- {:e}", out.value, out.abs_err),
        });
    }
    Ok(ctx.c_tilde * ctx.v_itheta * out.value)
}

pub fn asym_difficult(pair: &PairGeometry, spec: &QuadSpec) -> Result<f64> {
    Ok(asym_difficult_scaled(pair, spec)? * (-0.25 * pair.d2).exp())
}

/// The Gaussian-quartic integrals bracketing `p d^{n'} e^{d²/4} / V(iθ)`:
/// `I_n(y_g, ε²d²/c)` for `c = c₁` and `c = c₂`.
pub fn corollary_sandwich(pair: &PairGeometry, c1: f64, c2: f64, spec: &QuadSpec) -> Result<(f64, f64)> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(invalid("sandwich constants must be positive"));
    }
    difficult_context(pair, DEFAULT_BIG_R)?;
    let s = pair.eps * pair.eps * pair.d2;
    let y = pair.y2.sqrt();
    Ok((i_p(y, s / c1, pair.n, spec)?, i_p(y, s / c2, pair.n, spec)?))
}

/// `p e^{d²/4} d^{n'} / V(iθ)` from a scaled kernel value.
pub fn sandwich_target(pair: &PairGeometry, scaled_kernel: f64) -> Result<f64> {
    let ctx = TransformedContext::new(pair)?;
    Ok(scaled_kernel * pair.d().powi(pair.np as i32) / ctx.v_itheta)
}

/// `I_p(Y, s) = ∫_{ℝ^p} e^{−½|w − Y|²} exp(−(|w|² − |Y|²)²/s) dw`.
pub fn i_p(y: f64, s: f64, p: usize, spec: &QuadSpec) -> Result<f64> {
    if !(s > 0.0) || !(y >= 0.0) || p == 0 {
        return Err(invalid(format!("I_p needs s > 0, |Y| >= 0, p >= 1; got s = {s}, Y = {y}, p = {p}")));
    }
    spec.validate()?;
    let core = if y > 0.0 { (s.sqrt() / (2.0 * y)).min(s.powf(0.25)) } else { s.powf(0.25) };
    let out = radial_gaussian(p, y, core, spec.rel_tol, 50 * spec.max_refine, |rho| {
        let q = (rho - y) * (rho + y);
        (-(q * q) / s).exp()
    });
    if !out.converged {
        return Err(GrushinError::NonConvergence { what: "I_p", detail: format!("{:e} +- {:e}", out.value, out.abs_err) });
    }
    Ok(out.value)
}

/// `√s/(1 + |Y| + √s) · ((|Y|² + √s)/(1 + |Y|² + √s))^{p/2−1}`.
pub fn i_p_estimate(y: f64, s: f64, p: usize) -> f64 {
    let rs = s.sqrt();
    rs / (1.0 + y + rs) * ((y * y + rs) / (1.0 + y * y + rs)).powf(0.5 * p as f64 - 1.0)
}

// ---------------------------------------------------------------------------
// Small time
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallTimeMode {
    /// `x = −x'`, `2r ≥ π|x|²`, `r > 0`: the η-integral formula.
    Proposition,
    /// `x = −x' ≠ 0`, `2r = π|x|²`.
    CorollaryI,
    /// `x = −x' ≠ 0`, `2r > π|x|²`.
    CorollaryIi,
    /// `x = x' = 0`, `r > 0`.
    CorollaryIii,
    /// Everything off the cut locus.
    OffCut,
}

impl std::str::FromStr for SmallTimeMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "proposition" => Ok(Self::Proposition),
            "corollary-i" => Ok(Self::CorollaryI),
            "corollary-ii" => Ok(Self::CorollaryIi),
            "corollary-iii" => Ok(Self::CorollaryIii),
            "off-cut" => Ok(Self::OffCut),
            _ => Err(format!("unknown small-time mode '{s}'")),
        }
    }
}

/// Relative tolerance for the equality `2r = π|x|²`.
const CUT_TOL: f64 = 1e-9;

/// Data of the η-integral on the cut locus `x = −x'`, `2r ≥ π|x|²`.
#[derive(Debug, Clone)]
pub struct SmallTimeContext {
    pub pair: PairGeometry,
    /// `(π/4)(2r − π|x|²)`.
    pub shift: f64,
}

impl SmallTimeContext {
    pub fn new(pair: &PairGeometry) -> Result<Self> {
        if pair.branch != Branch::Vertical || !(pair.r > 0.0) {
            return Err(precondition("small-time proposition needs x = -x', 2r >= pi|x|^2 and r > 0"));
        }
        let x2 = 0.5 * pair.r2_sum;
        Ok(Self { pair: pair.clone(), shift: (0.25 * PI * (2.0 * pair.r - PI * x2)).max(0.0) })
    }

    /// `Ẽ_g(η) = (|η|² − shift)² / (|η|² + π²R²/4)`.
    pub fn e_tilde(&self, eta: f64) -> f64 {
        let q = eta * eta - self.shift;
        let den = eta * eta + 0.25 * PI * PI * self.pair.r2_sum;
        if den == 0.0 {
            return 0.0;
        }
        q * q / den
    }

    /// `det Ã_g(η) = (|η|²/π² + R²/8)^{n'−1}(|η|²/π² + R²/4)`.
    pub fn det_a_tilde(&self, eta: f64) -> f64 {
        let e = eta * eta / (PI * PI);
        let r2 = self.pair.r2_sum;
        (e + r2 / 8.0).powi(self.pair.np as i32 - 1) * (e + r2 / 4.0)
    }

    /// `∫_{ℝⁿ} e^{−Ẽ_g(η)/2h} / √det Ã_g(η) dη` by radial quadrature.
    pub fn eta_integral(&self, h: f64, spec: &QuadSpec) -> Result<f64> {
        let n = self.pair.n;
        let c = self.shift;
        let peak = c.sqrt();
        let b = 0.25 * PI * PI * self.pair.r2_sum;
        let quartic = (2.0 * h * (c + b)).powf(0.25);
        let width = if peak > quartic { (h * (c + b)).sqrt() / (2.0 * peak) } else { quartic };
        let mut hi = peak + width.max(1e-3);
        while self.e_tilde(hi) / (2.0 * h) < 750.0 {
            hi *= 2.0;
        }
        let mut pts = vec![0.0, hi];
        let mut k = width;
        while k < hi {
            for q in [peak - k, peak + k] {
                if q > 0.0 && q < hi {
                    pts.push(q);
                }
            }
            k *= 2.0;
        }
        if peak > 0.0 && peak < hi {
            pts.push(peak);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let out = adaptive_gk_points(
            |eta| {
                let w = eta.powi(n as i32 - 1);
                if w == 0.0 && n > 1 {
                    return 0.0;
                }
                w * (-self.e_tilde(eta) / (2.0 * h)).exp() / self.det_a_tilde(eta).sqrt()
            },
            &pts,
            spec.rel_tol,
            0.0,
            50 * spec.max_refine,
        );
        if !out.converged {
            return Err(GrushinError::NonConvergence { what: "smalltime", detail: format!("{:e}", out.value) });
        }
        let area = if n == 1 { 2.0 } else { sphere_area(n) };
        Ok(area * out.value)
    }

    /// The proposition's leading term at time `h`.
    pub fn proposition(&self, h: f64, spec: &QuadSpec) -> Result<f64> {
        let p = &self.pair;
        let (n, np) = (p.n as f64, p.np as f64);
        let c = 1.0 / ((2.0 * PI).powf(n / 2.0) * (4.0 * PI).powf(np + n / 2.0));
        let log = 0.5 * np * (2.0 * PI).ln() - (0.5 * np + n) * h.ln() + c.ln() + 0.5 * n * 2f64.ln()
            - p.d2 / (4.0 * h);
        Ok(log.exp() * self.eta_integral(h, spec)?)
    }
}

fn mode_error(mode: SmallTimeMode, why: &str) -> GrushinError {
    precondition(format!("small-time mode {mode:?}: {why}"))
}

/// Which small-time formula applies to a pair.
pub fn detect_mode(pair: &PairGeometry) -> Option<SmallTimeMode> {
    let x2 = 0.5 * pair.r2_sum;
    if pair.branch == Branch::Vertical {
        if !(pair.r > 0.0) {
            return None;
        }
        if pair.r2_sum == 0.0 {
            return Some(SmallTimeMode::CorollaryIii);
        }
        if (2.0 * pair.r - PI * x2).abs() <= CUT_TOL * 2.0 * pair.r {
            return Some(SmallTimeMode::CorollaryI);
        }
        return Some(SmallTimeMode::CorollaryIi);
    }
    Some(SmallTimeMode::OffCut)
}

/// Small-time leading term of `p_h(g, g')` for the requested formula.
pub fn smalltime(g: &Point, gp: &Point, h: f64, mode: SmallTimeMode, spec: &QuadSpec) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid(format!("h = {h} must be positive")));
    }
    let pair = reduce_pair(g, gp)?;
    let detected = detect_mode(&pair);
    let (n, np) = (pair.n as f64, pair.np as f64);
    let r = pair.r;
    let expo = -pair.d2 / (4.0 * h);
    match mode {
        SmallTimeMode::Proposition => SmallTimeContext::new(&pair)?.proposition(h, spec),
        SmallTimeMode::CorollaryI => {
            if detected != Some(SmallTimeMode::CorollaryI) {
                return Err(mode_error(mode, "needs x = -x' != 0 and 2r = pi|x|^2"));
            }
            let c = 2f64.powf(-1.25 * n - 1.5) * gamma(n / 4.0) / (PI.powf(np / 2.0) * gamma(n / 2.0));
            let rr = pair.r2_sum.sqrt();
            Ok(c * (-(0.75 * n + 0.5 * np) * h.ln() + (0.5 * n - np) * rr.ln() + expo).exp())
        }
        SmallTimeMode::CorollaryIi => {
            if detected != Some(SmallTimeMode::CorollaryIi) {
                return Err(mode_error(mode, "needs x = -x' != 0 and 2r > pi|x|^2"));
            }
            let c = 2f64.powf(-2.0 * n - np + 2.0) / gamma(n / 2.0);
            let gap = 2.0 * r - 0.5 * PI * pair.r2_sum;
            Ok(c * (-(n + 0.5 * (np - 1.0)) * h.ln() + (0.5 * n - 1.0) * gap.ln() - 0.5 * (np - 1.0) * r.ln() + expo)
                .exp())
        }
        SmallTimeMode::CorollaryIii => {
            if detected != Some(SmallTimeMode::CorollaryIii) {
                return Err(mode_error(mode, "needs x = x' = 0 and r > 0"));
            }
            let c = 2f64.powf(-1.5 * n - np + 1.0) / gamma(n / 2.0);
            Ok(c * (-(n + 0.5 * (np - 1.0)) * h.ln() + 0.5 * (n - np - 1.0) * r.ln() + expo).exp())
        }
        SmallTimeMode::OffCut => {
            if detected != Some(SmallTimeMode::OffCut) || !(pair.r2_sum > 0.0) {
                return Err(mode_error(mode, "needs x != -x' or 2r < pi|x|^2"));
            }
            Ok(simple_coefficient(&pair) * (-0.5 * (n + np) * h.ln() + expo).exp())
        }
    }
}

// ---------------------------------------------------------------------------
// Dispatcher fallback
// ---------------------------------------------------------------------------

/// Unit-time leading term used when no exact path applies, or on request.
pub fn leading_term(pair: &PairGeometry, spec: &QuadSpec) -> Result<EvalResult> {
    let regime = Regime::of(pair);
    let scaled = if pair.branch == Branch::Vertical {
        let ctx = SmallTimeContext::new(pair)?;
        ctx.proposition(1.0, spec)? * (0.25 * pair.d2).exp()
    } else if pair.eps >= crate::DELTA0 {
        asym_simple_scaled(pair)?
    } else if pair.satisfies_an() && pair.d() >= DEFAULT_BIG_R {
        asym_difficult_scaled(pair, spec)?
    } else if pair.r2_sum > 0.0 {
        simple_coefficient(pair)
    } else {
        return Err(precondition("no leading term available for this pair"));
    };
    // Only the order of the remainder is known, so no error estimate.
    Ok(EvalResult::from_scaled(scaled, f64::NAN, 0.25 * pair.d2, Method::Asymptotic, regime))
}

// ---------------------------------------------------------------------------
// Classical bounds
// ---------------------------------------------------------------------------

fn volume(g: &Point, radius: f64) -> Result<f64> {
    Ok(ball_volume_envelope(g, radius, 1.0)?.expression)
}

/// The classical upper bound (volume at radius `h/(d + √h)`) and lower bound
/// with exponent `d²/((4 − ε)h)`, each with constant `C`. `expression` is the
/// upper bound without its constant.
pub fn classical_bounds(g: &Point, gp: &Point, h: f64, constant: f64, eps_ly: f64) -> Result<Envelope> {
    if !(h > 0.0) || !(constant >= 1.0) || !(eps_ly > 0.0 && eps_ly < 4.0) {
        return Err(invalid(format!("classical bounds need h > 0, C >= 1, 0 < eps < 4; got {h}, {constant}, {eps_ly}")));
    }
    let d2 = distance2(g, gp)?;
    let d = d2.sqrt();
    let sh = h.sqrt();
    let rad = h / (d + sh);
    let upper_expr = (1.0 + d / sh).recip() / (volume(g, rad)? * volume(gp, rad)?).sqrt() * (-d2 / (4.0 * h)).exp();
    let lower_expr = (-d2 / ((4.0 - eps_ly) * h)).exp() / (volume(g, sh)? * volume(gp, sh)?).sqrt();
    Ok(Envelope {
        lower: lower_expr / constant,
        upper: upper_expr * constant,
        expression: upper_expr,
        constant_used: constant,
        formula: "classical",
    })
}

/// `C h^{−k/2} exp(−d²/((4 + ε)h)) / (V_g(√h)^{1/2} V_{g'}(√h)^{1/2})`.
pub fn classical_grad_bound(g: &Point, gp: &Point, h: f64, k: u32, constant: f64, eps_ly: f64) -> Result<f64> {
    if !(h > 0.0) || !(constant > 0.0) || !(eps_ly > 0.0 && eps_ly < 4.0) || k == 0 {
        return Err(invalid("gradient bound needs h > 0, C > 0, 0 < eps < 4, k >= 1"));
    }
    let d2 = distance2(g, gp)?;
    let sh = h.sqrt();
    Ok(constant * h.powf(-0.5 * k as f64) * (-d2 / ((4.0 + eps_ly) * h)).exp()
        / (volume(g, sh)? * volume(gp, sh)?).sqrt())
}

/// `C (1 + d²/h)^{3(n+2n')+1} e^{−d²/4h} / (√h V_{g'}(√h))`.
pub fn polynomial_grad_bound(g: &Point, gp: &Point, h: f64, constant: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h must be positive"));
    }
    let d2 = distance2(g, gp)?;
    let m = 3 * (g.n() + 2 * g.np()) + 1;
    let sh = h.sqrt();
    Ok(constant * (1.0 + d2 / h).powi(m as i32) * (-d2 / (4.0 * h)).exp() / (sh * volume(gp, sh)?))
}

/// `|∇_G p_h| / (h^{−1/2}(1 + d/√h) p_h)`.
pub fn gradient_ratio(grad: &[f64], value: f64, d: f64, h: f64) -> f64 {
    let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sh = h.sqrt();
    norm / ((1.0 + d / sh) * value / sh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel, kernel_unit, MethodChoice};

    fn pt(x: &[f64], u: &[f64]) -> Point {
        Point::new(x.to_vec(), u.to_vec()).unwrap()
    }

    #[test]
    fn corollary_iii_example() {
        let g = pt(&[0.0, 0.0], &[1.0]);
        let o = pt(&[0.0, 0.0], &[0.0]);
        for h in [1.0, 0.5, 0.1] {
            let v = smalltime(&g, &o, h, SmallTimeMode::CorollaryIii, &QuadSpec::default()).unwrap();
            let want = 0.125 / (h * h) * (-PI / (2.0 * h)).exp();
            assert!((v / want - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn mode_mismatch_rejected() {
        let g = pt(&[0.3, 0.0], &[0.2]);
        let gp = pt(&[0.1, 0.0], &[0.0]);
        assert!(smalltime(&g, &gp, 0.1, SmallTimeMode::CorollaryIii, &QuadSpec::default()).is_err());
        assert!(smalltime(&g, &gp, 0.1, SmallTimeMode::Proposition, &QuadSpec::default()).is_err());
        assert!(smalltime(&g, &gp, 0.1, SmallTimeMode::OffCut, &QuadSpec::default()).is_ok());
    }

    #[test]
    fn vertical_axis_closed_form() {
        // x = x' = 0, n = 2, n' = 1: p_h = 1/(32 h² cosh²(πr/4h)).
        let o = pt(&[0.0, 0.0], &[0.0]);
        for (r, h) in [(0.5, 1.0), (2.0, 1.0), (0.5, 0.2)] {
            let g = pt(&[0.0, 0.0], &[r]);
            let v = kernel(&g, &o, h, &QuadSpec::default()).unwrap().value;
            let c = (PI * r / (4.0 * h)).cosh();
            assert!((v * 32.0 * h * h * c * c - 1.0).abs() < 1e-9, "{r} {h}");
        }
    }

    #[test]
    fn proposition_matches_corollary_iii_limit() {
        let g = pt(&[0.0, 0.0], &[0.5]);
        let o = pt(&[0.0, 0.0], &[0.0]);
        let spec = QuadSpec::default();
        let h = 0.005;
        let p = smalltime(&g, &o, h, SmallTimeMode::Proposition, &spec).unwrap();
        let c = smalltime(&g, &o, h, SmallTimeMode::CorollaryIii, &spec).unwrap();
        assert!((p / c - 1.0).abs() < 0.02, "{}", p / c);
    }

    #[test]
    fn i_p_limits() {
        let spec = QuadSpec::default();
        for p in 1..=4 {
            let v = i_p(3.0, 1e12, p, &spec).unwrap();
            assert!((v / (2.0 * PI).powf(p as f64 / 2.0) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn simple_regime_leading_term_close() {
        let g = pt(&[6.0], &[10.0]);
        let gp = pt(&[-2.0], &[0.0]);
        let pair = reduce_pair(&g, &gp).unwrap();
        let a = asym_simple(&pair).unwrap();
        let k = kernel_unit(&pair, &QuadSpec::default(), MethodChoice::Auto).unwrap();
        assert!((k.value / a - 1.0).abs() < 0.3, "{} {}", pair.eps, k.value / a);
    }
}
