//! Direct quadrature of the Fourier-type kernel formula.
//!
//! With `κ = |u − u'|/2` and the radial kernel `Ω_{n'}` the unit-time kernel is
//!
//! `p = (4π)^{−n/2−n'} ∫₀^∞ V(ρ) e^{−R²ψ_a(ρ)/4} ρ^{n'−1} Ω_{n'}(κρ) dρ`.

use std::f64::consts::PI;

use super::{check_h, dilation_log, EvalResult, Method, QuadSpec, Regime};
use crate::error::{precondition, GrushinError, Result};
use crate::geometry::{reduce_pair, PairGeometry, Point};
use crate::quad::{HalfLine, QuadOut};
use crate::scalar::{log_sinhc_inv_real, log_v, log_v2, psi_q, psi_real, C64};
use crate::special::{lambda_j, lambda_j_prime, sphere_area};

/// `(4π)^{−n/2−n'}`.
fn prefactor(n: usize, np: usize) -> f64 {
    (4.0 * PI).powf(-(n as f64 / 2.0 + np as f64))
}

/// Radial integrand pieces shared by the value and the gradient.
struct Radial<'a> {
    pair: &'a PairGeometry,
    kappa: f64,
    area: f64,
    two_nu: i32,
}

impl<'a> Radial<'a> {
    fn new(pair: &'a PairGeometry) -> Self {
        Self { pair, kappa: 0.5 * pair.r, area: sphere_area(pair.np), two_nu: pair.np as i32 - 2 }
    }

    /// `(V e^{−R²ψ/4}, ρ coth ρ, ρ / sinh ρ)`.
    ///
    /// `V` is formed as a power of `ρ/sinh ρ` rather than through its log,
    /// which would carry an absolute error of order `ρ·ulp` into the exponent.
    fn envelope(&self, rho: f64) -> (f64, f64, f64) {
        let (psi, zc, zs) = psi_real(self.pair.mixing(), rho);
        let half_n = 0.5 * self.pair.n as f64;
        let v = if zs > 1e-250 {
            if self.pair.n == 2 {
                zs
            } else {
                zs.powf(half_n)
            }
        } else {
            (half_n * log_sinhc_inv_real(rho)).exp()
        };
        let tail = if self.pair.r2_sum > 0.0 { (-0.25 * self.pair.r2_sum * psi).exp() } else { 1.0 };
        (v * tail, zc, zs)
    }

    fn omega(&self, rho: f64) -> f64 {
        let z = self.kappa * rho;
        match self.two_nu {
            // Closed forms with the rounding of `κρ` corrected to first order.
            -1 | 1 => {
                let dz = self.kappa.mul_add(rho, -z);
                let (s, c) = z.sin_cos();
                if self.two_nu == -1 {
                    2.0 * (c - s * dz)
                } else if z < 1e-3 {
                    self.area * lambda_j(1, z)
                } else {
                    self.area * ((s + c * dz) / z - s * dz / (z * z))
                }
            }
            _ => self.area * lambda_j(self.two_nu, z),
        }
    }

    /// `d/dκ Ω(κρ) = ρ Ω'(κρ)`.
    fn omega_dk(&self, rho: f64) -> f64 {
        self.area * rho * lambda_j_prime(self.two_nu, self.kappa * rho)
    }

    fn decay_length(&self) -> f64 {
        1.0 / (0.5 * self.pair.n as f64 + 0.25 * self.pair.r2_sum)
    }

    fn driver(&self, spec: &QuadSpec) -> HalfLine {
        let len = self.decay_length();
        let mut hl = HalfLine::new(spec.rule, spec.rel_tol);
        hl.min_radius = spec.trunc_radius * len;
        hl.max_segments = spec.max_refine;
        hl.max_panels = 200_000;
        let base = (2.0 * len).clamp(0.05, 2.0);
        if self.kappa > 0.0 {
            let half_wave = PI / self.kappa;
            hl.width = base.min(half_wave);
            hl.max_width = half_wave.max(hl.width);
            hl.growth = 1.25;
        } else {
            hl.width = base;
            hl.growth = 1.5;
        }
        hl
    }
}

/// Two passes when the first one reveals cancellation: the second pass uses
/// an absolute panel tolerance tied to the cancelled value.
fn integrate<F: FnMut(f64) -> f64>(hl: &HalfLine, mut f: F) -> QuadOut {
    let first = hl.integrate(0.0, &mut f);
    if first.value.abs() >= 0.01 * first.abs_mass || !first.value.is_finite() {
        return first;
    }
    let mut tight = *hl;
    tight.abs_tol = 0.1 * hl.rel_tol * first.value.abs().max(1e-17 * first.abs_mass);
    let mut second = tight.integrate(0.0, &mut f);
    second.converged &= first.converged || second.converged;
    second
}

fn check_budget(pair: &PairGeometry, spec: &QuadSpec) -> Result<()> {
    let c = pair.cancellation_exponent(1.0);
    if c > spec.cancellation_budget() {
        return Err(precondition(format!(
            "cancellation exponent {c:.3} exceeds the direct-quadrature budget {}",
            spec.cancellation_budget()
        )));
    }
    Ok(())
}

/// Rounding floor of a cancelling integral: a few ulps of `∫|f|`.
fn roundoff(out: &QuadOut) -> f64 {
    4.0 * f64::EPSILON * out.abs_mass
}

/// The same integral on the line `Im λ₁ = σ`, written as
/// `∫_ℝ e^{iκλ₁} |S^{n'−2}| ∫₀^∞ g(λ₁² + ρ²) ρ^{n'−2} dρ dλ₁` with
/// `g(q) = V(√q) e^{−R²ψ_a(√q)/4}`.
///
/// `σ` is the minimiser on the imaginary axis of `|g(−σ²)| e^{−κσ}`, so the
/// integrand has no large cancellation on the shifted line.
struct ShiftedLine<'a> {
    pair: &'a PairGeometry,
    kappa: f64,
    sigma: f64,
    /// `π − σ`, kept exactly.
    e: f64,
    /// `Re` of the log integrand at `λ₁ = iσ`, `ρ = 0`.
    m0: f64,
}

impl<'a> ShiftedLine<'a> {
    fn new(pair: &'a PairGeometry) -> Result<Self> {
        let kappa = 0.5 * pair.r;
        let e = Self::best_gap(pair, kappa);
        let mut line = Self { pair, kappa, sigma: PI - e, e, m0: 0.0 };
        line.m0 = line.log_g(0.0, 0.0)?.re;
        Ok(line)
    }

    /// Log-magnitude on the imaginary axis as a function of `e = π − σ`.
    fn axis_log(pair: &PairGeometry, kappa: f64, e: f64) -> f64 {
        let sigma = PI - e;
        let se = e.sin();
        let half = (0.5 * e).sin();
        0.5 * pair.n as f64 * (sigma / se).ln() + 0.25 * pair.r2_sum * sigma * (pair.one_plus_a - 2.0 * half * half) / se
            - kappa * sigma
    }

    fn best_gap(pair: &PairGeometry, kappa: f64) -> f64 {
        let (lo, hi) = ((1e-13f64).ln(), (PI - 1e-6).ln());
        let m = |u: f64| Self::axis_log(pair, kappa, u.exp());
        let steps = 200;
        let mut best = (hi, m(hi));
        for k in 0..=steps {
            let u = lo + (hi - lo) * k as f64 / steps as f64;
            let v = m(u);
            if v < best.1 {
                best = (u, v);
            }
        }
        let du = (hi - lo) / steps as f64;
        let (mut a, mut b) = ((best.0 - du).max(lo), (best.0 + du).min(hi));
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if m(c) < m(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (0.5 * (a + b)).exp()
    }

    /// Log of `g(q) e^{iκλ₁}` at `λ₁ = s + iσ`.
    fn log_g(&self, s: f64, rho: f64) -> Result<C64> {
        let p = self.pair;
        let ipi = C64::new(0.0, PI);
        let re = s * s + rho * rho;
        let dq = C64::new(re + self.e * (2.0 * PI - self.e), 2.0 * s * self.sigma);
        let q = C64::new(re - self.sigma * self.sigma, 2.0 * s * self.sigma);
        let (z, w) = if rho == 0.0 {
            (C64::new(s, self.sigma), C64::new(s, -self.e))
        } else {
            let z = q.sqrt();
            (z, dq / (z + ipi))
        };
        let (ln_v, psi) = if w.norm() < 0.5 {
            let sw = w.sinh();
            let sh = (0.5 * w).sinh();
            (log_v2(q)? - (dq / (PI * PI)).ln(), z * (p.one_plus_a + 2.0 * sh * sh) / sw)
        } else {
            (log_v(q)?, psi_q(p.mixing(), q)?)
        };
        Ok(0.5 * p.n as f64 * ln_v - 0.25 * p.r2_sum * psi + C64::new(-self.kappa * self.sigma, self.kappa * s))
    }

    fn unit(&self, s: f64, rho: f64) -> C64 {
        match self.log_g(s, rho) {
            Ok(l) if l.re - self.m0 > -745.0 => (l - self.m0).exp(),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Distance along `s` (or `ρ`) over which the magnitude falls by `e^{−1/2}`.
    fn scale(&self, along_s: bool) -> f64 {
        let drop = |t: f64| {
            let v = if along_s { self.log_g(t, 0.0) } else { self.log_g(0.0, t) };
            v.map(|l| self.m0 - l.re).unwrap_or(f64::INFINITY)
        };
        let mut hi = 1e-6;
        while drop(hi) < 0.5 && hi < 1e3 {
            hi *= 2.0;
        }
        let mut lo = 0.5 * hi;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if drop(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn half_line(&self, spec: &QuadSpec, len: f64, rel: f64) -> HalfLine {
        let mut hl = HalfLine::new(spec.rule, rel);
        hl.width = 0.5 * len;
        hl.growth = 1.5;
        hl.max_width = 4.0 * len;
        if self.kappa > 0.0 {
            hl.max_width = hl.max_width.max(PI / self.kappa);
        }
        hl.min_radius = (2.0 * spec.trunc_radius).sqrt() * len;
        hl.max_segments = spec.max_refine;
        hl.max_panels = 200_000;
        hl
    }

    /// `(∫_ℝ …, error, ∫|…|)`, all scaled by `e^{−m0}`.
    fn integrate(&self, spec: &QuadSpec) -> QuadOut {
        let ls = self.scale(true);
        let outer = self.half_line(spec, ls, spec.rel_tol);
        let np = self.pair.np;
        if np == 1 {
            let out = outer.integrate(0.0, |s| self.unit(s, 0.0).re);
            return QuadOut { value: 2.0 * out.value, abs_err: 2.0 * out.abs_err, abs_mass: 2.0 * out.abs_mass, ..out };
        }
        let lr = self.scale(false);
        let area = sphere_area(np - 1);
        let inner_rel = 0.1 * spec.rel_tol;
        let mut inner_ok = true;
        let out = outer.integrate(0.0, |s| {
            let peak = self.unit(s, 0.0).norm();
            if peak == 0.0 {
                return 0.0;
            }
            let mut hl = self.half_line(spec, lr, inner_rel);
            hl.abs_tol = 0.01 * inner_rel * peak * lr.powi(np as i32 - 1);
            let pw = np as i32 - 2;
            // The outer integrand is a real part, so only the real part of the inner one is needed.
            let re = hl.integrate(0.0, |rho| self.unit(s, rho).re * rho.powi(pw));
            inner_ok &= re.converged;
            area * re.value
        });
        QuadOut {
            value: 2.0 * out.value,
            abs_err: 2.0 * (out.abs_err + inner_rel * out.abs_mass),
            abs_mass: 2.0 * out.abs_mass,
            converged: out.converged && inner_ok,
        }
    }
}

/// Cancellation exponent above which the integration line is shifted.
const SHIFT_ABOVE: f64 = 8.0;

fn shifted_unit(pair: &PairGeometry, spec: &QuadSpec) -> Result<EvalResult> {
    let line = ShiftedLine::new(pair)?;
    let out = line.integrate(spec);
    let fail = |detail: String| GrushinError::NonConvergence { what: "kernel_direct", detail };
    if !out.converged {
        return Err(fail(format!("shifted-line quadrature stopped at {:e} +- {:e}", out.value, out.abs_err)));
    }
    if !(out.value > 0.0) {
        return Err(fail(format!("non-positive value {:e} (error {:e})", out.value, out.abs_err)));
    }
    // Everything was scaled by e^{−m0}; report p·e^{d²/4}.
    let log_c = prefactor(pair.n, pair.np).ln() + line.m0 + 0.25 * pair.d2;
    let c = log_c.exp();
    let err = out.abs_err + roundoff(&out);
    Ok(EvalResult::from_scaled(c * out.value, c * err, 0.25 * pair.d2, Method::Direct, Regime::of(pair)))
}

/// Unit-time direct quadrature.
pub fn kernel_direct_unit(pair: &PairGeometry, spec: &QuadSpec) -> Result<EvalResult> {
    spec.validate()?;
    check_budget(pair, spec)?;
    if pair.cancellation_exponent(1.0) > SHIFT_ABOVE {
        return shifted_unit(pair, spec);
    }
    kernel_direct_raw_unit(pair, spec)
}

#[doc(hidden)]
pub fn kernel_direct_raw_unit(pair: &PairGeometry, spec: &QuadSpec) -> Result<EvalResult> {
    let rad = Radial::new(pair);
    let np = pair.np as i32;
    let out = integrate(&rad.driver(spec), |rho| {
        let (env, _, _) = rad.envelope(rho);
        if env == 0.0 {
            return 0.0;
        }
        env * rho.powi(np - 1) * rad.omega(rho)
    });
    if !out.converged {
        return Err(GrushinError::NonConvergence {
            what: "kernel_direct",
            detail: format!("radial quadrature stopped at estimate {:e} +- {:e}", out.value, out.abs_err),
        });
    }
    let pref = prefactor(pair.n, pair.np);
    let value = pref * out.value;
    let err = pref * (out.abs_err + roundoff(&out));
    if !(value > 0.0) {
        return Err(GrushinError::NonConvergence {
            what: "kernel_direct",
            detail: format!("non-positive value {value:e} (error {err:e})"),
        });
    }
    Ok(EvalResult::from_value(value, err, 0.25 * pair.d2, Method::Direct, Regime::of(pair)))
}

/// `p_h(g, g')` by direct quadrature.
pub fn kernel_direct(g: &Point, gp: &Point, h: f64, spec: &QuadSpec) -> Result<EvalResult> {
    check_h(h)?;
    let pair = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    Ok(kernel_direct_unit(&pair, spec)?.scale_by(dilation_log(pair.n, pair.np, h)))
}

/// Horizontal gradient `((X_j p)_{j ≤ n}, (U_{jk} p)_{j ≤ n, k ≤ n'})` in `g`,
/// `U` flattened row-major in `(j, k)`.
///
/// Differentiates the direct integrand: `X_j` brings down
/// `½(−ρ coth ρ · x_j + ρ/sinh ρ · x'_j)` and `U_{jk}` brings down
/// `(i/2) x_j λ_k`, whose spherical average is a derivative in `κ`.
pub fn grad_kernel(g: &Point, gp: &Point, h: f64, spec: &QuadSpec) -> Result<Vec<f64>> {
    check_h(h)?;
    spec.validate()?;
    let pair = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    check_budget(&pair, spec)?;
    let rad = Radial::new(&pair);
    let np = pair.np as i32;
    let hl = rad.driver(spec);
    let fail = |what: &str, q: &QuadOut| GrushinError::NonConvergence {
        what: "grad_kernel",
        detail: format!("{what} integral stopped at {:e} +- {:e}", q.value, q.abs_err),
    };
    let ic = integrate(&hl, |rho| {
        let (env, zc, _) = rad.envelope(rho);
        env * zc * rho.powi(np - 1) * rad.omega(rho)
    });
    let is = integrate(&hl, |rho| {
        let (env, _, zs) = rad.envelope(rho);
        env * zs * rho.powi(np - 1) * rad.omega(rho)
    });
    if !ic.converged {
        return Err(fail("coth", &ic));
    }
    if !is.converged {
        return Err(fail("csch", &is));
    }
    let dg = if pair.r > 0.0 {
        let q = integrate(&hl, |rho| {
            let (env, _, _) = rad.envelope(rho);
            env * rho.powi(np - 1) * rad.omega_dk(rho)
        });
        if !q.converged {
            return Err(fail("kappa-derivative", &q));
        }
        q.value
    } else {
        0.0
    };
    let pref = prefactor(pair.n, pair.np);
    // Gradients pick up one more factor h^{−1/2} than the value.
    let scale = (dilation_log(pair.n, pair.np, h) - 0.5 * h.ln()).exp() * pref;
    let mut out = Vec::with_capacity(pair.n * (1 + pair.np));
    for j in 0..pair.n {
        out.push(scale * 0.5 * (-pair.x[j] * ic.value + pair.xp[j] * is.value));
    }
    for j in 0..pair.n {
        for k in 0..pair.np {
            let khat = if pair.r > 0.0 { pair.du[k] / pair.r } else { 0.0 };
            out.push(scale * 0.5 * pair.x[j] * khat * dg);
        }
    }
    Ok(out)
}
