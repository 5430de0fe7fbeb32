//! Scalar phase and amplitude functions.
//!
//! Everything that is holomorphic in the complex quadratic form
//! `q = λ·λ = Σ λ_j²` takes `q` as its internal argument; the vector forms
//! only compute `q` and delegate. The three ingredients are
//!
//! * `ψ_a(r) = r coth r − a r / sinh r` and its imaginary-axis derivative
//!   `μ_a(t) = −d/dt ψ_a(i t)`,
//! * the amplitudes `V(λ) = (|λ| / sinh |λ|)^{n/2}` and
//!   `V₂(λ) = (1 + λ·λ/π²)^{n/2} V(λ)`,
//! * the shifted phase `f(R, a; ϑ)` whose Hessian drives the saddle analysis.
//!
//! Partial-fraction series are accelerated by subtracting the first few
//! moments in closed form (`Σ k⁻²`, `Σ k⁻⁴`, `Σ k⁻⁶` with alternating signs),
//! so the remainders decay like `k⁻⁶` or faster.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, GrushinError, Result};

pub type C64 = Complex64;

/// Complex argument of the strip-extended functions.
pub type StripComplex = Complex64;

const PI2: f64 = PI * PI;
const PI4: f64 = PI2 * PI2;
const PI6: f64 = PI4 * PI2;

/// Controls partial sums of the partial-fraction series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub truncation_terms: usize,
    pub tail_bound_tolerance: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self { truncation_terms: 100_000, tail_bound_tolerance: 1e-14 }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.truncation_terms < 1 || !(self.tail_bound_tolerance > 0.0) {
            return Err(crate::error::invalid("series policy needs terms >= 1 and tolerance > 0"));
        }
        Ok(())
    }
}

/// The mixing parameter `a ∈ [−1, 1]` together with `1 + a`.
///
/// `1 + a` is carried separately because the difficult regime is governed by
/// it and `a = 2x·x'/R²` loses all relative precision in `1 + a` when `x ≈ −x'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixing {
    pub a: f64,
    pub one_plus_a: f64,
}

impl Mixing {
    pub fn new(a: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&a) {
            return Err(domain("mixing", format!("a = {a} outside [-1, 1]")));
        }
        Ok(Self { a, one_plus_a: 1.0 + a })
    }

    /// Builds from `1 + a`, keeping its full precision.
    pub fn from_one_plus_a(b: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&b) {
            return Err(domain("mixing", format!("1 + a = {b} outside [0, 2]")));
        }
        Ok(Self { a: b - 1.0, one_plus_a: b })
    }

    /// `Σ_{k≥1} (1 − a(−1)^k) / k^{2m}` for m = 1, 2, 3.
    fn moments(&self) -> [f64; 3] {
        let a = self.a;
        [
            PI2 / 6.0 + a * PI2 / 12.0,
            PI4 / 90.0 + a * 7.0 * PI4 / 720.0,
            PI6 / 945.0 + a * 31.0 * PI6 / 30240.0,
        ]
    }

    fn weight(&self, k: usize) -> f64 {
        // 1 − a(−1)^k
        if k % 2 == 0 {
            1.0 - self.a
        } else {
            self.one_plus_a
        }
    }

    /// `μ_a(t)` for `|t| < π`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        check_mu_domain(t)?;
        let s = t.abs();
        let v = if s < 0.5 { self.mu_series(s).0 } else { self.mu_closed_eps(PI - s).0 };
        Ok(v.copysign(t))
    }

    /// `μ_a'(t)`, even in `t`.
    pub fn mu_prime(&self, t: f64) -> Result<f64> {
        check_mu_domain(t)?;
        let s = t.abs();
        Ok(if s < 0.5 { self.mu_series(s).1 } else { self.mu_closed_eps(PI - s).1 })
    }

    /// `(μ_a(π − ε), μ_a'(π − ε))`, accurate in `ε` down to subnormal scales.
    pub fn mu_at_eps(&self, eps: f64) -> (f64, f64) {
        let t = PI - eps;
        if t < 0.5 {
            self.mu_series(t)
        } else {
            self.mu_closed_eps(eps)
        }
    }

    fn mu_series(&self, t: f64) -> (f64, f64) {
        let s = t * t;
        let [m2, m4, _] = self.moments();
        let mut rem_mu = 0.0;
        let mut rem_dmu = 0.0;
        for k in 1..=10_000usize {
            let c = (k * k) as f64 * PI2;
            let x = s / c;
            let w = self.weight(k) / c;
            let om = 1.0 - x;
            let dm = w * x * x * (3.0 - 2.0 * x) / (om * om);
            let dd = w * x * x * (15.0 - 17.0 * x + 6.0 * x * x) / (om * om * om);
            rem_mu += dm;
            rem_dmu += dd;
            if k > 2 && 20.0 * x * x / c < 1e-18 {
                break;
            }
        }
        let mu = 4.0 * t * (m2 / PI2 + 2.0 * s * m4 / PI4 + rem_mu);
        let dmu = 4.0 * (m2 / PI2 + 6.0 * s * m4 / PI4 + rem_dmu);
        (mu, dmu)
    }

    /// `μ = μ₋₁ + (1 + a) G`, both written in `ε = π − t`.
    fn mu_closed_eps(&self, eps: f64) -> (f64, f64) {
        let (se, ce) = eps.sin_cos();
        let pe = PI - eps;
        let opc = 1.0 + ce;
        let m0 = (pe - se) / opc;
        let dm0 = (opc * opc - (pe - se) * se) / (opc * opc);
        let b = self.one_plus_a;
        if b == 0.0 {
            return (m0, dm0);
        }
        let ng = se + pe * ce;
        let g = ng / (se * se);
        let dg = (pe * se * se + 2.0 * ng * ce) / (se * se * se);
        (m0 + b * g, dm0 + b * dg)
    }

    /// Returns `ε = π − μ_a⁻¹(|s|)` for `s ≥ 0`; the caller restores the sign.
    ///
    /// Bracketed Newton iteration with bisection fallback, run in `t` when the
    /// root lies in `[0, π/2]` and in `ε` otherwise.
    pub fn mu_inverse_eps(&self, s: f64) -> Result<f64> {
        let s = s.abs();
        if !s.is_finite() {
            return Err(range_err(format!("non-finite target {s}")));
        }
        if self.one_plus_a == 0.0 && s >= PI / 2.0 {
            return Err(range_err(format!("a = -1 and s = {s} >= pi/2")));
        }
        if s == 0.0 {
            return Ok(PI);
        }
        let tol = 1e-12 * s.max(1.0);
        let mid = self.mu_closed_eps(PI / 2.0).0;
        if s <= mid {
            // Solve in t on [0, π/2]; μ increasing.
            let t = newton_bisect(
                |t| {
                    let (m, dm) = if t < 0.5 { self.mu_series(t) } else { self.mu_closed_eps(PI - t) };
                    (m - s, dm)
                },
                0.0,
                PI / 2.0,
                tol,
            )?;
            return Ok(PI - t);
        }
        // Solve in ε on (0, π/2]; μ decreasing in ε.
        let mut lo = match self.one_plus_a {
            b if b > 0.0 => (b * PI / s).sqrt().min(PI / 2.0) * 0.5,
            _ => (PI / 2.0 - s).min(PI / 2.0) * 0.5,
        };
        let mut guard = 0;
        while self.mu_closed_eps(lo).0 <= s {
            lo *= 0.5;
            guard += 1;
            if guard > 2000 || lo == 0.0 {
                return Err(range_err(format!("cannot bracket mu^-1({s})")));
            }
        }
        newton_bisect(
            |e| {
                let (m, dm) = self.mu_closed_eps(e);
                // increasing function of ε: s − μ
                (s - m, dm)
            },
            lo,
            PI / 2.0,
            tol,
        )
    }
}

fn range_err(detail: String) -> GrushinError {
    GrushinError::Range { func: "mu_inverse", detail }
}

fn check_mu_domain(t: f64) -> Result<()> {
    if !(t.abs() < PI) {
        return Err(domain("mu", format!("|t| = {} >= pi", t.abs())));
    }
    Ok(())
}

/// Root of an increasing function on `[lo, hi]` with `F(lo) ≤ 0 ≤ F(hi)`.
fn newton_bisect<F: Fn(f64) -> (f64, f64)>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let (fx, dfx) = f(x);
        if fx.abs() <= tol && (hi - lo) < 1e-6 * x.abs().max(1e-300) || fx == 0.0 {
            // Polish with one more Newton step when it stays in the bracket.
            let step = fx / dfx;
            let xn = x - step;
            if dfx > 0.0 && xn > lo && xn < hi {
                return Ok(xn);
            }
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = fx / dfx;
        let xn = x - step;
        x = if dfx > 0.0 && xn > lo && xn < hi { xn } else { 0.5 * (lo + hi) };
        if (hi - lo) <= 4.0 * f64::EPSILON * x.abs() {
            return Ok(x);
        }
    }
    Err(GrushinError::NonConvergence { what: "mu_inverse", detail: format!("bracket [{lo}, {hi}]") })
}

/// `μ_a(t)`.
pub fn mu(a: f64, t: f64) -> Result<f64> {
    Mixing::new(a)?.mu(t)
}

/// `μ_a'(t)`.
pub fn mu_prime(a: f64, t: f64) -> Result<f64> {
    Mixing::new(a)?.mu_prime(t)
}

/// `μ_a⁻¹(s) ∈ (−π, π)`.
pub fn mu_inverse(a: f64, s: f64) -> Result<f64> {
    let eps = Mixing::new(a)?.mu_inverse_eps(s)?;
    Ok((PI - eps).copysign(s))
}

// ---------------------------------------------------------------------------
// ψ_a
// ---------------------------------------------------------------------------

/// `ψ_a(z)` for a scalar `z` in the strip `|Im z| < π`.
pub fn psi(a: f64, z: StripComplex) -> Result<C64> {
    if !(z.im.abs() < PI) {
        return Err(domain("psi", format!("|Im z| = {} >= pi", z.im.abs())));
    }
    psi_q(Mixing::new(a)?, z * z)
}

/// `ψ_a` as a function of `q = z²`.
pub fn psi_q(mix: Mixing, q: C64) -> Result<C64> {
    if near_pole(-q, 1, 0.1) {
        return psi_series_q(mix, q, &SeriesPolicy::default());
    }
    psi_closed_q(mix, q)
}

/// Closed form `z coth z − a z / sinh z` with `z = √q`.
pub fn psi_closed_q(mix: Mixing, q: C64) -> Result<C64> {
    let z = q.sqrt();
    if z.norm() < 1e-2 {
        // Taylor: z coth z = 1 + q/3 − q²/45 + 2q³/945, z/sinh z = 1 − q/6 + 7q²/360 − 31q³/15120.
        let zc = 1.0 + q / 3.0 - q * q / 45.0 + 2.0 * q * q * q / 945.0;
        let zs = 1.0 - q / 6.0 + 7.0 * q * q / 360.0 - 31.0 * q * q * q / 15120.0;
        return Ok(zc - mix.a * zs);
    }
    let e2 = (-2.0 * z).exp();
    let den = 1.0 - e2;
    if den.norm() < 1e-300 {
        return Err(domain("psi", "pole of psi"));
    }
    let coth = (1.0 + e2) / den;
    let csch_z = 2.0 * z * (-z).exp() / den;
    let v = z * coth - mix.a * csch_z;
    if !v.is_finite() {
        return Err(domain("psi", "pole of psi"));
    }
    Ok(v)
}

/// Series `1 − a + 2 Σ q(1 − a(−1)^k)/(q + k²π²)` with moment acceleration.
pub fn psi_series_q(mix: Mixing, q: C64, policy: &SeriesPolicy) -> Result<C64> {
    policy.validate()?;
    let [m2, m4, _] = mix.moments();
    let mut rem = C64::new(0.0, 0.0);
    let qn = q.norm();
    for k in 1..=policy.truncation_terms {
        let c = (k * k) as f64 * PI2;
        let x = q / c;
        let opx = 1.0 + x;
        if opx.norm() < 1e-300 {
            if mix.weight(k) == 0.0 {
                continue;
            }
            return Err(domain("psi", format!("pole at q = -{k}^2 pi^2")));
        }
        rem += mix.weight(k) * x * x * x / opx;
        let kf = k as f64;
        if x.norm() < 0.5 && 4.0 * qn.powi(3) / (5.0 * PI6 * kf.powi(5)) < policy.tail_bound_tolerance {
            break;
        }
    }
    Ok(1.0 - mix.a + 2.0 * (q * m2 / PI2 - q * q * m4 / PI4 + rem))
}

/// `true` when `q` is within `radius` of some `k²π²`, `k ≥ k_min`.
fn near_pole(q: C64, k_min: usize, radius: f64) -> bool {
    if q.re < 0.0 {
        return false;
    }
    let k = (q.re.sqrt() / PI).round().max(k_min as f64);
    let c = k * k * PI2;
    (q - c).norm() < radius
}

/// Real `ψ_a(r)` for `r ≥ 0`, together with `(r coth r, r / sinh r)`.
pub fn psi_real(mix: Mixing, r: f64) -> (f64, f64, f64) {
    let r = r.abs();
    let (zc, zs) = if r < 1e-2 {
        let q = r * r;
        (1.0 + q / 3.0 - q * q / 45.0 + 2.0 * q * q * q / 945.0, 1.0 - q / 6.0 + 7.0 * q * q / 360.0 - 31.0 * q * q * q / 15120.0)
    } else {
        let e2 = (-2.0 * r).exp();
        let om = -(-2.0 * r).exp_m1();
        (r * (1.0 + e2) / om, 2.0 * r * (-r).exp() / om)
    };
    (zc - mix.a * zs, zc, zs)
}

/// `ln(r / sinh r)` for real `r ≥ 0`.
pub fn log_sinhc_inv_real(r: f64) -> f64 {
    let r = r.abs();
    if r < 1e-3 {
        let q = r * r;
        return -q / 6.0 + q * q / 180.0;
    }
    if r < 1.0 {
        return (r / r.sinh()).ln();
    }
    (2.0 * r).ln() - r - (-(-2.0 * r).exp()).ln_1p()
}

// ---------------------------------------------------------------------------
// Amplitudes
// ---------------------------------------------------------------------------

/// `λ·λ = Σ λ_j²` (no conjugation).
pub fn quadratic_form(z: &[C64]) -> C64 {
    z.iter().map(|v| v * v).sum()
}

/// `z / sinh z`.
pub fn sinhc_inv(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let q = z * z;
        return 1.0 / (1.0 + q / 6.0 + q * q / 120.0 + q * q * q / 5040.0);
    }
    z / z.sinh()
}

/// Branch-continuous `log(√q / sinh √q) = −Σ_{k≥1} log(1 + q/(k²π²))`,
/// defined for `Re q > −π²`.
pub fn log_v(q: C64) -> Result<C64> {
    let z = q.sqrt();
    if z.re >= 0.5 {
        return Ok(z.ln() - z + LN_2 - (1.0 - (-2.0 * z).exp()).ln());
    }
    if !(q.re > -PI2) {
        return Err(domain("V", format!("Re(q) = {} <= -pi^2", q.re)));
    }
    let w = sinhc_inv(z);
    if !w.is_finite() || w.norm() == 0.0 {
        return Err(domain("V", "product pole"));
    }
    Ok(w.ln())
}

/// Branch-continuous `−Σ_{k≥2} log(1 + q/(k²π²))`, defined for `Re q > −4π²`.
pub fn log_v2(q: C64) -> Result<C64> {
    let z = q.sqrt();
    if z.re >= 0.5 {
        return Ok(z.ln() - z + LN_2 - (1.0 - (-2.0 * z).exp()).ln() + (1.0 + q / PI2).ln());
    }
    if !(q.re > -4.0 * PI2) {
        return Err(domain("V2", format!("Re(q) = {} <= -4 pi^2", q.re)));
    }
    let ipi = C64::new(0.0, PI);
    let base = if (z - ipi).norm() < 0.5 {
        -z * (z + ipi) / PI2 * sinhc_inv(z - ipi)
    } else if (z + ipi).norm() < 0.5 {
        -z * (z - ipi) / PI2 * sinhc_inv(z + ipi)
    } else {
        sinhc_inv(z) * (1.0 + q / PI2)
    };
    if !base.is_finite() || base.norm() == 0.0 {
        return Err(domain("V2", "product pole"));
    }
    Ok(base.ln())
}

/// `V(λ)` evaluated through `q = λ·λ`.
pub fn amplitude_v_q(n: usize, q: C64) -> Result<C64> {
    Ok((0.5 * n as f64 * log_v(q)?).exp())
}

/// `V(λ) = Π_{k≥1} (1 + λ·λ/(k²π²))^{−n/2}`.
pub fn amplitude_v(n: usize, lambda: &[C64]) -> Result<C64> {
    amplitude_v_q(n, quadratic_form(lambda))
}

pub fn amplitude_v2_q(n: usize, q: C64) -> Result<C64> {
    Ok((0.5 * n as f64 * log_v2(q)?).exp())
}

/// `V₂(λ) = Π_{k≥2} (1 + λ·λ/(k²π²))^{−n/2}`.
pub fn amplitude_v2(n: usize, lambda: &[C64]) -> Result<C64> {
    amplitude_v2_q(n, quadratic_form(lambda))
}

/// Scalar-argument `Ṽ₂(s) = (1 + s²/π²)^{n/2} (s / sinh s)^{n/2}`.
pub fn v2_tilde(n: usize, s: C64) -> Result<C64> {
    amplitude_v2_q(n, s * s)
}

/// Brute-force truncated product `Π_{k=k0}^{terms} (1 + q/(k²π²))^{−n/2}`,
/// summed as principal logarithms.
pub fn product_form_q(n: usize, q: C64, k0: usize, terms: usize) -> C64 {
    let mut l = C64::new(0.0, 0.0);
    for k in k0..=terms {
        l -= (1.0 + q / ((k * k) as f64 * PI2)).ln();
    }
    (0.5 * n as f64 * l).exp()
}

// ---------------------------------------------------------------------------
// Shifted phase f(R, a; ϑ)
// ---------------------------------------------------------------------------

/// Stable `(cot t, csc t)` for complex `t`, including large `|Im t|`.
fn cot_csc(t: C64) -> (C64, C64) {
    if t.im < 0.0 {
        let (c, s) = cot_csc(t.conj());
        return (c.conj(), s.conj());
    }
    let i = C64::new(0.0, 1.0);
    let e1 = (i * t).exp();
    let e2 = e1 * e1;
    let den = e2 - 1.0;
    (i * (e2 + 1.0) / den, 2.0 * i * e1 / den)
}

/// `f(R, a; ϑ) = R² Φ(ϑ·ϑ)` with
/// `Φ(q) = 1 − a − 2 Σ_{k≥2} q(1 − a(−1)^k)/(k²π² − q)`.
///
/// The `k = 1` pole of `ψ_a(i·)` is cancelled analytically, so `f` is
/// holomorphic for `|Im ϑ| < 2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedPhase {
    pub r2: f64,
    pub mix: Mixing,
}

impl ShiftedPhase {
    pub fn new(r2: f64, mix: Mixing) -> Result<Self> {
        if !(r2 >= 0.0) {
            return Err(crate::error::invalid(format!("R^2 = {r2} must be >= 0")));
        }
        Ok(Self { r2, mix })
    }

    /// `f` at a complex vector argument.
    pub fn value(&self, theta: &[C64]) -> Result<C64> {
        self.value_q(quadratic_form(theta))
    }

    pub fn value_q(&self, q: C64) -> Result<C64> {
        Ok(self.r2 * self.phi(q)?)
    }

    /// `Φ(q)`, dispatching between series, removable-singularity form and
    /// closed form.
    pub fn phi(&self, q: C64) -> Result<C64> {
        if q.norm() < 0.5 || near_pole(q, 2, 0.1) {
            return self.phi_series(q).map(|d| d[0]);
        }
        let t = q.sqrt();
        let b = self.mix.one_plus_a;
        let v = if (t - PI).norm() < 1.0 {
            let d = t - PI;
            let gap = if d.norm() < 0.1 {
                let d2 = d * d;
                d * (1.0 / 6.0 + d2 * (7.0 / 360.0 + d2 * (31.0 / 15120.0 + d2 * (127.0 / 604800.0 + d2 * 73.0 / 3421440.0))))
            } else {
                1.0 / d.sin() - 1.0 / d
            };
            -t * (d * 0.5).tan() + b * t * gap - b * t / (t + PI)
        } else {
            let (cot, csc) = cot_csc(t);
            t * cot - self.mix.a * t * csc + 2.0 * q * b / (PI2 - q)
        };
        if !v.is_finite() {
            return Err(domain("f", "pole of f"));
        }
        Ok(v)
    }

    /// `[Φ, Φ', Φ'']` by the accelerated partial-fraction series.
    pub fn phi_series(&self, q: C64) -> Result<[C64; 3]> {
        let [m2, m4, m6] = self.mix.moments();
        let b = self.mix.one_plus_a;
        let (s2, s4, s6) = (m2 - b, m4 - b, m6 - b);
        let qn = q.norm();
        let zero = C64::new(0.0, 0.0);
        let (mut r0, mut r1, mut r2) = (zero, zero, zero);
        for k in 2..=200_000usize {
            let c = (k * k) as f64 * PI2;
            let x = q / c;
            let om = 1.0 - x;
            if om.norm() < 1e-300 {
                if self.mix.weight(k) == 0.0 {
                    continue;
                }
                return Err(domain("f", format!("pole at q = {k}^2 pi^2")));
            }
            let w = self.mix.weight(k);
            let x2 = x * x;
            r0 += w * x2 * x / om;
            r1 += (w / c) * x2 * x * (4.0 - 3.0 * x) / (om * om);
            r2 += (w / (c * c)) * x2 * (6.0 - 8.0 * x + 3.0 * x2) / (om * om * om);
            let kf = k as f64;
            if x.norm() < 0.5 {
                let t0 = 4.0 * qn.powi(3) / (5.0 * PI6 * kf.powi(5));
                let t2 = 200.0 * qn.powi(2) / (7.0 * PI4 * PI4 * kf.powi(7));
                if t0 < 1e-17 && t2 < 1e-19 {
                    break;
                }
            }
        }
        let phi = (1.0 - self.mix.a) - 2.0 * (q * s2 / PI2 + q * q * s4 / PI4 + r0);
        let d1 = -2.0 * (s2 / PI2 + 2.0 * q * s4 / PI4 + 3.0 * q * q * s6 / PI6 + r1);
        let d2 = -4.0 * (s4 / PI4 + 3.0 * q * s6 / PI6 + r2);
        Ok([phi, d1, d2])
    }

    /// Real `(Φ(q), Φ'(q), Φ''(q))` at `q = |ϑ|²`.
    pub fn phi_real(&self, q: f64) -> Result<(f64, f64, f64)> {
        let [a, b, c] = self.phi_series(C64::new(q, 0.0))?;
        Ok((a.re, b.re, c.re))
    }

    /// `∇_ϑ f = 2 R² Φ'(|ϑ|²) ϑ` at real `ϑ`.
    pub fn grad(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let q: f64 = theta.iter().map(|v| v * v).sum();
        let (_, d1, _) = self.phi_real(q)?;
        Ok(theta.iter().map(|v| 2.0 * self.r2 * d1 * v).collect())
    }

    /// `Hess_ϑ f = R² (2Φ' 𝕀 + 4Φ'' ϑϑᵀ)` at real `ϑ`.
    pub fn hess(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let q: f64 = theta.iter().map(|v| v * v).sum();
        let (_, d1, d2) = self.phi_real(q)?;
        let m = theta.len();
        Ok(DMatrix::from_fn(m, m, |i, j| {
            let diag = if i == j { 2.0 * d1 } else { 0.0 };
            self.r2 * (diag + 4.0 * d2 * theta[i] * theta[j])
        }))
    }

    /// Eigenvalues of `−Hess_ϑ f` as (transverse, radial); the transverse
    /// value has multiplicity `n' − 1`.
    pub fn neg_hess_eigen(&self, theta_norm: f64) -> Result<(f64, f64)> {
        let q = theta_norm * theta_norm;
        let (_, d1, d2) = self.phi_real(q)?;
        Ok((-2.0 * self.r2 * d1, -self.r2 * (2.0 * d1 + 4.0 * q * d2)))
    }
}

/// `z/sinh z − z coth z` with `z² = q`; bounds the Laplacian of the phase.
pub fn sinh_coth_gap_q(q: C64) -> Result<C64> {
    let one = Mixing { a: 1.0, one_plus_a: 2.0 };
    Ok(-psi_q(one, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Plain partial sum of the ψ series plus the leading `1/K` tail term.
    fn psi_brute(a: f64, z: C64, terms: usize) -> C64 {
        let q = z * z;
        let mut s = C64::new(1.0 - a, 0.0);
        for k in 1..=terms {
            let w = 1.0 - a * if k % 2 == 0 { 1.0 } else { -1.0 };
            s += 2.0 * q * w / (q + (k * k) as f64 * PI2);
        }
        s + 2.0 * q / (PI2 * (terms as f64 + 0.5))
    }

    #[test]
    fn psi_examples() {
        for a in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let v = psi(a, c(0.0, 0.0)).unwrap();
            assert!((v - (1.0 - a)).norm() < 1e-15);
        }
        let v = psi(-1.0, c(2.0, 0.0)).unwrap();
        assert!((v.re - 2.0 / 1f64.tanh()).abs() < 1e-14);
        let z = c(1.0, 0.5);
        let brute = psi_brute(0.3, z, 200_000);
        assert!((psi(0.3, z).unwrap() - brute).norm() < 1e-9);
        assert!(psi(0.0, c(0.0, PI)).is_err());
    }

    #[test]
    fn psi_near_imaginary_pole_neighbourhood() {
        // Close to z = iπ the series branch is used; compare with closed form a bit further away.
        let mix = Mixing::new(0.4).unwrap();
        let q1 = c(-PI2 + 0.099, 0.0);
        let q2 = c(-PI2 + 0.101, 0.0);
        let s = psi_series_q(mix, q2, &SeriesPolicy::default()).unwrap();
        let cl = psi_closed_q(mix, q2).unwrap();
        assert!((s - cl).norm() < 1e-10 * cl.norm());
        assert!(psi_q(mix, q1).unwrap().is_finite());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu(0.4, 0.0).unwrap(), 0.0);
        assert!((mu(-1.0, PI / 2.0).unwrap() - (PI / 2.0 - 1.0)).abs() < 1e-14);
        let h = 1e-5;
        let fd = (mu(0.4, 1.0 + h).unwrap() - mu(0.4, 1.0 - h).unwrap()) / (2.0 * h);
        assert!((fd / mu_prime(0.4, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(mu(0.0, PI).is_err());
    }

    #[test]
    fn mu_branches_meet() {
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let m = Mixing::new(a).unwrap();
            let s = m.mu_series(0.5);
            let cl = m.mu_closed_eps(PI - 0.5);
            assert!((s.0 - cl.0).abs() < 1e-14, "a={a}");
            assert!((s.1 - cl.1).abs() < 1e-13, "a={a}");
        }
    }

    #[test]
    fn mu_inverse_bisection_oracle() {
        // Independent root of (t − sin t)/(2 sin²(t/2)) = 0.5 by plain bisection.
        let g = |t: f64| (t - t.sin()) / (2.0 * (t / 2.0).sin().powi(2)) - 0.5;
        let (mut lo, mut hi) = (1e-6, PI / 2.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        assert!((mu_inverse(-1.0, 0.5).unwrap() - lo).abs() < 1e-12);
        assert_eq!(mu_inverse(0.3, 0.0).unwrap(), 0.0);
        assert!((mu_inverse(0.5, mu(0.5, 1.3).unwrap()).unwrap() - 1.3).abs() < 1e-10);
        assert!(matches!(mu_inverse(-1.0, PI / 2.0), Err(GrushinError::Range { .. })));
    }

    #[test]
    fn mu_inverse_tiny_eps() {
        // Large targets push the root to ε ~ 1e−8; the ε solver keeps relative accuracy.
        let m = Mixing::new(0.2).unwrap();
        let eps = 1e-8;
        let s = m.mu_at_eps(eps).0;
        let back = m.mu_inverse_eps(s).unwrap();
        assert!((back / eps - 1.0).abs() < 1e-9, "{back}");
    }

    #[test]
    fn amplitude_examples() {
        assert!((amplitude_v(4, &[c(0.0, 0.0)]).unwrap() - 1.0).norm() < 1e-15);
        let th = PI / 2.0;
        let v = amplitude_v(2, &[c(0.0, th / 2f64.sqrt()), c(0.0, th / 2f64.sqrt())]).unwrap();
        assert!((v - PI / 2.0).norm() < 1e-14);
        let lam = [c(1.0, 0.0), c(1.0, 0.0)];
        let closed = amplitude_v(3, &lam).unwrap();
        let prod = product_form_q(3, quadratic_form(&lam), 1, 10_000);
        assert!((closed - prod).norm() < 1e-4 * closed.norm());
        // Product tail: Σ_{k>K} q/(k²π²) ≈ q/(π²K) per factor; remove it and compare tightly.
        let corr = (-1.5 * 2.0 / (PI2 * 10_000.5)).exp();
        assert!((closed - prod * corr).norm() < 1e-12);
        for n in 1..6 {
            let v = v2_tilde(n, c(0.0, PI)).unwrap();
            assert!((v - 2f64.powf(n as f64 / 2.0)).norm() < 1e-13, "n={n}");
        }
        assert!((amplitude_v2(3, &[c(0.0, 0.0)]).unwrap() - 1.0).norm() < 1e-15);
        assert!(amplitude_v(2, &[c(0.0, PI)]).is_err());
    }

    #[test]
    fn phi_examples_and_closed_form() {
        let mix = Mixing::new(0.3).unwrap();
        let f = ShiftedPhase::new(2.5, mix).unwrap();
        assert!((f.value_q(c(0.0, 0.0)).unwrap() - 2.5 * 0.7).norm() < 1e-15);
        for &q in &[0.7, 3.0, 8.0, 12.0, 20.0, 30.0] {
            let t: f64 = (q as f64).sqrt();
            let naive = t / t.tan() - 0.3 * t / t.sin() + 2.0 * q * 1.3 / (PI2 - q);
            let got = f.phi(c(q, 0.0)).unwrap().re;
            assert!((got - naive).abs() < 1e-11 * (1.0 + naive.abs()), "q={q}");
        }
    }

    #[test]
    fn phi_derivatives_fd() {
        let f = ShiftedPhase::new(1.0, Mixing::new(-0.6).unwrap()).unwrap();
        for &q in &[0.3, 5.0, PI2, 20.0, 33.0] {
            let h = 1e-5 * q.max(1.0);
            let p = |x: f64| f.phi_real(x).unwrap();
            let d1 = (p(q + h).0 - p(q - h).0) / (2.0 * h);
            let d2 = (p(q + h).1 - p(q - h).1) / (2.0 * h);
            let (_, a1, a2) = p(q);
            assert!((d1 - a1).abs() < 1e-7 * (1.0 + a1.abs()), "q={q}: {d1} {a1}");
            assert!((d2 - a2).abs() < 1e-6 * (1.0 + a2.abs()), "q={q}: {d2} {a2}");
        }
    }

    #[test]
    fn grad_and_hess_fd() {
        let f = ShiftedPhase::new(3.0, Mixing::new(0.1).unwrap()).unwrap();
        let th = [1.1, -0.7, 2.0];
        let g = f.grad(&th).unwrap();
        let hs = f.hess(&th).unwrap();
        let val = |v: &[f64]| {
            let z: Vec<C64> = v.iter().map(|&x| c(x, 0.0)).collect();
            f.value(&z).unwrap().re
        };
        let h = 1e-5;
        for i in 0..3 {
            let mut p = th;
            let mut m = th;
            p[i] += h;
            m[i] -= h;
            let fd = (val(&p) - val(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "grad {i}");
            let gp = f.grad(&p).unwrap();
            let gm = f.grad(&m).unwrap();
            for j in 0..3 {
                let fdh = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fdh - hs[(i, j)]).abs() < 1e-6, "hess {i}{j}");
            }
        }
    }

    proptest! {
        #[test]
        fn psi_series_matches_closed(a in -1.0f64..1.0, re in -6.0f64..6.0, im in -3.0f64..3.0) {
            let mix = Mixing::new(a).unwrap();
            let q = c(re, im) * c(re, im);
            prop_assume!((q + PI2).norm() > 0.3 && (q + 4.0 * PI2).norm() > 0.3);
            let s = psi_series_q(mix, q, &SeriesPolicy::default()).unwrap();
            let cl = psi_closed_q(mix, q).unwrap();
            prop_assert!((s - cl).norm() <= 1e-11 * (1.0 + cl.norm()), "{s} vs {cl}");
        }

        #[test]
        fn mu_odd_and_round_trip(a in -1.0f64..=1.0, t in -3.1f64..3.1) {
            let m = Mixing::new(a).unwrap();
            prop_assert_eq!(m.mu(-t).unwrap(), -m.mu(t).unwrap());
            prop_assert!(m.mu_prime(t).unwrap() > 0.0);
            let s = m.mu(t).unwrap();
            if a > -1.0 || s.abs() < PI / 2.0 - 1e-9 {
                let back = mu_inverse(a, s).unwrap();
                prop_assert!((back - t).abs() < 1e-10, "{} vs {}", back, t);
            }
        }

        #[test]
        fn phi_series_matches_closed(a in -1.0f64..=1.0, re in -7.0f64..7.0, im in -5.5f64..5.5) {
            let f = ShiftedPhase::new(1.0, Mixing::new(a).unwrap()).unwrap();
            let q = c(re, im) * c(re, im);
            prop_assume!((q - 4.0 * PI2).norm() > 0.5 && (q - 9.0 * PI2).norm() > 0.5);
            let s = f.phi_series(q).unwrap()[0];
            let d = f.phi(q).unwrap();
            prop_assert!((s - d).norm() <= 1e-10 * (1.0 + d.norm()), "{} vs {}", s, d);
        }

        #[test]
        fn v_vs_v2_relation(n in 1usize..6, re in -5.0f64..5.0, im in -3.0f64..3.0) {
            let q = c(re, im) * c(re, im);
            prop_assume!(q.re > -PI2 + 0.2);
            let v = amplitude_v_q(n, q).unwrap();
            let v2 = amplitude_v2_q(n, q).unwrap();
            let rel = (1.0 + q / PI2).powf(n as f64 / 2.0) * v;
            prop_assert!((v2 - rel).norm() <= 1e-11 * (1.0 + v2.norm()));
        }
    }
}
