//! Contour-shifted Laplace representation
//!
//! `p = C(n,n') e^{−d²/4} (1 − |θ|²/π²)^{−n/2} ∫ e^{−|ξ − y_g|²/2} F(ξ) dξ`,
//! `F(ξ) = ∫ V₂(λ + iθ) exp(−S_g(ξ; λ)/4) dλ`.
//!
//! `F` depends on `ξ` through `ρ = |ξ|` only, so the outer integral is radial
//! with a modified-Bessel weight. In `F` the Hessian terms cancel and the
//! integrand depends on `λ` through `(λ_∥, |λ_⊥|)` relative to `θ̂`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{EvalResult, Method, QuadSpec, Regime};
use crate::error::{precondition, GrushinError, Result};
use crate::geometry::{reduce_pair, PairGeometry, Point};
use crate::quad::{gauss_legendre, radial_gaussian, HalfLine, QuadOut};
use crate::scalar::{amplitude_v2_q, log_v2, quadratic_form, ShiftedPhase, C64};
use crate::special::sphere_area;

/// Gate of the leading-order `F` approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FGate {
    pub varpi0: f64,
    pub lambda_threshold: f64,
}

impl Default for FGate {
    fn default() -> Self {
        Self { varpi0: 1.0, lambda_threshold: 100.0 }
    }
}

/// Value of `F` with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub value: f64,
    pub abs_err: f64,
}

/// Everything the transformed representation needs about a pair.
#[derive(Debug, Clone)]
pub struct TransformedContext {
    pub pair: PairGeometry,
    pub phase: ShiftedPhase,
    /// `|θ|`.
    pub t: f64,
    /// `π² − |θ|² = ε(2π − ε)`.
    pub denom: f64,
    pub y: f64,
    phi0: f64,
    /// `∇f(θ) = grad_f · θ̂`.
    pub grad_f: f64,
    /// Eigenvalues of `Hess_θ f`: along `θ̂` and transverse.
    pub hess_par: f64,
    pub hess_perp: f64,
    /// `V₂(iθ)`.
    pub v2_itheta: f64,
    /// `V(iθ) = (π²/denom)^{n/2} V₂(iθ)`.
    pub v_itheta: f64,
    pub c_nnp: f64,
    pub c_tilde: f64,
}

impl TransformedContext {
    pub fn new(pair: &PairGeometry) -> Result<Self> {
        if !pair.satisfies_an() {
            return Err(precondition("transformed representation needs x + x' != 0 and eps > 0"));
        }
        let phase = ShiftedPhase::new(pair.r2_sum, pair.mixing())?;
        let t = pair.theta_norm;
        let eps = pair.eps;
        let denom = eps * (2.0 * PI - eps);
        let (phi0, d1, d2) = phase.phi_real(t * t)?;
        let r2 = pair.r2_sum;
        let (n, np) = (pair.n as f64, pair.np as f64);
        let v2 = amplitude_v2_q(pair.n, C64::new(-t * t, 0.0))?.re;
        let c_nnp = 1.0 / ((2.0 * PI).powf(n / 2.0) * (4.0 * PI).powf(np + n / 2.0));
        Ok(Self {
            pair: pair.clone(),
            phase,
            t,
            denom,
            y: pair.y2.sqrt(),
            phi0,
            grad_f: 2.0 * r2 * d1 * t,
            hess_par: r2 * (2.0 * d1 + 4.0 * t * t * d2),
            hess_perp: 2.0 * r2 * d1,
            v2_itheta: v2,
            v_itheta: (PI * PI / denom).powf(n / 2.0) * v2,
            c_nnp,
            c_tilde: (2.0 * PI).powf(np / 2.0) * c_nnp,
        })
    }

    pub fn from_points(g: &Point, gp: &Point) -> Result<Self> {
        Self::new(&reduce_pair(g, gp)?)
    }

    fn theta_hat(&self) -> Vec<f64> {
        if self.t > 0.0 {
            self.pair.theta.iter().map(|v| v / self.t).collect()
        } else {
            let mut e = vec![0.0; self.pair.np];
            e[0] = 1.0;
            e
        }
    }

    /// Scalar `w` with `W_g(ξ) = w θ̂`, `|ξ| = ρ`.
    pub fn w(&self, rho: f64) -> f64 {
        (self.y - rho) * (self.y + rho) * self.t / self.denom
    }

    pub fn w_vec(&self, rho: f64) -> Vec<f64> {
        let w = self.w(rho);
        self.pair.theta.iter().map(|v| if self.t > 0.0 { w * v / self.t } else { 0.0 }).collect()
    }

    /// Eigenvalues `(α_∥, α_⊥)` of `𝔸_g(ξ)`.
    pub fn alpha(&self, rho: f64) -> (f64, f64) {
        let base = rho * rho / self.denom;
        (base - 0.25 * self.hess_par, base - 0.25 * self.hess_perp)
    }

    /// `𝔸_g(ξ)` assembled from the phase Hessian.
    pub fn a_matrix(&self, rho: f64) -> Result<DMatrix<f64>> {
        let hs = self.phase.hess(&self.pair.theta)?;
        let m = self.pair.np;
        Ok(DMatrix::identity(m, m) * (rho * rho / self.denom) - hs * 0.25)
    }

    pub fn det_a(&self, rho: f64) -> f64 {
        let (ap, aq) = self.alpha(rho);
        ap * aq.powi(self.pair.np as i32 - 1)
    }

    /// `E_g(ξ) = W_gᵀ 𝔸_g⁻¹ W_g`.
    pub fn e_g(&self, rho: f64) -> f64 {
        let w = self.w(rho);
        if self.t == 0.0 {
            return 0.0;
        }
        w * w / self.alpha(rho).0
    }

    /// `Λ_g(ξ) = R² + |ξ|²/ε`.
    pub fn lambda_g(&self, rho: f64) -> f64 {
        self.pair.r2_sum + rho * rho / self.pair.eps
    }

    /// `S_g(λ)` at a real vector `λ`, straight from its definition.
    pub fn s_g(&self, lambda: &[f64]) -> Result<C64> {
        let th = &self.pair.theta;
        let z: Vec<C64> = th.iter().zip(lambda).map(|(a, b)| C64::new(*a, -*b)).collect();
        let f1 = self.phase.value(&z)?;
        let f0 = self.phase.value_q(C64::new(self.t * self.t, 0.0))?;
        let grad = self.phase.grad(th)?;
        let hs = self.phase.hess(th)?;
        let lv = nalgebra::DVector::from_column_slice(lambda);
        let quad = (lv.transpose() * &hs * &lv)[(0, 0)];
        let lin: f64 = lambda.iter().zip(&grad).map(|(a, b)| a * b).sum();
        Ok(f1 - f0 + C64::new(0.0, lin) + 0.5 * quad)
    }

    /// `S_g(ξ; λ) = S_g(λ) + 2λᵀ𝔸λ − 4iλ·W`.
    pub fn s_g_xi(&self, rho: f64, lambda: &[f64]) -> Result<C64> {
        let a = self.a_matrix(rho)?;
        let lv = nalgebra::DVector::from_column_slice(lambda);
        let quad = (lv.transpose() * &a * &lv)[(0, 0)];
        let w = self.w_vec(rho);
        let lw: f64 = lambda.iter().zip(&w).map(|(a, b)| a * b).sum();
        Ok(self.s_g(lambda)? + 2.0 * quad - C64::new(0.0, 4.0 * lw))
    }

    /// The `F` integrand `V₂(λ + iθ) e^{−S_g(ξ;λ)/4}` at `λ = λ_∥ θ̂ + λ_⊥`.
    pub fn integrand(&self, rho: f64, lpar: f64, lperp: f64) -> Result<C64> {
        let t = self.t;
        let l2 = lpar * lpar + lperp * lperp;
        let q = C64::new(l2 - t * t, 2.0 * lpar * t);
        let lv2 = log_v2(q)?;
        let phi = self.phase.phi(-q)?;
        let r2 = self.pair.r2_sum;
        let n = self.pair.n as f64;
        let expo = 0.5 * n * lv2 - 0.25 * r2 * (phi - self.phi0) - C64::new(0.0, 0.25 * lpar * self.grad_f)
            - rho * rho * l2 / (2.0 * self.denom)
            + C64::new(0.0, lpar * self.w(rho));
        Ok(expo.exp())
    }

    /// Scale of `F` near `|ξ| = |y_g|`, used for absolute tolerances.
    fn f_scale(&self, rho: f64) -> f64 {
        (2.0 * PI).powf(self.pair.np as f64 / 2.0) * self.v2_itheta / self.det_a(rho).sqrt()
    }

    /// `F(g, g'; ξ)` at `|ξ| = ρ` by quadrature in `(λ_∥, |λ_⊥|)`.
    pub fn f_eval(&self, rho: f64, spec: &QuadSpec) -> Result<FValue> {
        let (ap, aq) = self.alpha(rho);
        if !(ap > 0.0 && aq > 0.0) {
            return Err(GrushinError::NonConvergence { what: "F_eval", detail: format!("A not positive: {ap}, {aq}") });
        }
        let sig_par = (1.0 / ap.sqrt()).min(1.0);
        let sig_perp = (1.0 / aq.sqrt()).min(1.0);
        let w = self.w(rho).abs();
        let reach = (2.0 * spec.trunc_radius).sqrt();
        let mut hl = HalfLine::new(spec.rule, spec.rel_tol);
        let half_wave = if w > 0.0 { PI / w } else { f64::INFINITY };
        hl.width = 0.5 * sig_par.min(half_wave);
        hl.max_width = (4.0 * sig_par).min(half_wave);
        hl.growth = 1.5;
        hl.min_radius = reach * sig_par;
        hl.max_segments = spec.max_refine;
        // Below |y_g| the local scale overstates F, which is tiny there; the
        // peak scale keeps the noise under the outer tolerance.
        hl.abs_tol = 1e-3 * spec.rel_tol * self.f_scale(rho).min(self.f_scale(self.y)) / sig_par;
        let mut failure: Option<GrushinError> = None;
        let np = self.pair.np;
        let out: QuadOut = if np == 1 {
            hl.integrate(0.0, |lp| match self.integrand(rho, lp, 0.0) {
                Ok(v) => 2.0 * v.re,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            })
        } else {
            // The transverse direction does not oscillate, but V₂ has complex
            // singularities at distance √(π² − |θ|²) from λ = 0. Panels are graded
            // geometrically from that scale, each with a fixed Gauss–Legendre rule.
            let order = if spec.rel_tol >= 1e-7 {
                8
            } else if spec.rel_tol >= 1e-11 {
                12
            } else {
                20
            };
            let len = 1.0 / (0.5 * self.pair.n as f64 + 0.25 * self.pair.r2_sum);
            let top = (reach / aq.sqrt()).min(spec.trunc_radius * len).max(reach * sig_perp);
            let (gx, gw) = gauss_legendre(order);
            let mut nodes: Vec<(f64, f64)> = Vec::new();
            let mut a = 0.0;
            let mut b = (0.5 * self.denom.sqrt()).min(sig_perp).min(top);
            while a < top {
                for (x, wt) in gx.iter().zip(&gw) {
                    nodes.push((a + 0.5 * (b - a) * (x + 1.0), 0.5 * (b - a) * wt));
                }
                a = b;
                b = (2.0 * b).min(top);
            }
            let area = sphere_area(np - 1);
            let pw = np as i32 - 2;
            hl.integrate(0.0, |lp| {
                let mut s = 0.0;
                for &(lq, wt) in &nodes {
                    match self.integrand(rho, lp, lq) {
                        Ok(v) => s += wt * lq.powi(pw) * v.re,
                        Err(e) => {
                            failure.get_or_insert(e);
                        }
                    }
                }
                2.0 * area * s
            })
        };
        if let Some(e) = failure {
            return Err(e);
        }
        if !out.converged {
            return Err(GrushinError::NonConvergence {
                what: "F_eval",
                detail: format!("rho = {rho}: {:e} +- {:e}", out.value, out.abs_err),
            });
        }
        Ok(FValue { value: out.value, abs_err: out.abs_err + 1e-16 * out.abs_mass })
    }

    /// `(2π)^{n'/2} V₂(iθ) e^{−E/2} / √det 𝔸`, subject to the gate.
    pub fn f_asymptotic(&self, rho: f64, gate: &FGate) -> Result<f64> {
        let lam = self.lambda_g(rho);
        let e = self.e_g(rho);
        if lam < gate.lambda_threshold || e > gate.varpi0 * lam.powf(0.25) {
            return Err(precondition(format!(
                "F asymptotic gate violated: Lambda = {lam:.4}, E = {e:.4}"
            )));
        }
        Ok(self.f_leading(rho))
    }

    /// The leading term without the gate.
    pub fn f_leading(&self, rho: f64) -> f64 {
        self.f_scale(rho) * (-0.5 * self.e_g(rho)).exp()
    }

    /// `C exp(−c |W| (Λ + 1)^{−1/2})`.
    pub fn f_upper(&self, rho: f64, big_c: f64, c: f64) -> f64 {
        big_c * (-c * self.w(rho).abs() / (self.lambda_g(rho) + 1.0).sqrt()).exp()
    }

    /// Radial outer integral `∫ e^{−|ξ − y_g|²/2} g(|ξ|) dξ` over `ℝⁿ`.
    ///
    /// Breakpoints cluster around `|ξ| = |y_g|`, where `F` varies on the scale
    /// set by `E_g ~ 1`, which can be much narrower than the Gaussian.
    pub fn outer_integral<G: FnMut(f64) -> f64>(&self, spec: &QuadSpec, g: G) -> QuadOut {
        let y = self.y;
        let s = if self.t > 0.0 && y > 0.0 {
            let (ap, _) = self.alpha(y);
            ap.sqrt() * self.denom / (2.0 * y * self.t)
        } else {
            1.0
        };
        radial_gaussian(self.pair.n, y, s, spec.rel_tol, 50 * spec.max_refine, g)
    }

    /// `p e^{d²/4}` with its error estimate.
    pub fn scaled_kernel(&self, spec: &QuadSpec) -> Result<(f64, f64)> {
        let mut failure: Option<GrushinError> = None;
        let mut worst_err = 0.0f64;
        let out = self.outer_integral(spec, |rho| match self.f_eval(rho, spec) {
            Ok(f) => {
                worst_err = worst_err.max(f.abs_err);
                f.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if !out.converged {
            return Err(GrushinError::NonConvergence {
                what: "kernel_transformed",
                detail: format!("outer integral {:e} +- {:e}", out.value, out.abs_err),
            });
        }
        let weight_mass = self.outer_integral(spec, |_| 1.0).value;
        let pref = self.c_nnp * (PI * PI / self.denom).powf(self.pair.n as f64 / 2.0);
        Ok((pref * out.value, pref * (out.abs_err + worst_err * weight_mass)))
    }

    /// `V₂(λ + iθ)` through the complex quadratic form.
    pub fn v2_shifted(&self, lambda: &[f64]) -> Result<C64> {
        let z: Vec<C64> = lambda.iter().zip(&self.pair.theta).map(|(l, t)| C64::new(*l, *t)).collect();
        amplitude_v2_q(self.pair.n, quadratic_form(&z))
    }

    pub fn theta_direction(&self) -> Vec<f64> {
        self.theta_hat()
    }
}

pub(crate) fn kernel_transformed_unit(pair: &PairGeometry, spec: &QuadSpec) -> Result<EvalResult> {
    spec.validate()?;
    let ctx = TransformedContext::new(pair)?;
    let (scaled, err) = ctx.scaled_kernel(spec)?;
    if !(scaled > 0.0) {
        return Err(GrushinError::NonConvergence {
            what: "kernel_transformed",
            detail: format!("non-positive value {scaled:e}"),
        });
    }
    Ok(EvalResult::from_scaled(scaled, err, 0.25 * pair.d2, Method::Transformed, Regime::of(pair)))
}

/// Unit-time kernel by the transformed representation.
pub fn kernel_transformed(g: &Point, gp: &Point, spec: &QuadSpec) -> Result<EvalResult> {
    kernel_transformed_unit(&reduce_pair(g, gp)?, spec)
}


#[cfg(test)]
mod difficult {
    use super::*;
    use crate::kernel::kernel_direct_unit;

    /// Pair with prescribed `x, x'` and `|u − u'|` chosen so that `ε ≈ target`.
    pub(crate) fn with_eps(x: Vec<f64>, xp: Vec<f64>, np: usize, target: f64) -> PairGeometry {
        let mk = |r: f64| {
            let mut u = vec![0.0; np];
            u[0] = r;
            reduce_pair(&Point::new(x.clone(), u).unwrap(), &Point::new(xp.clone(), vec![0.0; np]).unwrap()).unwrap()
        };
        let (mut lo, mut hi) = (1e-9f64, 1e6f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mk(mid).eps > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mk(lo)
    }

    #[test]
    fn small_eps_cases() {
        let spec = QuadSpec::default();
        for (x, xp, np, e) in [
            (vec![1.0], vec![1.0], 1, 0.3),
            (vec![1.0], vec![0.5], 1, 0.1),
            (vec![0.5, 0.2], vec![-0.4, 0.1], 1, 0.2),
            (vec![0.8], vec![0.6], 2, 0.2),
            (vec![1.0, 0.0], vec![-0.9, 0.05], 2, 0.3),
        ] {
            let p = with_eps(x, xp, np, e);
            let d = kernel_direct_unit(&p, &spec);
            let tr = kernel_transformed_unit(&p, &spec);
            let t = tr.unwrap();
            if let Ok(d) = d {
                assert!((t.value / d.value - 1.0).abs() < 1e-9);
            }
            assert!(t.rel_err() < 1e-8);
        }
    }
}
