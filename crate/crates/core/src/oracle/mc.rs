//! Brute-force quadrature of the unreduced `n'`-dimensional Fourier integral
//!
//! `p₁ = (4π)^{−n/2−n'} ∫_{ℝ^{n'}} V(|λ|) e^{−R²ψ_a(|λ|)/4} cos((u − u')·λ/2) dλ`,
//!
//! in Cartesian coordinates, with no use of the radial symmetry.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::geometry::{reduce_pair, PairGeometry, Point};
use crate::kernel::{dilation_log, EvalResult, Method, Regime};
use crate::quad::gauss_legendre;
use crate::scalar::{log_sinhc_inv_real, psi_real};

/// Largest cancellation exponent accepted by the sampling oracle.
pub const MC_CANCELLATION_BUDGET: f64 = 12.0;

fn integrand(pair: &PairGeometry, lambda: &[f64]) -> f64 {
    let rho = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (psi, _, _) = psi_real(pair.mixing(), rho);
    let expo = 0.5 * pair.n as f64 * log_sinhc_inv_real(rho) - 0.25 * pair.r2_sum * psi;
    let phase: f64 = 0.5 * pair.du.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>();
    expo.exp() * phase.cos()
}

/// `1/(n/2 + R²/4)`, the exponential decay length of the integrand.
fn decay_length(pair: &PairGeometry) -> f64 {
    1.0 / (0.5 * pair.n as f64 + 0.25 * pair.r2_sum)
}

fn prefactor(pair: &PairGeometry) -> f64 {
    (4.0 * PI).powf(-(pair.n as f64 / 2.0 + pair.np as f64))
}

/// `n' = 1`: composite 20-point Gauss–Legendre on `[0, 60·len]`, doubled.
fn tensor_unit(pair: &PairGeometry) -> f64 {
    let len = decay_length(pair);
    let kappa = 0.5 * pair.r;
    let mut w = 0.25 * len;
    if kappa > 0.0 {
        w = w.min(0.5 * PI / kappa);
    }
    let top = 60.0 * len + 40.0;
    let panels = (top / w).ceil() as usize;
    let w = top / panels as f64;
    let (gx, gw) = gauss_legendre(20);
    let mut sum = 0.0;
    for k in 0..panels {
        let a = k as f64 * w;
        for (x, wt) in gx.iter().zip(&gw) {
            sum += wt * 0.5 * w * integrand(pair, &[a + 0.5 * w * (x + 1.0)]);
        }
    }
    2.0 * sum
}

/// Stratified sampling on `[0,1]^{n'}` mapped by `λ = L artanh(2v − 1)`.
/// Returns the estimate and its standard error.
fn stratified_unit(pair: &PairGeometry, samples: usize, seed: u64) -> (f64, f64) {
    let np = pair.np;
    let per_axis = ((samples as f64 / 2.0).powf(1.0 / np as f64).floor() as usize).max(1);
    let cells = per_axis.pow(np as u32);
    let per_cell = (samples / cells).max(2);
    let scale = 2.0 * decay_length(pair);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / per_axis as f64;
    let vol = h.powi(np as i32);
    let (mut total, mut var) = (0.0, 0.0);
    let mut idx = vec![0usize; np];
    let mut lam = vec![0.0; np];
    for _ in 0..cells {
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..per_cell {
            let mut jac = 1.0;
            for d in 0..np {
                let v: f64 = (idx[d] as f64 + rng.gen::<f64>()) * h;
                let z = (2.0 * v - 1.0).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
                lam[d] = scale * z.atanh();
                jac *= 2.0 * scale / (1.0 - z * z);
            }
            let f = integrand(pair, &lam) * jac;
            s1 += f;
            s2 += f * f;
        }
        let m = per_cell as f64;
        let mean = s1 / m;
        let s2c = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
        total += vol * mean;
        var += vol * vol * s2c / m;
        for d in 0..np {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
        }
    }
    (total, var.sqrt())
}

/// `p_h(g, g')` from the unreduced integral.
///
/// For `n' = 1` this is a deterministic tensor rule and `abs_err` is a
/// nominal `1e−12` relative; for `n' ∈ {2, 3}` it is stratified sampling and
/// `abs_err` is one standard error.
pub fn mc_kernel(g: &Point, gp: &Point, h: f64, samples: usize, seed: u64) -> Result<EvalResult> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("h = {h} must be a positive finite number")));
    }
    let pair = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    if pair.np > 3 {
        return Err(precondition("mc_kernel supports n' <= 3"));
    }
    let c = pair.cancellation_exponent(1.0);
    if c > MC_CANCELLATION_BUDGET {
        return Err(precondition(format!(
            "cancellation exponent {c:.3} exceeds the sampling budget {MC_CANCELLATION_BUDGET}"
        )));
    }
    let pref = prefactor(&pair);
    let (value, err) = if pair.np == 1 {
        let v = pref * tensor_unit(&pair);
        (v, 1e-12 * v.abs())
    } else {
        if samples < 8 {
            return Err(invalid("mc_kernel needs at least 8 samples"));
        }
        let (v, se) = stratified_unit(&pair, samples, seed);
        (pref * v, pref * se)
    };
    if !(value > 0.0) || err > 0.5 * value {
        return Err(GrushinError::NonConvergence {
            what: "mc_kernel",
            detail: format!("estimate {value:e} with standard error {err:e}"),
        });
    }
    let log_c = dilation_log(pair.n, pair.np, h);
    Ok(EvalResult::from_value(value, err, 0.25 * pair.d2, Method::Oracle, Regime::of(&pair)).scale_by(log_c))
}
