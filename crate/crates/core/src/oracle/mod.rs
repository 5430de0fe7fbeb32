//! Reference solvers used to validate the kernel evaluators.
//!
//! None of them shares code with the evaluators beyond the scalar special
//! functions: the PDE solver discretises the operator itself, the quadrature
//! oracle integrates the unreduced Fourier formula, and the semigroup check
//! only calls [`crate::kernel::kernel`].

mod mc;
mod pde;

pub use mc::{mc_kernel, MC_CANCELLATION_BUDGET};
pub use pde::{pde_kernel, pde_solve, GridSpec, PdeSolution};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, GrushinError, Result};
use crate::geometry::{reduce_pair, Point};
use crate::kernel::{kernel, QuadSpec};
use crate::quad::gauss_legendre;

/// Central differences of `p_h(·, g')` along `X_j = ∂_{x_j}` and
/// `U_{jk} = x_j ∂_{u_k}`, laid out like [`crate::kernel::grad_kernel`].
///
/// Three step sizes `s, s/2, s/4` are used; the last two are combined by
/// Richardson extrapolation. If the `s/2 → s/4` change is larger than the
/// `s → s/2` change, rounding dominates and the step is rejected. A step
/// whose predicted rounding error, `rel_tol · p / (s/4)`, exceeds `1e-4 p`
/// per unit length is rejected up front.
pub fn fd_gradient(g: &Point, gp: &Point, h: f64, step: f64) -> Result<Vec<f64>> {
    fd_gradient_with(g, gp, h, step, &QuadSpec::with_tol(1e-13))
}

pub fn fd_gradient_with(g: &Point, gp: &Point, h: f64, step: f64, spec: &QuadSpec) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("finite-difference step must be positive"));
    }
    let (n, np) = (g.n(), g.np());
    let eval = |p: &Point| kernel(p, gp, h, spec).map(|r| r.value);
    let scale = eval(g)?.abs();
    // Central difference of p along coordinate `c` (x first, then u).
    let central = |c: usize, s: f64| -> Result<f64> {
        let mut a = g.clone();
        let mut b = g.clone();
        if c < n {
            a.x[c] += s;
            b.x[c] -= s;
        } else {
            a.u[c - n] += s;
            b.u[c - n] -= s;
        }
        Ok((eval(&a)? - eval(&b)?) / (2.0 * s))
    };
    let mut partial = Vec::with_capacity(n + np);
    for c in 0..n + np {
        let len = if c < n { h.sqrt() } else { h };
        let s = step * len;
        if spec.rel_tol * scale / (0.25 * s) > 1e-4 * scale / len {
            return Err(precondition(format!("finite-difference step {step} is lost in quadrature rounding")));
        }
        let d1 = central(c, s)?;
        let d2 = central(c, 0.5 * s)?;
        let d4 = central(c, 0.25 * s)?;
        let (e1, e2) = ((d1 - d2).abs(), (d2 - d4).abs());
        let floor = 1e-9 * scale / len;
        if e2 > e1 && e2 > floor {
            return Err(precondition(format!(
                "finite-difference step {step} too small: halving changes grow ({e1:e} -> {e2:e})"
            )));
        }
        partial.push((4.0 * d4 - d2) / 3.0);
    }
    let mut out = partial[..n].to_vec();
    for j in 0..n {
        for k in 0..np {
            out.push(g.x[j] * partial[n + k]);
        }
    }
    Ok(out)
}

/// Tensor Gauss–Legendre rule on `[−half_x, half_x] × [−half_u, half_u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub half_x: f64,
    pub half_u: f64,
    pub panels_x: usize,
    pub panels_u: usize,
    /// Nodes per panel.
    pub order: usize,
}

impl Default for QuadGrid {
    fn default() -> Self {
        Self { half_x: 6.0, half_u: 8.0, panels_x: 12, panels_u: 16, order: 8 }
    }
}

impl QuadGrid {
    fn axis(half: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
        let (gx, gw) = gauss_legendre(order);
        let w = 2.0 * half / panels as f64;
        let mut out = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = -half + p as f64 * w;
            for (x, wt) in gx.iter().zip(&gw) {
                out.push((a + 0.5 * w * (x + 1.0), 0.5 * w * wt));
            }
        }
        out
    }
}

/// Mass below which the truncated convolution is rejected.
const MIN_SEMIGROUP_MASS: f64 = 0.99;

/// `| ∫ p_h(g, g') p_h(g', g'') dg' / p_{2h}(g, g'') − 1 |` over the
/// truncated box, `n = n' = 1`.
pub fn semigroup_residual(g: &Point, gpp: &Point, h: f64, grid: &QuadGrid) -> Result<f64> {
    if g.n() != 1 || g.np() != 1 || gpp.n() != 1 || gpp.np() != 1 {
        return Err(precondition("semigroup_residual is implemented for n = n' = 1"));
    }
    if grid.panels_x == 0 || grid.panels_u == 0 || grid.order == 0 || !(grid.half_x > 0.0 && grid.half_u > 0.0) {
        return Err(invalid("empty quadrature grid"));
    }
    let spec = QuadSpec::with_tol(1e-9);
    let value = |a: &Point, b: &Point| -> Result<f64> {
        match kernel(a, b, h, &spec) {
            Ok(r) => Ok(r.value),
            // Far out the kernel is below e^{−40} and irrelevant for a 1% check.
            Err(e) => match reduce_pair(&a.dilate(h), &b.dilate(h)) {
                Ok(p) if 0.25 * p.d2 > 40.0 => Ok(0.0),
                _ => Err(e),
            },
        }
    };
    let xs = QuadGrid::axis(grid.half_x, grid.panels_x, grid.order);
    let us = QuadGrid::axis(grid.half_u, grid.panels_u, grid.order);
    let (mut conv, mut mass_a, mut mass_b) = (0.0, 0.0, 0.0);
    for &(x, wx) in &xs {
        for &(u, wu) in &us {
            let mid = Point { x: vec![x], u: vec![u] };
            let a = value(g, &mid)?;
            let b = value(&mid, gpp)?;
            conv += wx * wu * a * b;
            mass_a += wx * wu * a;
            mass_b += wx * wu * b;
        }
    }
    let mass = mass_a.min(mass_b);
    if mass < MIN_SEMIGROUP_MASS {
        return Err(precondition(format!("truncated domain keeps only {:.4} of the mass", mass)));
    }
    let target = kernel(g, gpp, 2.0 * h, &spec)?.value;
    if !(target > 0.0) {
        return Err(GrushinError::NonConvergence { what: "semigroup_residual", detail: "p_{2h} underflows".into() });
    }
    Ok((conv / target - 1.0).abs())
}
