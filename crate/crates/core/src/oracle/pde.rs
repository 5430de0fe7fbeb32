//! Finite-difference solution of `∂_h p = ∂²_x p + x² ∂²_u p` for `n = n' = 1`.
//!
//! Peaceman–Rachford splitting in `x` and `u`, zero Dirichlet data on the box,
//! a normalised Gaussian of width `σ₀` as initial datum, started at time
//! `σ₀²/2` (the time at which the Euclidean kernel has that width).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::geometry::{reduce_pair, Point};
use crate::kernel::{EvalResult, Method, Regime};

/// Uniform grid on `[−half_x, half_x] × [−half_u, half_u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_x: f64,
    pub half_u: f64,
    /// Nodes per axis, boundary included.
    pub nx: usize,
    pub nu: usize,
    pub dt: f64,
    /// Width of the initial bump in `x`; in `u` it is `σ₀ du/dx`, the same
    /// number of grid cells.
    pub sigma0: f64,
}

impl GridSpec {
    /// Default grid for `p_h(g, g')`: the boundary sits at least
    /// `6√h (1 + |x|_max)` beyond both points in `x` and `4h (1 + (1 + |x|_max)²)`
    /// in `u`; spacings `0.1√h` and `0.04h`.
    pub fn default_for(g: &Point, gp: &Point, h: f64) -> Self {
        let xm = g.x[0].abs().max(gp.x[0].abs());
        let um = g.u[0].abs().max(gp.u[0].abs());
        let half_x = xm + 6.0 * h.sqrt() * (1.0 + xm);
        let half_u = um + 4.0 * h * (1.0 + (1.0 + xm).powi(2));
        Self::with_spacing(half_x, half_u, 0.1 * h.sqrt(), 0.04 * h, h / 100.0)
    }

    /// Node counts rounded up from target spacings; `σ₀` is twice the
    /// resulting `x` spacing.
    pub fn with_spacing(half_x: f64, half_u: f64, dx: f64, du: f64, dt: f64) -> Self {
        let nx = (2.0 * half_x / dx).ceil() as usize + 1;
        let nu = (2.0 * half_u / du).ceil() as usize + 1;
        let dx = 2.0 * half_x / (nx - 1) as f64;
        Self { half_x, half_u, nx, nu, dt, sigma0: 2.0 * dx }
    }

    /// Halves the spacing, the time step and `σ₀`.
    pub fn refined(&self) -> Self {
        Self { nx: 2 * self.nx - 1, nu: 2 * self.nu - 1, dt: 0.5 * self.dt, sigma0: 0.5 * self.sigma0, ..*self }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_x / (self.nx - 1) as f64
    }

    pub fn du(&self) -> f64 {
        2.0 * self.half_u / (self.nu - 1) as f64
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.half_x > 0.0 && self.half_u > 0.0 && self.dt > 0.0 && self.sigma0 > 0.0) || self.nx < 5 || self.nu < 5 {
            return Err(invalid("grid needs positive half-widths, dt, sigma0 and at least 5 nodes per axis"));
        }
        if self.sigma0 < 2.0 * self.dx() * (1.0 - 1e-12) {
            return Err(invalid(format!("sigma0 = {} is below twice the spacing", self.sigma0)));
        }
        let t0 = 0.5 * self.sigma0 * self.sigma0;
        if !(h - t0 >= 10.0 * self.dt) {
            return Err(precondition(format!("h = {h} leaves fewer than 10 steps after the start time {t0}")));
        }
        Ok(())
    }

    fn contains(&self, p: &Point, margin: f64) -> bool {
        p.x[0].abs() + margin <= self.half_x && p.u[0].abs() + margin <= self.half_u
    }
}

/// Grid values at the terminal time, row-major in `(x, u)`.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Discrete integral at the start and at the end.
    pub mass_initial: f64,
    pub mass_final: f64,
}

impl PdeSolution {
    fn x(&self, i: usize) -> f64 {
        -self.grid.half_x + i as f64 * self.grid.dx()
    }

    fn u(&self, j: usize) -> f64 {
        -self.grid.half_u + j as f64 * self.grid.du()
    }

    /// Bilinear interpolation at `g`.
    pub fn value_at(&self, g: &Point) -> f64 {
        let gr = &self.grid;
        let fx = ((g.x[0] + gr.half_x) / gr.dx()).clamp(0.0, (gr.nx - 1) as f64);
        let fu = ((g.u[0] + gr.half_u) / gr.du()).clamp(0.0, (gr.nu - 1) as f64);
        let (i, j) = ((fx.floor() as usize).min(gr.nx - 2), (fu.floor() as usize).min(gr.nu - 2));
        let (tx, tu) = (fx - i as f64, fu - j as f64);
        let v = |a: usize, b: usize| self.values[a * gr.nu + b];
        (1.0 - tx) * ((1.0 - tu) * v(i, j) + tu * v(i, j + 1)) + tx * ((1.0 - tu) * v(i + 1, j) + tu * v(i + 1, j + 1))
    }

    /// `x,u,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,u,value")?;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nu {
                writeln!(w, "{},{},{:e}", self.x(i), self.u(j), self.values[i * self.grid.nu + j])?;
            }
        }
        Ok(())
    }
}

/// Solves `T x = d` for tridiagonal `T` with constant off-diagonal `off` and
/// diagonal `diag`; `scratch` has the length of `d`.
fn thomas(diag: &[f64], off: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    let mut b = diag[0];
    d[0] /= b;
    for k in 1..n {
        scratch[k] = off[k - 1] / b;
        b = diag[k] - off[k - 1] * scratch[k];
        d[k] = (d[k] - off[k - 1] * d[k - 1]) / b;
    }
    for k in (0..n - 1).rev() {
        d[k] -= scratch[k + 1] * d[k + 1];
    }
}

struct Solver {
    nx: usize,
    nu: usize,
    /// `1/dx²` and `x_i²/du²` per row.
    cx: f64,
    cu: Vec<f64>,
}

impl Solver {
    /// `(I − τA_x) U = rhs` along every `u`-column, interior nodes only.
    fn implicit_x(&self, tau: f64, u: &mut [f64]) {
        let m = self.nx - 2;
        let diag = vec![1.0 + 2.0 * tau * self.cx; m];
        let off = vec![-tau * self.cx; m];
        let (mut col, mut s) = (vec![0.0; m], vec![0.0; m]);
        for j in 1..self.nu - 1 {
            for i in 0..m {
                col[i] = u[(i + 1) * self.nu + j];
            }
            thomas(&diag, &off, &mut col, &mut s);
            for i in 0..m {
                u[(i + 1) * self.nu + j] = col[i];
            }
        }
    }

    /// `(I − τA_u) U = rhs` along every `x`-row.
    fn implicit_u(&self, tau: f64, u: &mut [f64]) {
        let m = self.nu - 2;
        let (mut diag, mut off, mut s) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 1..self.nx - 1 {
            let c = tau * self.cu[i];
            diag.iter_mut().for_each(|v| *v = 1.0 + 2.0 * c);
            off.iter_mut().for_each(|v| *v = -c);
            let row = &mut u[i * self.nu + 1..(i + 1) * self.nu - 1];
            thomas(&diag, &off, row, &mut s);
        }
    }

    /// `out = (I + τA_x) U`.
    fn explicit_x(&self, tau: f64, u: &[f64], out: &mut [f64]) {
        let nu = self.nu;
        for i in 1..self.nx - 1 {
            for j in 1..nu - 1 {
                let k = i * nu + j;
                out[k] = u[k] + tau * self.cx * (u[k + nu] - 2.0 * u[k] + u[k - nu]);
            }
        }
    }

    /// `out = (I + τA_u) U`.
    fn explicit_u(&self, tau: f64, u: &[f64], out: &mut [f64]) {
        let nu = self.nu;
        for i in 1..self.nx - 1 {
            let c = tau * self.cu[i];
            for j in 1..nu - 1 {
                let k = i * nu + j;
                out[k] = u[k] + c * (u[k + 1] - 2.0 * u[k] + u[k - 1]);
            }
        }
    }
}

/// Number of leading steps replaced by pairs of split implicit-Euler half steps.
const RANNACHER_STEPS: usize = 2;

/// Evolves the Gaussian bump at `source` to time `h`.
pub fn pde_solve(source: &Point, h: f64, grid: &GridSpec) -> Result<PdeSolution> {
    if source.n() != 1 || source.np() != 1 {
        return Err(precondition("the PDE oracle is implemented for n = n' = 1"));
    }
    grid.validate(h)?;
    let (dx, du) = (grid.dx(), grid.du());
    if !grid.contains(source, 3.0 * grid.sigma0 * (1.0 + du / dx)) {
        return Err(precondition("source too close to the truncated domain's boundary"));
    }
    let (nx, nu) = (grid.nx, grid.nu);
    let xs: Vec<f64> = (0..nx).map(|i| -grid.half_x + i as f64 * dx).collect();
    let us: Vec<f64> = (0..nu).map(|j| -grid.half_u + j as f64 * du).collect();
    let mut u = vec![0.0; nx * nu];
    let s2 = grid.sigma0 * grid.sigma0;
    let su2 = s2 * (du / dx).powi(2);
    for i in 1..nx - 1 {
        for j in 1..nu - 1 {
            let q = (xs[i] - source.x[0]).powi(2) / s2 + (us[j] - source.u[0]).powi(2) / su2;
            u[i * nu + j] = (-0.5 * q).exp();
        }
    }
    let mass = |v: &[f64]| v.iter().sum::<f64>() * dx * du;
    let m0 = mass(&u);
    u.iter_mut().for_each(|v| *v /= m0);

    let solver = Solver { nx, nu, cx: 1.0 / (dx * dx), cu: xs.iter().map(|x| x * x / (du * du)).collect() };
    let span = h - 0.5 * s2;
    let steps = (span / grid.dt).ceil() as usize;
    let k = span / steps as f64;
    let mut tmp = vec![0.0; nx * nu];
    for step in 0..steps {
        if step < RANNACHER_STEPS {
            for _ in 0..2 {
                solver.implicit_u(0.5 * k, &mut u);
                solver.implicit_x(0.5 * k, &mut u);
            }
            continue;
        }
        solver.explicit_u(0.5 * k, &u, &mut tmp);
        solver.implicit_x(0.5 * k, &mut tmp);
        solver.explicit_x(0.5 * k, &tmp, &mut u);
        solver.implicit_u(0.5 * k, &mut u);
    }
    let mass_final = mass(&u);
    Ok(PdeSolution { grid: *grid, values: u, mass_initial: 1.0, mass_final })
}

/// `p_h(g, g')` on `grid`; the error estimate compares with one uniform
/// refinement, assuming second-order convergence.
pub fn pde_kernel(g: &Point, gp: &Point, h: f64, grid: &GridSpec) -> Result<EvalResult> {
    if g.n() != 1 || g.np() != 1 {
        return Err(precondition("the PDE oracle is implemented for n = n' = 1"));
    }
    if !grid.contains(g, 4.0 * h.sqrt()) || !grid.contains(gp, 4.0 * h.sqrt()) {
        return Err(precondition("points must sit well inside the truncated domain"));
    }
    let coarse = pde_solve(gp, h, grid)?;
    let fine = pde_solve(gp, h, &grid.refined())?;
    let (vc, vf) = (coarse.value_at(g), fine.value_at(g));
    let err = (4.0 / 3.0) * (vc - vf).abs();
    let pair = reduce_pair(&g.dilate(h), &gp.dilate(h))?;
    Ok(EvalResult::from_value(vc, err, 0.25 * pair.d2, Method::Oracle, Regime::of(&pair)))
}
