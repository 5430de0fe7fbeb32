//! Pair invariants and the Carnot–Carathéodory distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GrushinError, Result};
use crate::scalar::Mixing;

/// A configuration `g = (x, u) ∈ ℝⁿ × ℝ^{n'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.is_empty() || u.is_empty() {
            return Err(invalid("points need n >= 1 and n' >= 1"));
        }
        if x.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Self { x, u })
    }

    pub fn origin(n: usize, np: usize) -> Self {
        Self { x: vec![0.0; n], u: vec![0.0; np] }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn np(&self) -> usize {
        self.u.len()
    }

    /// `(x/√h, u/h)`, the point seen at unit time.
    pub fn dilate(&self, h: f64) -> Self {
        let s = h.sqrt();
        Self { x: self.x.iter().map(|v| v / s).collect(), u: self.u.iter().map(|v| v / h).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `x = −x'` and `2r ≥ π|x|²`: `d² = 2πr`, saddle on `|θ| = π`.
    Vertical,
    Generic,
    Coincident,
}

/// Reduced invariants of a pair `(g, g')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGeometry {
    pub n: usize,
    pub np: usize,
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    /// `u − u'`.
    pub du: Vec<f64>,
    pub r2_sum: f64,
    pub a: f64,
    /// `|x + x'|²/R²`, exact where `a` would round.
    pub one_plus_a: f64,
    /// `|x − x'|²/R²`.
    pub one_minus_a: f64,
    pub x_g: Vec<f64>,
    pub r: f64,
    pub theta: Vec<f64>,
    pub theta_norm: f64,
    pub eps: f64,
    pub y_g: Vec<f64>,
    /// `|y_g|²`, finite whenever `ε > 0`.
    pub y2: f64,
    pub beta: f64,
    pub d2: f64,
    pub branch: Branch,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

impl PairGeometry {
    pub fn mixing(&self) -> Mixing {
        Mixing { a: self.a, one_plus_a: self.one_plus_a }
    }

    pub fn d(&self) -> f64 {
        self.d2.sqrt()
    }

    /// `|x − x'|²`, the peak exponent of the direct integrand.
    pub fn euclid2(&self) -> f64 {
        self.x.iter().zip(&self.xp).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// `(d² − R²(1 − a)) / (4h)`.
    pub fn cancellation_exponent(&self, h: f64) -> f64 {
        (self.d2 - self.euclid2()).max(0.0) / (4.0 * h)
    }

    /// Assumption (AN): `x_g ≠ 0` and `ε > 0`.
    pub fn satisfies_an(&self) -> bool {
        self.one_plus_a > 0.0 && self.r2_sum > 0.0 && self.eps > 0.0
    }

    /// `d² ε² / (R² (1 + a + ε²))`, bounded above and below in the difficult regime.
    pub fn comparability_ratio(&self) -> f64 {
        self.d2 * self.eps * self.eps / (self.r2_sum * (self.one_plus_a + self.eps * self.eps))
    }
}

/// Reduces `(g, g')` to its invariants.
pub fn reduce_pair(g: &Point, gp: &Point) -> Result<PairGeometry> {
    let (n, np) = (g.n(), g.np());
    if gp.n() != n || gp.np() != np {
        return Err(GrushinError::DimensionMismatch(format!(
            "({n}, {np}) vs ({}, {})",
            gp.n(),
            gp.np()
        )));
    }
    let x = g.x.clone();
    let xp = gp.x.clone();
    let du: Vec<f64> = g.u.iter().zip(&gp.u).map(|(a, b)| a - b).collect();
    let x_g: Vec<f64> = x.iter().zip(&xp).map(|(a, b)| a + b).collect();
    let xn2 = norm2(&x);
    let r2_sum = xn2 + norm2(&xp);
    let sum2 = norm2(&x_g);
    let diff2: f64 = x.iter().zip(&xp).map(|(a, b)| (a - b) * (a - b)).sum();
    let r = norm2(&du).sqrt();

    let (a, one_plus_a, one_minus_a) = if r2_sum > 0.0 {
        let a = (2.0 * dot(&x, &xp) / r2_sum).clamp(-1.0, 1.0);
        (a, sum2 / r2_sum, diff2 / r2_sum)
    } else {
        (0.0, 1.0, 1.0)
    };

    let mut out = PairGeometry {
        n,
        np,
        x,
        xp,
        du,
        r2_sum,
        a,
        one_plus_a,
        one_minus_a,
        x_g,
        r,
        theta: vec![0.0; np],
        theta_norm: 0.0,
        eps: PI,
        y_g: vec![0.0; n],
        y2: 0.0,
        beta: 0.0,
        d2: 0.0,
        branch: Branch::Generic,
    };

    let coincident = r == 0.0 && diff2 == 0.0;
    let scale = (xn2.sqrt() + norm2(&gp.x).sqrt()).max(f64::MIN_POSITIVE);
    let antipodal = sum2.sqrt() <= 1e-12 * scale || r2_sum == 0.0;
    if coincident {
        out.branch = Branch::Coincident;
        out.finish_beta();
        out.set_y();
        return Ok(out);
    }
    if r == 0.0 {
        out.d2 = diff2;
        out.finish_beta();
        out.set_y();
        return Ok(out);
    }
    if antipodal && 2.0 * r >= PI * xn2 {
        if r2_sum > 0.0 {
            out.a = -1.0;
            out.one_plus_a = 0.0;
        }
        out.branch = Branch::Vertical;
        out.eps = 0.0;
        out.theta_norm = PI;
        out.theta = out.du.iter().map(|v| PI * v / r).collect();
        out.d2 = 2.0 * PI * r;
        out.beta = 0.0;
        return Ok(out);
    }
    let mix = out.mixing();
    let eps = match mix.mu_inverse_eps(2.0 * r / r2_sum) {
        Ok(e) => e,
        Err(GrushinError::Range { .. }) => {
            // Only reachable for 1 + a = 0 at the branch edge.
            out.branch = Branch::Vertical;
            out.eps = 0.0;
            out.theta_norm = PI;
            out.theta = out.du.iter().map(|v| PI * v / r).collect();
            out.d2 = 2.0 * PI * r;
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let t = PI - eps;
    out.eps = eps;
    out.theta_norm = t;
    out.theta = out.du.iter().map(|v| t * v / r).collect();
    out.d2 = closed_distance2(r2_sum, mix, one_minus_a, t, eps);
    out.finish_beta();
    out.set_y();
    Ok(out)
}

/// `(t / sin t)² R² (1 − a cos t)`, evaluated in the better-conditioned variable.
fn closed_distance2(r2: f64, mix: Mixing, one_minus_a: f64, t: f64, eps: f64) -> f64 {
    if t > PI / 2.0 {
        let (se, ce) = eps.sin_cos();
        let s2 = (eps / 2.0).sin();
        let ratio = t / se;
        ratio * ratio * r2 * (mix.one_plus_a * ce + 2.0 * s2 * s2)
    } else {
        let ratio = if t < 1e-8 { 1.0 + t * t / 6.0 } else { t / t.sin() };
        let sh = (t / 2.0).sin();
        ratio * ratio * r2 * (one_minus_a + 2.0 * mix.a * sh * sh)
    }
}

impl PairGeometry {
    fn finish_beta(&mut self) {
        let b = self.one_plus_a;
        let e2 = self.eps * self.eps;
        self.beta = if b + e2 > 0.0 { (b / (b + e2)).sqrt() } else { 0.0 };
    }

    fn set_y(&mut self) {
        // (1 − |θ|²/π²)^{−1/2} = π / √(ε(2π − ε))
        let fac = PI / (self.eps * (2.0 * PI - self.eps)).sqrt();
        self.y_g = self.x_g.iter().map(|v| fac * v).collect();
        self.y2 = fac * fac * self.r2_sum * self.one_plus_a;
        if self.r2_sum == 0.0 {
            self.y2 = 0.0;
        }
    }
}

/// `d(g, g')²`.
pub fn distance2(g: &Point, gp: &Point) -> Result<f64> {
    Ok(reduce_pair(g, gp)?.d2)
}

/// A pair with prescribed `(ε, a, d)`: `x = R(cos φ, 0, …)`, `x' = R(sin φ, 0, …)`
/// with `sin 2φ = a`, `u − u' = (R² μ_a(π − ε)/2, 0, …)`, and `R` chosen so that
/// the distance is `d`.
pub fn pair_from_invariants(n: usize, np: usize, eps: f64, a: f64, d: f64) -> Result<(Point, Point)> {
    if n == 0 || np == 0 {
        return Err(invalid("n and n' must be at least 1"));
    }
    if !(eps > 0.0 && eps <= PI) || !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("need 0 < eps <= pi and d > 0, got eps = {eps}, d = {d}")));
    }
    if !(-1.0..=1.0).contains(&a) || (a == -1.0 && eps == PI) {
        return Err(invalid(format!("mixing a = {a} outside [-1, 1]")));
    }
    let t = PI - eps;
    let (mu, _) = Mixing::new(a)?.mu_at_eps(eps);
    let big_r = if t == 0.0 { d / (1.0 - a).sqrt() } else { d * t.sin() / (t * (1.0 - a * t.cos()).sqrt()) };
    let phi = 0.5 * a.asin();
    let mut x = vec![0.0; n];
    let mut xp = vec![0.0; n];
    x[0] = big_r * phi.cos();
    xp[0] = big_r * phi.sin();
    let mut u = vec![0.0; np];
    u[0] = 0.5 * big_r * big_r * mu;
    Ok((Point::new(x, u)?, Point::new(xp, vec![0.0; np])?))
}

/// `sup_{|λ| < π} R²(|λ| cot|λ| − a|λ|/sin|λ|) + 2(u − u')·λ`, maximised by
/// golden-section search along `λ ∥ u − u'`.
///
/// The objective is concave; along `ε = π − |λ|` the search resolves
/// maximisers arbitrarily close to the boundary.
pub fn distance2_sup_oracle(g: &Point, gp: &Point) -> Result<f64> {
    let p = reduce_pair(g, gp)?;
    let (r2, a, b, r) = (p.r2_sum, p.a, p.one_plus_a, p.r);
    let objective = |eps: f64| -> f64 {
        let t = PI - eps;
        let phase = if eps < PI / 2.0 {
            let sh = (eps / 2.0).sin();
            -(t) * (b - 2.0 * sh * sh) / eps.sin()
        } else if t < 1e-8 {
            1.0 - a
        } else {
            t / t.tan() - a * t / t.sin()
        };
        r2 * phase + 2.0 * r * t
    };
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, PI);
    let mut c1 = hi - golden * (hi - lo);
    let mut c2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (objective(c1), objective(c2));
    for _ in 0..400 {
        if hi - lo <= 1e-300_f64.max(4.0 * f64::EPSILON * lo) {
            break;
        }
        if f1 >= f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - golden * (hi - lo);
            f1 = objective(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + golden * (hi - lo);
            f2 = objective(c2);
        }
    }
    let best = 0.5 * (lo + hi);
    Ok(objective(best).max(f1).max(f2))
}

/// A two-sided bound `[expr/C, C·expr]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub lower: f64,
    pub upper: f64,
    pub expression: f64,
    pub constant_used: f64,
    pub formula: &'static str,
}

impl Envelope {
    pub fn new(expression: f64, constant: f64, formula: &'static str) -> Result<Self> {
        if !(constant >= 1.0) {
            return Err(invalid(format!("envelope constant {constant} must be >= 1")));
        }
        Ok(Self { lower: expression / constant, upper: expression * constant, expression, constant_used: constant, formula })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// `r^{n+n'}(r^{n'} + |x|^{n'})`, comparable to the volume of the CC ball of
/// radius `r` about `g`.
pub fn ball_volume_envelope(g: &Point, radius: f64, constant: f64) -> Result<Envelope> {
    if !(radius > 0.0) {
        return Err(invalid(format!("radius {radius} must be > 0")));
    }
    let (n, np) = (g.n() as i32, g.np() as i32);
    let xn = norm2(&g.x).sqrt();
    let q = radius.powi(n + np) * (radius.powi(np) + xn.powi(np));
    Envelope::new(q, constant, "ball-volume")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: &[f64], u: &[f64]) -> Point {
        Point::new(x.to_vec(), u.to_vec()).unwrap()
    }

    #[test]
    fn branches() {
        let g = pt(&[0.3, -1.0], &[2.0]);
        let p = reduce_pair(&g, &g).unwrap();
        assert_eq!(p.branch, Branch::Coincident);
        assert_eq!(p.d2, 0.0);
        let p = reduce_pair(&pt(&[1.0], &[2.0]), &pt(&[-1.0], &[0.0])).unwrap();
        assert_eq!(p.branch, Branch::Vertical);
        assert!((p.d2 - 4.0 * PI).abs() < 1e-14);
        let p = reduce_pair(&pt(&[0.0], &[0.0]), &pt(&[0.0], &[1.0])).unwrap();
        assert_eq!(p.branch, Branch::Vertical);
        assert!((p.d2 - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn horizontal_pairs_are_euclidean() {
        let d = distance2(&pt(&[1.0, 0.0], &[0.5]), &pt(&[0.0, 1.0], &[0.5])).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
        let p = reduce_pair(&pt(&[1.0, 2.0], &[0.5]), &pt(&[-0.2, 1.0], &[0.5])).unwrap();
        assert_eq!(p.theta_norm, 0.0);
        assert!((p.d2 - p.r2_sum * (1.0 - p.a)).abs() < 1e-13);
    }

    #[test]
    fn sup_oracle_examples() {
        let g = pt(&[0.4, 0.1], &[1.0, 0.0]);
        let gp = pt(&[-0.2, 0.7], &[1.0, 0.0]);
        let p = reduce_pair(&g, &gp).unwrap();
        assert!((distance2_sup_oracle(&g, &gp).unwrap() - p.r2_sum * (1.0 - p.a)).abs() < 1e-12);
        let v = distance2_sup_oracle(&pt(&[0.0], &[0.0]), &pt(&[0.0], &[1.0])).unwrap();
        assert!((v / (2.0 * PI) - 1.0).abs() < 1e-8);
        let g = pt(&[0.5, -0.2], &[0.3, 1.1]);
        let gp = pt(&[0.1, 0.9], &[-0.6, 0.2]);
        let d = distance2(&g, &gp).unwrap();
        assert!((distance2_sup_oracle(&g, &gp).unwrap() / d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ball_volume_examples() {
        let one = |x: &[f64], u: &[f64], r| ball_volume_envelope(&pt(x, u), r, 1.0).unwrap().expression;
        assert_eq!(one(&[0.0], &[0.0], 1.0), 1.0);
        assert_eq!(one(&[0.0], &[0.0], 2.0), 8.0);
        assert_eq!(one(&[3.0, 0.0], &[0.0], 1.0), 4.0);
        assert!(ball_volume_envelope(&pt(&[0.0], &[0.0]), 0.0, 1.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            reduce_pair(&pt(&[0.0], &[0.0]), &pt(&[0.0, 1.0], &[0.0])),
            Err(GrushinError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn continuity_at_vertical_edge() {
        // x = −x', 2r ↓ π|x|² from the generic side: 1 + a stays 0, s ↑ π/2.
        let x = 0.8f64;
        let edge = PI * x * x / 2.0;
        let r = edge * (1.0 - 1e-4);
        let p = reduce_pair(&pt(&[x], &[r]), &pt(&[-x], &[0.0])).unwrap();
        assert_eq!(p.branch, Branch::Generic);
        assert!((p.d2 / (2.0 * PI * r) - 1.0).abs() < 1e-3);
        // Slightly perturbed x' (1 + a > 0) beyond the edge.
        let p = reduce_pair(&pt(&[x], &[edge * 1.0001]), &pt(&[-x * (1.0 - 1e-6)], &[0.0])).unwrap();
        assert_eq!(p.branch, Branch::Generic);
        assert!((p.d2 / (2.0 * PI * edge * 1.0001) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tiny_eps_keeps_precision() {
        // Large r with x_g ≠ 0 gives ε ~ 1e−4; d² must still match the sup oracle.
        let g = pt(&[1.0, 0.1], &[3e6]);
        let gp = pt(&[-1.0, 0.0], &[0.0]);
        let p = reduce_pair(&g, &gp).unwrap();
        assert!(p.eps < 1e-3 && p.eps > 0.0);
        let o = distance2_sup_oracle(&g, &gp).unwrap();
        assert!((o / p.d2 - 1.0).abs() < 1e-8, "{o} {}", p.d2);
    }

    fn arb_pair() -> impl Strategy<Value = (Point, Point)> {
        (1usize..4, 1usize..4).prop_flat_map(|(n, np)| {
            (
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-3.0f64..3.0, np),
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-3.0f64..3.0, np),
            )
                .prop_map(|(x, u, xp, up)| (Point { x, u }, Point { x: xp, u: up }))
        })
    }

    proptest! {
        #[test]
        fn closed_matches_sup((g, gp) in arb_pair()) {
            let d = distance2(&g, &gp).unwrap();
            let o = distance2_sup_oracle(&g, &gp).unwrap();
            prop_assert!((d - o).abs() <= 1e-6 * d.max(1e-300), "{} vs {}", d, o);
        }

        #[test]
        fn symmetric_and_scaling((g, gp) in arb_pair(), h in 0.05f64..20.0) {
            let d = distance2(&g, &gp).unwrap();
            prop_assert_eq!(d, distance2(&gp, &g).unwrap());
            let dh = distance2(&g.dilate(h), &gp.dilate(h)).unwrap();
            prop_assert!((dh * h - d).abs() <= 1e-12 * d.max(1e-300) * 10.0);
        }
    }
}
