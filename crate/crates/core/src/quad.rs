//! One-dimensional quadrature: adaptive Gauss–Kronrod, tanh–sinh, and a
//! half-line panel driver with a tail-mass stopping rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::special::theta_hat;

/// Rule applied on each panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadRule {
    #[default]
    AdaptivePanel,
    DoubleExponential,
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOut {
    pub value: f64,
    pub abs_err: f64,
    /// `∫|f|` estimate, used to bound cancellation roundoff.
    pub abs_mass: f64,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error, ∫|f|).
///
/// The error is the QUADPACK estimate `resasc·min(1, (200|K − G|/resasc)^{3/2})`
/// with a roundoff floor.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 7];
    let mut ks = CompensatedSum::new();
    ks.add(fc * WGK[7]);
    let mut g = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = (f1, f2);
        ks.add(WGK[j] * f1);
        ks.add(WGK[j] * f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let k = ks.value();
    let mean = 0.5 * k;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let hh = h.abs();
    let (resabs, resasc) = (abs * hh, asc * hh);
    let mut err = ((k - g) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / f64::EPSILON {
        err = err.max(2.0 * f64::EPSILON * resabs);
    }
    (k * h, err, resabs)
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss–Kronrod on `[a, b]`, bisecting the worst segment
/// until the summed error is below `max(rel_tol·|I|, abs_tol)`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> QuadOut {
    adaptive_gk_points(f, &[a, b], rel_tol, abs_tol, max_segments)
}

/// As [`adaptive_gk`], starting from the partition given by `points`
/// (sorted ascending).
pub fn adaptive_gk_points<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> QuadOut {
    let mut heap = BinaryHeap::new();
    let (mut tv, mut te, mut tm) = (0.0, 0.0, 0.0);
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e, m) = gk15(&mut f, w[0], w[1]);
        tv += v;
        te += e;
        tm += m;
        heap.push(Segment { a: w[0], b: w[1], val: v, err: e, abs: m });
    }
    let mut converged = false;
    for _ in 0..max_segments.max(1) {
        let round = 2.0 * f64::EPSILON * tm;
        if te <= (rel_tol * tv.abs()).max(abs_tol).max(round) {
            converged = true;
            break;
        }
        let s = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval exhausted at machine resolution.
            heap.push(s);
            break;
        }
        let (v1, e1, m1) = gk15(&mut f, s.a, mid);
        let (v2, e2, m2) = gk15(&mut f, mid, s.b);
        tv += v1 + v2 - s.val;
        te += e1 + e2 - s.err;
        tm += m1 + m2 - s.abs;
        heap.push(Segment { a: s.a, b: mid, val: v1, err: e1, abs: m1 });
        heap.push(Segment { a: mid, b: s.b, val: v2, err: e2, abs: m2 });
    }
    // Re-sum to avoid drift from the running updates.
    let mut sv = CompensatedSum::new();
    let (mut se, mut sm) = (0.0, 0.0);
    for s in heap.iter() {
        sv.add(s.val);
        se += s.err;
        sm += s.abs;
    }
    let value = sv.value();
    let round = 2.0 * f64::EPSILON * sm;
    if !converged && se <= (rel_tol * value.abs()).max(abs_tol).max(round) {
        converged = true;
    }
    QuadOut { value, abs_err: se.max(round), abs_mass: sm, converged }
}

/// Tanh–sinh on `[a, b]`; tolerates integrable endpoint singularities.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_level: usize,
) -> QuadOut {
    use std::f64::consts::FRAC_PI_2;
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    // Node at t: x = tanh(π/2 sinh t); 1 − |x| computed without cancellation.
    let eval = |t: f64, f: &mut F| -> (f64, f64) {
        let s = FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        let comp = 1.0 / (s.abs().exp() * ch); // 1 − |tanh s|
        if comp == 0.0 || w == 0.0 {
            return (0.0, 0.0);
        }
        let (xl, xr) = if t >= 0.0 { (a + hw * comp, b - hw * comp) } else { (b - hw * comp, a + hw * comp) };
        let fl = f(xl);
        let fr = f(xr);
        let v = if t == 0.0 { f(c) } else { fl + fr };
        (w * v, w * (fl.abs() + fr.abs()))
    };
    let tmax = 6.5;
    let mut h = 1.0;
    let (v0, m0) = eval(0.0, &mut f);
    let mut sum = CompensatedSum::new();
    sum.add(v0);
    let mut mass = m0;
    let mut k = 1.0;
    while k * h <= tmax {
        let (v, m) = eval(k * h, &mut f);
        sum.add(v);
        mass += m;
        k += 1.0;
    }
    let mut prev = sum.value() * h * hw;
    let mut err = f64::INFINITY;
    let mut converged = false;
    for _ in 0..max_level {
        h *= 0.5;
        let mut t = h;
        while t <= tmax {
            let (v, m) = eval(t, &mut f);
            sum.add(v);
            mass += m;
            t += 2.0 * h;
        }
        let cur = sum.value() * h * hw;
        err = (cur - prev).abs();
        prev = cur;
        let round = 50.0 * f64::EPSILON * mass * h * hw.abs();
        if err <= (rel_tol * cur.abs()).max(abs_tol).max(round) {
            converged = true;
            break;
        }
    }
    let abs_mass = mass * h * hw.abs();
    QuadOut { value: prev, abs_err: err.max(50.0 * f64::EPSILON * abs_mass), abs_mass, converged }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Configuration of the half-line driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLine {
    pub rule: QuadRule,
    pub rel_tol: f64,
    /// Absolute floor for both the panel rule and the tail test.
    pub abs_tol: f64,
    /// Radius that is always covered before the tail rule may stop.
    pub min_radius: f64,
    /// First panel width.
    pub width: f64,
    /// Panel width cap (oscillation control).
    pub max_width: f64,
    pub growth: f64,
    pub max_panels: usize,
    pub max_segments: usize,
}

impl HalfLine {
    pub fn new(rule: QuadRule, rel_tol: f64) -> Self {
        Self {
            rule,
            rel_tol,
            abs_tol: 0.0,
            min_radius: 0.0,
            width: 1.0,
            max_width: f64::INFINITY,
            growth: 1.0,
            max_panels: 4000,
            max_segments: 200,
        }
    }

    /// `∫_{start}^∞ f`. Stops once two consecutive panels each contribute
    /// less than `max(rel_tol·|I|, abs_tol, 1e−17·∫|f|)` beyond `min_radius`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, start: f64, mut f: F) -> QuadOut {
        let mut total = CompensatedSum::new();
        let (mut err, mut mass) = (0.0, 0.0);
        let mut x = start;
        let mut w = self.width.min(self.max_width);
        let mut quiet = 0;
        let mut tail = 0.0;
        let mut converged = true;
        let mut finished = false;
        // A positive absolute floor replaces the per-panel relative test, which
        // is too loose when panels cancel.
        let panel_rel = if self.abs_tol > 0.0 { 0.0 } else { 0.1 * self.rel_tol };
        for _ in 0..self.max_panels {
            let b = x + w;
            let out = match self.rule {
                QuadRule::AdaptivePanel => adaptive_gk(&mut f, x, b, panel_rel, 0.1 * self.abs_tol, self.max_segments),
                QuadRule::DoubleExponential => tanh_sinh(&mut f, x, b, panel_rel, 0.1 * self.abs_tol, 12),
            };
            converged &= out.converged;
            total.add(out.value);
            err += out.abs_err;
            mass += out.abs_mass;
            x = b;
            let est = total.value().abs();
            if b >= self.min_radius && out.abs_mass <= (self.rel_tol * est).max(self.abs_tol).max(1e-17 * mass) {
                quiet += 1;
                // The quiet panels stand in for the truncated tail.
                tail += out.abs_mass;
                if quiet >= 2 {
                    finished = true;
                    break;
                }
            } else {
                quiet = 0;
                tail = 0.0;
            }
            w = (w * self.growth).min(self.max_width);
        }
        let value = total.value();
        QuadOut {
            value,
            abs_err: err + tail + f64::EPSILON * mass + if finished { 0.0 } else { value.abs() },
            abs_mass: mass,
            converged: converged && finished,
        }
    }
}

/// `∫_{ℝ^p} e^{−|ξ − Y|²/2} g(|ξ|) dξ` for radial `g`, `|Y| = y`, reduced to
/// `∫₀^∞ g(ρ) ρ^{p−1} e^{−(ρ−y)²/2} Θ̂_p(ρy) dρ`.
///
/// `core` is the scale on which `g` varies near `ρ = y`; breakpoints are
/// placed at `y ± core·2^k` out to the Gaussian reach.
pub fn radial_gaussian<G: FnMut(f64) -> f64>(
    p: usize,
    y: f64,
    core: f64,
    rel_tol: f64,
    max_segments: usize,
    mut g: G,
) -> QuadOut {
    let span = 12.0;
    let lo = (y - span).max(0.0);
    let hi = y + span;
    let core = core.clamp(1e-8, 1.0);
    let mut pts = vec![lo, hi];
    let mut k = core;
    while k < span {
        for q in [y - k, y + k] {
            if q > lo && q < hi {
                pts.push(q);
            }
        }
        k *= 2.0;
    }
    if y > lo {
        pts.push(y);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    adaptive_gk_points(
        |rho| {
            let w = rho.powi(p as i32 - 1) * (-0.5 * (rho - y) * (rho - y)).exp() * theta_hat(p, rho * y);
            if w == 0.0 {
                return 0.0;
            }
            w * g(rho)
        },
        &pts,
        rel_tol,
        0.0,
        max_segments,
    )
}
