//! Radial Bessel kernels.
//!
//! Integrating a plane wave over a sphere in `ℝᵐ` gives
//! `∫_{S^{m−1}} e^{i z ω₁} dω = |S^{m−1}| Λ_ν(z)` with `ν = m/2 − 1` and
//! the normalised Bessel function `Λ_ν(z) = Γ(ν+1)(2/z)^ν J_ν(z)`, `Λ_ν(0) = 1`.
//! The hyperbolic counterpart uses `I_ν`. Orders are half-integers, passed as
//! `2ν`.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

/// `|S^{m−1}| = 2π^{m/2} / Γ(m/2)`; `|S⁰| = 2`.
pub fn sphere_area(m: usize) -> f64 {
    assert!(m >= 1, "sphere_area needs m >= 1");
    let h = m as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in `ℝᵐ`.
pub fn ball_volume(m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    sphere_area(m) / m as f64
}

fn nu_of(two_nu: i32) -> f64 {
    two_nu as f64 / 2.0
}

/// Normalised Bessel `Λ_ν(z) = Γ(ν+1)(2/z)^ν J_ν(z)` for `z ≥ 0`, `2ν ≥ −1`.
pub fn lambda_j(two_nu: i32, z: f64) -> f64 {
    assert!(two_nu >= -1, "order must satisfy nu >= -1/2");
    let z = z.abs();
    match two_nu {
        -1 => return z.cos(),
        1 => return if z < 1e-4 { 1.0 - z * z / 6.0 } else { z.sin() / z },
        _ => {}
    }
    let nu = nu_of(two_nu);
    if z <= 5.0 || z * z <= 10.0 * (nu + 1.0) {
        return lambda_series(nu, -z * z / 4.0);
    }
    let j = bessel_j(two_nu, z);
    // Γ(ν+1)(2/z)^ν in log form to be safe for moderate ν.
    (ln_gamma(nu + 1.0) + nu * (2.0 / z).ln()).exp() * j
}

/// `Σ_k y^k / (k! (ν+1)_k)`.
fn lambda_series(nu: f64, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= y / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > y.abs().sqrt() {
            break;
        }
    }
    sum
}

/// `Λ_ν'(z) = −z Λ_{ν+1}(z) / (2(ν+1))`.
pub fn lambda_j_prime(two_nu: i32, z: f64) -> f64 {
    let nu = nu_of(two_nu);
    -z / (2.0 * (nu + 1.0)) * lambda_j(two_nu + 2, z)
}

/// `J_ν(z)` for `z > 5`, half-integer or integer order.
pub fn bessel_j(two_nu: i32, z: f64) -> f64 {
    let nu = nu_of(two_nu);
    if z >= 25.0 && z > nu * nu {
        return hankel_j(nu, z);
    }
    if two_nu % 2 != 0 {
        half_integer_j(two_nu, z)
    } else {
        miller_integer_j((two_nu / 2) as usize, z)
    }
}

fn hankel_j(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        if term.abs() > prev || term.abs() < 1e-17 {
            if term.abs() < 1e-17 {
                add_hankel_term(k, term, &mut p, &mut q);
            }
            break;
        }
        prev = term.abs();
        add_hankel_term(k, term, &mut p, &mut q);
    }
    let chi = z - (nu / 2.0 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn add_hankel_term(k: usize, term: f64, p: &mut f64, q: &mut f64) {
    // k odd feeds Q with sign (+, −, +, …); k even feeds P with (−, +, …).
    match k % 4 {
        1 => *q += term,
        2 => *p -= term,
        3 => *q -= term,
        _ => *p += term,
    }
}

fn half_integer_j(two_nu: i32, z: f64) -> f64 {
    let nu = nu_of(two_nu);
    let c = (2.0 / (PI * z)).sqrt();
    let jm = c * z.cos();
    let jp = c * z.sin();
    if two_nu == -1 {
        return jm;
    }
    if z > nu {
        // Upward recurrence J_{k+1} = (2k/z) J_k − J_{k−1}, stable for z > ν.
        let (mut a, mut b) = (jm, jp);
        let mut k = 0.5;
        while k < nu - 0.25 {
            let nb = 2.0 * k / z * b - a;
            a = b;
            b = nb;
            k += 1.0;
        }
        return b;
    }
    // Backward recurrence, normalised against the larger of J_{±1/2}.
    let start = (nu.max(z) + 20.0 + (40.0 * z).sqrt()).ceil() + 0.5;
    let (mut hi, mut cur) = (0.0, 1e-30);
    let mut k = start;
    let mut target = 0.0;
    while k > 0.0 {
        // cur = J_k, hi = J_{k+1}; compute J_{k−1}.
        let lo = 2.0 * k / z * cur - hi;
        hi = cur;
        cur = lo;
        k -= 1.0;
        if (k - nu).abs() < 0.25 {
            target = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            hi *= 1e-250;
            target *= 1e-250;
        }
    }
    // Now cur = J_{−1/2}, hi = J_{1/2} up to a common factor.
    if jm.abs() > jp.abs() {
        target * jm / cur
    } else {
        target * jp / hi
    }
}

fn miller_integer_j(n: usize, z: f64) -> f64 {
    let start = ((n as f64).max(z) + 20.0 + (40.0 * z).sqrt()).ceil() as usize;
    let start = start + (start % 2);
    let (mut hi, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut target = if start == n { cur } else { 0.0 };
    let mut k = start;
    while k > 0 {
        let lo = 2.0 * k as f64 / z * cur - hi;
        hi = cur;
        cur = lo;
        k -= 1;
        if k == n {
            target = cur;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            hi *= 1e-250;
            target *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    target / norm
}

/// `|S^{m−1}| Λ_{m/2−1}(z)`: the spherical average of `e^{i z ω₁}` times the
/// sphere area. `Ω₁ = 2cos z`, `Ω₃ = 4π sin z / z`.
pub fn omega(m: usize, z: f64) -> f64 {
    sphere_area(m) * lambda_j(m as i32 - 2, z)
}

/// `e^{−z} |S^{m−1}| Γ(ν+1)(2/z)^ν I_ν(z)` for `z ≥ 0`, `ν = m/2 − 1`.
///
/// This is the spherical integral of `e^{z ω₁}` with the growth
/// `e^{z}` removed.
pub fn theta_hat(m: usize, z: f64) -> f64 {
    assert!(m >= 1);
    let z = z.abs();
    match m {
        1 => return 1.0 + (-2.0 * z).exp(),
        3 => {
            let v = if z < 1e-3 {
                (-z).exp() * (1.0 + z * z / 6.0 + z.powi(4) / 120.0)
            } else {
                0.5 * (1.0 - (-2.0 * z).exp()) / z
            };
            return 4.0 * PI * v;
        }
        _ => {}
    }
    let nu = m as f64 / 2.0 - 1.0;
    let area = sphere_area(m);
    if z <= 40.0 || z <= nu * nu {
        return area * (-z).exp() * lambda_series(nu, z * z / 4.0);
    }
    // e^{−z} I_ν(z) ~ (2πz)^{−1/2} Σ (−1)^k a_k / z^k
    let mu = 4.0 * nu * nu;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * z);
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 {
            break;
        }
    }
    let i_scaled = sum / (2.0 * PI * z).sqrt();
    area * (ln_gamma(nu + 1.0) + nu * (2.0 / z).ln()).exp() * i_scaled
}
