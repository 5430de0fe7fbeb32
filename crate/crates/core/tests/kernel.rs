use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;

use grushin_core::geometry::reduce_pair;
use grushin_core::kernel::{grad_kernel, kernel, kernel_direct, kernel_transformed, kernel_with, MethodChoice, TransformedContext};
use grushin_core::quad::gauss_legendre;
use grushin_core::{GrushinError, Method, Point, QuadSpec};

fn pt(x: &[f64], u: &[f64]) -> Point {
    Point::new(x.to_vec(), u.to_vec()).unwrap()
}

/// Composite Gauss–Legendre on `[0, top]`.
fn integrate(f: impl Fn(f64) -> f64, top: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = top / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += 0.5 * h * wi * f(a + 0.5 * h * (xi + 1.0));
        }
    }
    s
}

#[test]
fn origin_value_n2_np1_is_one_over_32() {
    let o = Point::origin(2, 1);
    let k = kernel(&o, &o, 1.0, &QuadSpec::default()).unwrap();
    assert!((k.value * 32.0 - 1.0).abs() < 1e-10, "{}", k.value);
}

#[test]
fn origin_value_n2_np1_by_quadrature() {
    // (4π)^{−2} ∫_ℝ λ/sinh λ dλ.
    let i = 2.0 * integrate(|l| if l == 0.0 { 1.0 } else { l / l.sinh() }, 60.0, 120);
    let q = i / (4.0 * PI).powi(2);
    assert!((q * 32.0 - 1.0).abs() < 1e-12);
}

#[test]
fn origin_value_n2_np2_polar_reduction() {
    let o = Point::origin(2, 2);
    let k = kernel(&o, &o, 1.0, &QuadSpec::default()).unwrap();
    let radial = integrate(|r| r * r / r.sinh(), 60.0, 120);
    let want = (4.0 * PI).powi(-3) * 2.0 * PI * radial;
    assert!((k.value / want - 1.0).abs() < 1e-10, "{} vs {want}", k.value);
    // ∫ ρ²/sinh ρ = 7ζ(3)/2.
    assert!((radial - 3.5 * 1.202_056_903_159_594_3).abs() < 1e-12);
}

#[test]
fn direct_and_transformed_agree_in_the_overlap() {
    let spec = QuadSpec::with_tol(1e-9);
    for (x, xp, u) in [(vec![1.0], vec![0.6], vec![2.8]), (vec![0.8, 0.3], vec![0.5, -0.1], vec![2.0, 1.5])] {
        let g = pt(&x, &u);
        let gp = pt(&xp, &vec![0.0; u.len()]);
        let d = kernel_direct(&g, &gp, 1.0, &spec).unwrap();
        let t = kernel_transformed(&g, &gp, &spec).unwrap();
        assert_eq!(d.method, Method::Direct);
        assert_eq!(t.method, Method::Transformed);
        assert!((d.value / t.value - 1.0).abs() < 1e-6, "{} vs {}", d.value, t.value);
    }
}

#[test]
fn transformed_needs_the_an_condition() {
    // x' = −x gives 1 + a = 0 with x_g = 0; r below the vertical edge.
    let e = kernel_transformed(&pt(&[1.0], &[1.0]), &pt(&[-1.0], &[0.0]), &QuadSpec::default()).unwrap_err();
    assert!(matches!(e, GrushinError::Precondition(_)), "{e}");
}

#[test]
fn direct_budget_is_enforced() {
    let g = pt(&[1.0], &[80.0]);
    let gp = pt(&[0.5], &[0.0]);
    let spec = QuadSpec::default();
    assert!(reduce_pair(&g, &gp).unwrap().cancellation_exponent(1.0) > 30.0);
    assert!(matches!(kernel_direct(&g, &gp, 1.0, &spec), Err(GrushinError::Precondition(_))));
    // Auto still produces a value.
    assert!(kernel_with(&g, &gp, 1.0, &spec, MethodChoice::Auto).unwrap().scaled > 0.0);
}

#[test]
fn bad_time_is_rejected() {
    let o = Point::origin(1, 1);
    for h in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(kernel(&o, &o, h, &QuadSpec::default()).is_err());
    }
}

#[test]
fn gradient_vanishes_in_x_at_the_axis() {
    let g = pt(&[0.0, 0.0], &[0.4]);
    let gp = pt(&[0.0, 0.0], &[-0.2]);
    let gr = grad_kernel(&g, &gp, 1.0, &QuadSpec::default()).unwrap();
    assert_eq!(gr.len(), 2 + 2);
    assert!(gr.iter().all(|v| v.abs() < 1e-15), "{gr:?}");
}

#[test]
fn gradient_on_the_diagonal_does_not_vanish() {
    let g = pt(&[1.0, 0.0], &[0.0]);
    let gr = grad_kernel(&g, &g, 1.0, &QuadSpec::default()).unwrap();
    assert!(gr[0].abs() >= 1e-6, "{gr:?}");
}

#[test]
fn e_g_vanishes_where_w_does_and_matches_a_linear_solve() {
    let ctx = TransformedContext::from_points(&pt(&[1.0, 0.5], &[6.0, 2.0]), &pt(&[0.9, 0.2], &[0.0, 0.0])).unwrap();
    assert!(ctx.e_g(ctx.y).abs() < 1e-12 * ctx.e_g(2.0 * ctx.y + 1.0));
    for rho in [0.1, 0.9 * ctx.y, 1.5 * ctx.y + 0.3, 10.0] {
        let a = ctx.a_matrix(rho).unwrap();
        let w = DVector::from_vec(ctx.w_vec(rho));
        let v = a.clone().lu().solve(&w).unwrap();
        let e = w.dot(&v);
        assert!((ctx.e_g(rho) - e).abs() <= 1e-12 * e.abs().max(1e-300), "rho {rho}: {} vs {e}", ctx.e_g(rho));
        let det = a.determinant();
        assert!((ctx.det_a(rho) / det - 1.0).abs() < 1e-12);
    }
}

#[test]
fn f_is_real_and_positive_where_w_vanishes() {
    let ctx = TransformedContext::from_points(&pt(&[1.0], &[5.0]), &pt(&[0.8], &[0.0])).unwrap();
    let f = ctx.f_eval(ctx.y, &QuadSpec::with_tol(1e-8)).unwrap();
    assert!(f.value > 0.0);
}

fn coords(len: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_symmetric_and_scaling(
        x in coords(2, 1.0), xp in coords(2, 1.0), u in coords(1, 1.0), up in coords(1, 1.0), h in 0.3f64..3.0
    ) {
        let spec = QuadSpec::with_tol(1e-9);
        let (g, gp) = (pt(&x, &u), pt(&xp, &up));
        let a = kernel(&g, &gp, h, &spec).unwrap();
        let b = kernel(&gp, &g, h, &spec).unwrap();
        let c = kernel(&g.dilate(h), &gp.dilate(h), 1.0, &spec).unwrap();
        prop_assert!(a.value > 0.0);
        prop_assert!((a.value / b.value - 1.0).abs() <= 10.0 * (a.rel_err() + b.rel_err()) + 1e-9);
        prop_assert!((a.value / (h.powf(-2.0) * c.value) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn translation_in_u_is_a_symmetry(x in coords(1, 1.0), xp in coords(1, 1.0), u in coords(1, 1.0), s in -3.0f64..3.0) {
        let spec = QuadSpec::with_tol(1e-9);
        let a = kernel(&pt(&x, &u), &pt(&xp, &[0.0]), 1.0, &spec).unwrap();
        let b = kernel(&pt(&x, &[u[0] + s]), &pt(&xp, &[s]), 1.0, &spec).unwrap();
        prop_assert!((a.value / b.value - 1.0).abs() <= 1e-8);
    }
}
