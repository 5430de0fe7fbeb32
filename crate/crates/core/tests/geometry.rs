use std::f64::consts::PI;

use proptest::prelude::*;

use grushin_core::geometry::{
    ball_volume_envelope, distance2, distance2_sup_oracle, pair_from_invariants, reduce_pair,
};
use grushin_core::{Branch, Point};

fn pt(x: &[f64], u: &[f64]) -> Point {
    Point::new(x.to_vec(), u.to_vec()).unwrap()
}

#[test]
fn coincident_pair() {
    let g = pt(&[0.3, -1.0], &[2.0]);
    let p = reduce_pair(&g, &g).unwrap();
    assert_eq!(p.branch, Branch::Coincident);
    assert_eq!(p.d2, 0.0);
}

#[test]
fn antipodal_pair_far_enough_up_is_vertical() {
    let p = reduce_pair(&pt(&[1.0], &[2.0]), &pt(&[-1.0], &[-2.0])).unwrap();
    assert_eq!(p.branch, Branch::Vertical);
    assert!((p.d2 - 2.0 * PI * p.r).abs() < 1e-12 * p.d2);
}

#[test]
fn equal_u_gives_euclidean_distance() {
    let g = pt(&[1.0, 0.0], &[0.5]);
    let gp = pt(&[0.0, 1.0], &[0.5]);
    let p = reduce_pair(&g, &gp).unwrap();
    assert_eq!(p.theta_norm, 0.0);
    assert!((p.d2 - 2.0).abs() < 1e-14);
    assert!((p.d2 - p.r2_sum * (1.0 - p.a)).abs() < 1e-14);
}

#[test]
fn vertical_axis_distance_is_two_pi_r() {
    let d2 = distance2(&pt(&[0.0], &[0.0]), &pt(&[0.0], &[1.0])).unwrap();
    assert!((d2 - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn sup_oracle_examples() {
    let g = pt(&[1.0, 0.2], &[0.0, 0.0]);
    let gp = pt(&[-0.4, 0.7], &[0.0, 0.0]);
    let euclid = 1.4f64.powi(2) + 0.5f64.powi(2);
    assert!((distance2_sup_oracle(&g, &gp).unwrap() - euclid).abs() < 1e-10);
    // Vertical branch: the supremum sits on |λ| = π.
    let g = pt(&[0.5], &[3.0]);
    let gp = pt(&[-0.5], &[0.0]);
    let o = distance2_sup_oracle(&g, &gp).unwrap();
    assert!((o / (2.0 * PI * 3.0) - 1.0).abs() < 1e-6, "{o}");
    assert!((distance2(&g, &gp).unwrap() / o - 1.0).abs() < 1e-6);
}

#[test]
fn ball_volume_comparison_quantity() {
    let v = |x: &[f64], np: usize, rad: f64| ball_volume_envelope(&pt(x, &vec![0.0; np]), rad, 1.0).unwrap().expression;
    assert!((v(&[0.0], 1, 1.0) - 1.0).abs() < 1e-15);
    assert!((v(&[0.0], 1, 2.0) - 8.0).abs() < 1e-13);
    assert!((v(&[3.0, 0.0], 1, 1.0) - 4.0).abs() < 1e-13);
}

#[test]
fn dimension_mismatch_is_rejected() {
    assert!(reduce_pair(&pt(&[1.0], &[0.0]), &pt(&[1.0, 0.0], &[0.0])).is_err());
    assert!(Point::new(vec![f64::NAN], vec![0.0]).is_err());
}

#[test]
fn continuity_at_the_vertical_edge() {
    // x = −x' with |x| = 1: the vertical branch starts at r = π/2.
    let edge = PI / 2.0;
    for delta in [1e-2, 1e-3, 1e-4] {
        let r = edge * (1.0 - delta);
        let d2 = distance2(&pt(&[1.0], &[r]), &pt(&[-1.0], &[0.0])).unwrap();
        assert!((d2 / (2.0 * PI * r) - 1.0).abs() < 10.0 * delta + 1e-3, "delta {delta}: {d2}");
    }
}

#[test]
fn invariants_are_reproduced() {
    for (n, np, eps, a, d) in [(1, 1, 0.5, 0.0, 3.0), (2, 2, 0.05, 0.3, 20.0), (3, 1, 2.0, -0.7, 7.0), (2, 3, 1e-3, 0.9, 40.0)] {
        let (g, gp) = pair_from_invariants(n, np, eps, a, d).unwrap();
        let p = reduce_pair(&g, &gp).unwrap();
        assert!((p.eps / eps - 1.0).abs() < 1e-8, "eps {} vs {eps}", p.eps);
        assert!((p.a - a).abs() < 1e-12);
        assert!((p.d() / d - 1.0).abs() < 1e-10);
    }
    assert!(pair_from_invariants(1, 1, 4.0, 0.0, 1.0).is_err());
}

fn coords(len: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_sup_oracle_n2(x in coords(2, 2.0), xp in coords(2, 2.0), u in coords(2, 3.0), up in coords(2, 3.0)) {
        let (g, gp) = (pt(&x, &u), pt(&xp, &up));
        let d = distance2(&g, &gp).unwrap();
        let o = distance2_sup_oracle(&g, &gp).unwrap();
        prop_assert!((d - o).abs() <= 1e-8 * d.max(1e-12), "{} vs {}", d, o);
    }

    #[test]
    fn distance_is_symmetric_and_scales(x in coords(1, 2.0), xp in coords(1, 2.0), u in coords(2, 3.0), up in coords(2, 3.0), h in 0.1f64..10.0) {
        let (g, gp) = (pt(&x, &u), pt(&xp, &up));
        let d = distance2(&g, &gp).unwrap();
        prop_assert!((distance2(&gp, &g).unwrap() - d).abs() <= 1e-12 * d.max(1.0));
        let dh = distance2(&g.dilate(h), &gp.dilate(h)).unwrap();
        prop_assert!((dh * h - d).abs() <= 1e-10 * d.max(1e-12));
    }

    #[test]
    fn u_translation_invariance(x in coords(2, 2.0), xp in coords(2, 2.0), u in coords(1, 3.0), up in coords(1, 3.0), s in -5.0f64..5.0) {
        let d = distance2(&pt(&x, &u), &pt(&xp, &up)).unwrap();
        let e = distance2(&pt(&x, &[u[0] + s]), &pt(&xp, &[up[0] + s])).unwrap();
        prop_assert!((d - e).abs() <= 1e-9 * d.max(1.0));
    }
}
