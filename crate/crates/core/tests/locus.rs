use std::f64::consts::PI;

use heun_spectra::abelian::{f_jk, f_jk_prime, loop_identities, side_of, ChebRule, CubicRoots, SIDES};
use heun_spectra::locus::{
    b0_by_bisection, build_gamma_q, default_step, distance_to_locus, find_b0, residuals, trace_curve, trace_gamma,
    unique_b_on_line,
};
use heun_spectra::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn skew() -> CubicRoots {
    CubicRoots::new([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)]).unwrap()
}

// Computed separately with adaptive quadrature on the original integrand
// and a 2-D secant solve.
const SKEW_B0: (f64, f64) = (0.722103839556221, -0.277896160443779);

#[test]
fn skew_b0_matches_reference_and_grid() {
    let r = skew();
    let b0 = find_b0(&r, 1e-12).unwrap();
    assert!((b0 - c(SKEW_B0.0, SKEW_B0.1)).norm() < 1e-10, "{b0}");
    for res in residuals(&r, b0).unwrap() {
        assert!(res < 1e-10);
    }
    let grid = b0_by_bisection(&r, 1e-10).unwrap();
    assert!((grid - b0).norm() < 1e-8, "{grid} {b0}");
    assert!(r.triangle().contains(b0) && r.triangle().boundary_distance(b0) > 0.0);
}

#[test]
fn skew_derivatives_nonvanishing_and_transversal() {
    let r = skew();
    let rule = ChebRule::default();
    let tri = r.triangle();
    let mut count = 0;
    for p in 1..8 {
        for q in 1..8 {
            let b = c(p as f64 / 8.0 + 0.01, -(q as f64) / 8.0 + 0.005);
            if !tri.contains(b) || tri.boundary_distance(b) < 0.03 {
                continue;
            }
            count += 1;
            let d: Vec<C64> = SIDES.iter().map(|&(j, k)| f_jk_prime(&r, b, j, k, rule).unwrap()).collect();
            for i in 0..3 {
                assert!(d[i].norm() > 0.0);
                let ratio = d[i] / d[(i + 1) % 3];
                assert!(ratio.im.abs() > 1e-8, "{b} {ratio}");
            }
        }
    }
    assert!(count >= 12);
}

#[test]
fn skew_loop_identities() {
    let r = skew();
    let rule = ChebRule::new(400).unwrap();
    for b in [r.centroid(), c(0.8, -0.3), c(0.95, -0.5)] {
        let (r_pi, r_2pi) = loop_identities(&r, b, rule).unwrap();
        assert!(r_pi < 1e-8 && r_2pi < 1e-8, "{b}: {r_pi} {r_2pi}");
    }
}

#[test]
fn skew_arcs_enter_the_interior() {
    let r = skew();
    let gq = build_gamma_q(&r, default_step(&r), 1e-10).unwrap();
    let tri = r.triangle();
    for arc in &gq.arcs {
        assert_eq!(arc.points[0], r.a[arc.i]);
        assert!(tri.boundary_distance(arc.points[2]) > 0.0);
        for p in &arc.points[1..] {
            assert!(tri.contains(*p));
        }
        assert!((arc.points.last().unwrap() - gq.b0).norm() < 1e-9);
    }
    // sign changes of Im f_jk on a grid mark where gamma_i runs; every
    // marked interior cell must be close to the traced arc
    let n = 200;
    let gq_i = |i: usize| {
        let mut g = gq.clone();
        for (m, a) in g.arcs.iter_mut().enumerate() {
            if m != i {
                a.points = vec![a.points[0]];
            }
        }
        g
    };
    for i in 0..3 {
        let (j, k) = side_of(i);
        let only = gq_i(i);
        let h = 1.0 / n as f64;
        let f = |z: C64| f_jk(&r, z, j, k, ChebRule::default()).map(|v| v.im).ok();
        let mut marked = 0;
        for p in (0..n).step_by(5) {
            for q in 0..n {
                let z0 = c(p as f64 * h + h / 3.0, -(q as f64) * h - h / 7.0);
                let z1 = z0 + c(h, 0.0);
                if !tri.contains(z0) || !tri.contains(z1) || tri.boundary_distance(z0) < 0.02 {
                    continue;
                }
                let (Some(v0), Some(v1)) = (f(z0), f(z1)) else { continue };
                if v0.signum() != v1.signum() {
                    marked += 1;
                    let d = distance_to_locus(&only, z0).min(distance_to_locus(&only, z1));
                    // crossings away from the arc belong to gamma_i past b_0
                    let past_b0 = (z0 - r.a[i]).norm() > (gq.b0 - r.a[i]).norm() - 2.0 * h;
                    assert!(d <= 2.0 * h || past_b0, "grid crossing at {z0} far from arc {i}");
                }
            }
        }
        assert!(marked > 0);
    }
}

#[test]
fn unique_points_lie_on_curves() {
    let r = skew();
    for i in 0..3 {
        let (j, k) = side_of(i);
        let b = unique_b_on_line(&r, r.centroid(), j, k).unwrap();
        // the whole curve inside the triangle, not just the arc up to b_0
        let (curve, _) = trace_curve(&r, i, default_step(&r), 1e-10, |_, _| Ok(false)).unwrap();
        let d = curve
            .windows(2)
            .map(|w| heun_spectra::poly::segment_distance(w[0], w[1], b))
            .fold(f64::INFINITY, f64::min);
        // polyline chords deviate from the curve by O(step^2 * curvature)
        assert!(d < 1e-4, "side {i}: {d}");
        assert!(f_jk(&r, b, j, k, ChebRule::default()).unwrap().im.abs() < 1e-10);
        // strictly monotone along the chord
        let e = r.a[k] - r.a[j];
        let tri = r.triangle();
        let inside: Vec<f64> = (-1000..=1000)
            .map(|s| s as f64 / 1000.0)
            .filter(|t| tri.contains(b + e * *t) && tri.boundary_distance(b + e * *t) > 1e-3)
            .collect();
        let (t0, t1) = (inside[0], *inside.last().unwrap());
        let vals: Vec<f64> = (0..10)
            .map(|s| {
                let t = t0 + (t1 - t0) * s as f64 / 9.0;
                f_jk(&r, b + e * t, j, k, ChebRule::default()).unwrap().im
            })
            .collect();
        let inc = vals.windows(2).all(|w| w[1] > w[0]);
        let dec = vals.windows(2).all(|w| w[1] < w[0]);
        assert!(inc || dec, "{vals:?}");
    }
}

#[test]
fn traced_arc_matches_assembled_arc() {
    let r = skew();
    let step = default_step(&r);
    let arc = trace_gamma(&r, 1, step, 1e-10).unwrap();
    for p in &arc.points {
        let (j, k) = side_of(1);
        assert!(f_jk(&r, *p, j, k, ChebRule::default()).unwrap().im.abs() < 1e-10);
    }
}

#[test]
fn quadrature_converges_geometrically() {
    let r = skew();
    let b = r.centroid();
    let errs: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&m| {
            let a = f_jk(&r, b, 1, 2, ChebRule::new(m).unwrap()).unwrap();
            let a2 = f_jk(&r, b, 1, 2, ChebRule::new(2 * m).unwrap()).unwrap();
            (a - a2).norm()
        })
        .collect();
    assert!(errs[1] < 0.5 * errs[0] && errs[2] < 0.5 * errs[1].max(1e-15), "{errs:?}");
}

fn triangle_strategy() -> impl Strategy<Value = CubicRoots> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(a, b, cc, d, e, f)| [c(a, b), c(cc, d), c(e, f)])
        .prop_filter_map("well shaped", |a| {
            let r = CubicRoots::new(a).ok()?;
            let tri = r.triangle();
            let area = heun_spectra::poly::cross(a[1] - a[0], a[2] - a[0]).abs() / 2.0;
            (!r.collinear && area > 0.05 * tri.diameter().powi(2) && tri.diameter() > 0.3).then_some(r)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn f_jk_affine_invariant(r in triangle_strategy(), s in 0.3..3.0f64, ang in 0.0..std::f64::consts::TAU, dx in -1.0..1.0f64, dy in -1.0..1.0f64) {
        let scale = C64::from_polar(s, ang);
        let shift = c(dx, dy);
        let map = |z: C64| scale * z + shift;
        let moved = CubicRoots::new(r.a.map(map)).unwrap();
        let b = r.centroid();
        for (j, k) in SIDES {
            let f0 = f_jk(&r, b, j, k, ChebRule::default()).unwrap();
            let f1 = f_jk(&moved, map(b), j, k, ChebRule::default()).unwrap();
            prop_assert!((f0 - f1).norm() < 1e-9, "{} {}", f0, f1);
        }
    }

    #[test]
    fn third_relation_and_start_value(r in triangle_strategy(), u in 0.1..0.8f64, v in 0.1..0.8f64) {
        let (u, v) = if u + v > 0.9 { (u / 2.0, v / 2.0) } else { (u, v) };
        let b = r.a[0] + (r.a[1] - r.a[0]) * u + (r.a[2] - r.a[0]) * v;
        let (_, r_2pi) = loop_identities(&r, b, ChebRule::new(400).unwrap()).unwrap_or((0.0, 0.0));
        prop_assert!(r_2pi < 1e-8);
        for i in 0..3 {
            let (j, k) = side_of(i);
            let f = f_jk(&r, r.a[i], j, k, ChebRule::default()).unwrap();
            prop_assert!((f - PI).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_set_is_branch_independent(t in 0.05..0.95f64) {
        // flipping the global sign negates Im f; the crossing on a probe
        // line is unchanged
        let r = skew();
        let (j, k) = side_of(0);
        let probe = |s: f64| c(0.2 + 0.75 * s, -0.3 * t);
        let g = |s: f64, sign: f64| sign * f_jk(&r, probe(s), j, k, ChebRule::default()).unwrap().im;
        let crossing = |sign: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            if g(lo, sign).signum() == g(hi, sign).signum() {
                return None;
            }
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                if g(m, sign).signum() == g(lo, sign).signum() { lo = m } else { hi = m }
            }
            Some(lo)
        };
        prop_assert_eq!(crossing(1.0), crossing(-1.0));
    }

    #[test]
    fn gamma_q_affine_covariant(r in triangle_strategy(), s in 0.5..2.0f64, ang in 0.0..std::f64::consts::TAU) {
        let scale = C64::from_polar(s, ang);
        let moved = CubicRoots::new(r.a.map(|z| scale * z)).unwrap();
        let b0 = find_b0(&r, 1e-12).unwrap();
        let b1 = find_b0(&moved, 1e-12).unwrap();
        prop_assert!((scale * b0 - b1).norm() < 1e-8 * r.diameter());
    }
}
