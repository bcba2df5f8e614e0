use heun_spectra::poly::{roots, segment_distance};
use heun_spectra::{Polynomial, Triangle, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn point() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| c(x, y))
}

fn separated(r: &[C64], sep: f64) -> bool {
    r.iter().enumerate().all(|(i, a)| r[i + 1..].iter().all(|b| (a - b).norm() > sep))
}

fn small_int_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-20i32..20, -20i32..20), 1..10)
        .prop_map(|v| Polynomial::new(v.into_iter().map(|(a, b)| c(a as f64, b as f64)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_of_expansion_round_trip(r in prop::collection::vec(point(), 1..=12)) {
        prop_assume!(separated(&r, 1e-3));
        let found = roots(&Polynomial::from_roots(&r), 1e-14).unwrap();
        prop_assert_eq!(found.len(), r.len());
        // greedy matching; separation makes it unambiguous
        let mut left = found.clone();
        for z in &r {
            let (k, d) = left.iter().enumerate().map(|(k, w)| (k, (w - z).norm())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            prop_assert!(d < 1e-8, "{} off by {:e}", z, d);
            left.swap_remove(k);
        }
    }

    #[test]
    fn derivative_is_linear(p in small_int_poly(), q in small_int_poly(), a in -5i32..5, b in -5i32..5) {
        let (a, b) = (Polynomial::constant(c(a as f64, 0.0)), Polynomial::constant(c(0.0, b as f64)));
        let lhs = (&(&a * &p) + &(&b * &q)).derivative();
        let rhs = &(&a * &p.derivative()) + &(&b * &q.derivative());
        // integer coefficients keep every operation exact
        prop_assert_eq!(lhs.coeffs(), rhs.coeffs());
    }

    #[test]
    fn hull_distance_vanishes_inside(v in [point(), point(), point()], w in (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64)) {
        let tri = Triangle::new(v).unwrap();
        prop_assume!(!tri.collinear);
        let s = w.0 + w.1 + w.2;
        let z = (v[0] * w.0 + v[1] * w.1 + v[2] * w.2) / s;
        prop_assume!(tri.boundary_distance(z) > 1e-12);
        prop_assert_eq!(tri.hull_distance(z), 0.0);
        for a in v {
            prop_assert_eq!(tri.hull_distance(a), 0.0);
        }
    }

    #[test]
    fn hull_distance_below_vertex_distances(v in [point(), point(), point()], z in point(), u in point()) {
        let tri = Triangle::new(v).unwrap();
        let d = tri.hull_distance(z);
        prop_assert!(d >= 0.0);
        for a in v {
            prop_assert!(d <= (z - a).norm() + 1e-15);
        }
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])] {
            prop_assert!(d <= segment_distance(a, b, z) + 1e-15);
        }
        prop_assert!(d <= tri.hull_distance(u) + (z - u).norm() + 1e-12);
    }
}
