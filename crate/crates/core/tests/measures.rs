use heun_spectra::abelian::CubicRoots;
use heun_spectra::locus::{build_gamma_q, default_step};
use heun_spectra::measures::{balayage_gap, build_mi, cauchy, potential, ring, DiscreteMeasure};
use heun_spectra::poly::segment_distance;
use heun_spectra::spectrum::{solve, stieltjes_measure, HeunOperator, DEFAULT_CLUSTER_TOL};
use heun_spectra::{Polynomial, Triangle, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn skew() -> [C64; 3] {
    [c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)]
}

fn triangle() -> impl Strategy<Value = [C64; 3]> {
    prop::array::uniform3((-1.5..1.5f64, -1.5..1.5f64))
        .prop_map(|v| v.map(|(x, y)| c(x, y)))
        .prop_filter("well separated", |a| {
            Triangle::new(*a).map(|t| !t.collinear).unwrap_or(false) && (0..3).all(|i| (a[i] - a[(i + 1) % 3]).norm() > 0.3)
        })
}

fn measure() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(((-1.0..1.0f64, -1.0..1.0f64), -1.0..1.0f64), 1..12).prop_map(|v| {
        let (p, w): (Vec<_>, Vec<_>) = v.into_iter().map(|((x, y), w)| (c(x, y), w)).unzip();
        DiscreteMeasure::new(p, w, "random").unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_is_twice_the_z_derivative_of_potential(m in measure(), r in 1.6..4.0f64, ang in 0.0..std::f64::consts::TAU) {
        let z = C64::from_polar(r, ang);
        let h = 1e-4;
        let ux = (potential(&m, z + h).unwrap() - potential(&m, z - h).unwrap()) / (2.0 * h);
        let uy = (potential(&m, z + c(0.0, h)).unwrap() - potential(&m, z - c(0.0, h)).unwrap()) / (2.0 * h);
        let dz = c(ux, -uy) / 2.0;
        let want = cauchy(&m, z).unwrap() / 2.0;
        let scale: f64 = m.weights.iter().map(|w| w.abs()).sum();
        // O(h^2) plus cancellation in the difference quotients
        prop_assert!((dz - want).norm() < 1e-7 * scale.max(1.0), "{} vs {}", dz, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn emitted_measures_have_unit_mass(a in triangle(), n in 2usize..10) {
        let r = CubicRoots::new(a).unwrap();
        for i in 0..3 {
            let m = build_mi(&r, i, 40, 20).unwrap();
            prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
            prop_assert_eq!(m.len(), 800);
        }
        let s = solve(&HeunOperator::from_roots(a, Polynomial::zero()).unwrap(), n, DEFAULT_CLUSTER_TOL).unwrap();
        prop_assert!((s.measure.total_mass() - 1.0).abs() < 1e-12);
        let m = stieltjes_measure(&s.pairs[0]).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
        prop_assert_eq!(m.len(), n);
    }

    #[test]
    fn the_three_m_agree_far_out(a in triangle()) {
        let r = CubicRoots::new(a).unwrap();
        let m: Vec<_> = (0..3).map(|i| build_mi(&r, i, 200, 100).unwrap()).collect();
        let circle = ring(r.centroid(), 10.0 * r.diameter(), 32);
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            let g = balayage_gap(&m[x], &m[y], &circle).unwrap();
            prop_assert!(g < 1e-4 / r.diameter(), "{}", g);
        }
    }
}

/// Arc index and arclength fraction of the closest point of the locus.
fn project(arcs: &[Vec<C64>], z: C64) -> (usize, f64) {
    let mut best = (f64::INFINITY, 0, 0.0);
    for (i, a) in arcs.iter().enumerate() {
        let total: f64 = a.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let mut s = 0.0;
        for w in a.windows(2) {
            let len = (w[1] - w[0]).norm();
            let d = segment_distance(w[0], w[1], z);
            if d < best.0 {
                let t = if len > 0.0 { (((z - w[0]) * (w[1] - w[0]).conj()).re / (len * len)).clamp(0.0, 1.0) } else { 0.0 };
                best = (d, i, (s + t * len) / total);
            }
            s += len;
        }
    }
    (best.1, best.2)
}

#[test]
fn root_counting_measure_has_no_gaps_along_the_locus() {
    let r = CubicRoots::new(skew()).unwrap();
    let g = build_gamma_q(&r, default_step(&r), 1e-10).unwrap();
    let arcs: Vec<Vec<C64>> = g.arcs.iter().map(|a| a.points.clone()).collect();
    let s = solve(&HeunOperator::from_roots(skew(), Polynomial::zero()).unwrap(), 200, DEFAULT_CLUSTER_TOL).unwrap();
    const BINS: usize = 20;
    let mut counts = [[0usize; BINS]; 3];
    for t in &s.t_roots {
        let (i, f) = project(&arcs, *t);
        counts[i][((f * BINS as f64) as usize).min(BINS - 1)] += 1;
    }
    for (i, a) in arcs.iter().enumerate() {
        let b0_bin = if (a[0] - g.b0).norm() < (a[a.len() - 1] - g.b0).norm() { 0 } else { BINS - 1 };
        for (k, &n) in counts[i].iter().enumerate().take(BINS - 1).skip(1) {
            assert!(n > 0 || k == b0_bin, "arc {i} bin {k} empty: {:?}", counts[i]);
        }
    }
}
