//! Discrete measures, Cauchy transforms and logarithmic potentials, the
//! limit-law residuals, and the averaged arcsine measures `M_i`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::CubicRoots;
use crate::error::{Error, Result};
use crate::poly::mp::MpPoly;
use crate::poly::{roots, Polynomial, C64};

/// Evaluation points closer than this to a support point are rejected.
pub const PROXIMITY: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteMeasure {
    pub points: Vec<C64>,
    pub weights: Vec<f64>,
    pub provenance: String,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<C64>, weights: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!("{} points but {} weights", points.len(), weights.len())));
        }
        Ok(DiscreteMeasure { points, weights, provenance: provenance.into() })
    }

    pub fn uniform(points: Vec<C64>, provenance: impl Into<String>) -> Self {
        let w = 1.0 / points.len() as f64;
        DiscreteMeasure { weights: vec![w; points.len()], points, provenance: provenance.into() }
    }

    /// Unit mass at one point.
    pub fn dirac(at: C64) -> Self {
        DiscreteMeasure { points: vec![at], weights: vec![1.0], provenance: "dirac".into() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        DiscreteMeasure {
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows `(re, im, weight)` for flat export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.iter().zip(&self.weights).map(|(p, w)| (p.re, p.im, *w))
    }

    fn check(&self, z: C64) -> Result<()> {
        if self.points.iter().any(|p| (z - p).norm() < PROXIMITY) {
            return Err(Error::Proximity { at: z });
        }
        Ok(())
    }
}

/// `C(z) = Σ w / (z - p)`.
pub fn cauchy(m: &DiscreteMeasure, z: C64) -> Result<C64> {
    m.check(z)?;
    Ok(m.points.iter().zip(&m.weights).map(|(p, w)| *w / (z - p)).sum())
}

/// `C`, `C'` and `C''` from the closed forms.
pub fn cauchy_derivatives(m: &DiscreteMeasure, z: C64) -> Result<[C64; 3]> {
    m.check(z)?;
    let mut out = [C64::new(0.0, 0.0); 3];
    for (p, w) in m.points.iter().zip(&m.weights) {
        let r = (z - p).inv();
        let r2 = r * r;
        out[0] += *w * r;
        out[1] -= *w * r2;
        out[2] += 2.0 * *w * r2 * r;
    }
    Ok(out)
}

/// `u(z) = Σ w log|z - p|`.
pub fn potential(m: &DiscreteMeasure, z: C64) -> Result<f64> {
    m.check(z)?;
    Ok(m.points.iter().zip(&m.weights).map(|(p, w)| w * (z - p).norm().ln()).sum())
}

/// `|C(z)^2 - Vt(z)/Q(z)|`.
pub fn ct_square_residual(m: &DiscreteMeasure, vt: &Polynomial, q: &Polynomial, z: C64) -> Result<f64> {
    if vt.degree() != Some(1) || (vt.leading() - 1.0).norm() > 1e-14 {
        return Err(Error::InvalidInput("Vt must be monic linear".into()));
    }
    let qz = q.eval(z);
    if qz.norm() < PROXIMITY {
        return Err(Error::Proximity { at: z });
    }
    let c = cauchy(m, z)?;
    Ok((c * c - vt.eval(z) / qz).norm())
}

/// `Q C'' + Q' C' + (Q''/8) C + Q'''/24` at `z`.
pub fn ct_ode_residual(m: &DiscreteMeasure, q: &Polynomial, z: C64) -> Result<C64> {
    let [c0, c1, c2] = cauchy_derivatives(m, z)?;
    let d1 = q.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    Ok(q.eval(z) * c2 + d1.eval(z) * c1 + d2.eval(z) / 8.0 * c0 + d3.eval(z) / 24.0)
}

/// Coefficients of `Q(z + a_i) = z^3 + v_i z^2 + w_i z`. The constant term
/// vanishes since `a_i` is a root, so `w_i` is the linear coefficient.
pub fn shifted_coefficients(roots: &CubicRoots, i: usize) -> (C64, C64) {
    let a = roots.a;
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    (2.0 * a[i] - a[j] - a[k], (a[i] - a[j]) * (a[i] - a[k]))
}

/// One arcsine measure of the family averaged into `M_i`, in coordinates
/// shifted by `a_i`.
#[derive(Clone, Debug, Serialize)]
pub struct ArcsineSlice {
    pub tau: f64,
    pub center: C64,
    /// `2 √ψ(τ)`; the slice is `[center - half_length, center + half_length]`.
    pub half_length: C64,
    pub nodes: usize,
}

impl ArcsineSlice {
    pub fn new(v: C64, w: C64, tau: f64, nodes: usize) -> Self {
        let s = (1.0 - tau) * (1.0 - tau);
        let center = -v * s;
        let psi = -w * (1.0 - s) * s;
        ArcsineSlice { tau, center, half_length: 2.0 * psi.sqrt(), nodes }
    }

    /// Chebyshev-angle nodes, each carrying weight `1/nodes`.
    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        let n = self.nodes as f64;
        (1..=self.nodes).map(move |k| self.center + self.half_length * ((2 * k - 1) as f64 * PI / (2.0 * n)).cos())
    }
}

/// `M_i`: midpoint rule in `τ`, arcsine nodes on each slice.
pub fn build_mi(roots: &CubicRoots, i: usize, tau_nodes: usize, slice_nodes: usize) -> Result<DiscreteMeasure> {
    if i > 2 || tau_nodes == 0 || slice_nodes == 0 {
        return Err(Error::InvalidInput("need i < 3 and positive node counts".into()));
    }
    let (v, w) = shifted_coefficients(roots, i);
    let a = roots.a[i];
    let weight = 1.0 / (tau_nodes * slice_nodes) as f64;
    let mut points = Vec::with_capacity(tau_nodes * slice_nodes);
    for t in 0..tau_nodes {
        let tau = (t as f64 + 0.5) / tau_nodes as f64;
        points.extend(ArcsineSlice::new(v, w, tau, slice_nodes).points().map(|z| z + a));
    }
    let n = points.len();
    Ok(DiscreteMeasure { points, weights: vec![weight; n], provenance: format!("M_{} ({tau_nodes} x {slice_nodes})", i + 1) })
}

/// Largest Cauchy-transform gap over the ring.
pub fn balayage_gap(mi: &DiscreteMeasure, mu: &DiscreteMeasure, ring: &[C64]) -> Result<f64> {
    ring.iter().try_fold(0.0f64, |acc, &z| Ok(acc.max((cauchy(mi, z)? - cauchy(mu, z)?).norm())))
}

/// Points of the circle `|z - center| = radius`.
pub fn ring(center: C64, radius: f64, count: usize) -> Vec<C64> {
    (0..count).map(|k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / count as f64)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub grid_points: usize,
    /// Largest `u' - u` over the grid.
    pub max_excess: f64,
    pub worst_point: C64,
    /// Grid points with `u' > u + 1e-9`.
    pub violations: usize,
    /// Points farther than twice the root radius from the root centroid.
    pub far_points: usize,
    /// Largest `|u' - u|` over those.
    pub far_max_diff: f64,
    pub root_radius: f64,
    pub inequality_holds: bool,
    pub far_equality_holds: bool,
}

impl PotentialReport {
    pub fn passed(&self) -> bool {
        self.inequality_holds && self.far_equality_holds
    }
}

/// `u' - u` on the grid from the roots of `p` and `p'`.
pub fn potential_check_from_roots(rp: &[C64], rd: &[C64], grid: &[C64]) -> Result<PotentialReport> {
    let mp = DiscreteMeasure::uniform(rp.to_vec(), "roots of p");
    let md = DiscreteMeasure::uniform(rd.to_vec(), "roots of p'");
    let centroid = rp.iter().sum::<C64>() / rp.len() as f64;
    let radius = rp.iter().map(|r| (r - centroid).norm()).fold(0.0, f64::max);
    let diffs: Vec<(C64, f64)> = grid
        .par_iter()
        .map(|&z| Ok((z, potential(&md, z)? - potential(&mp, z)?)))
        .collect::<Result<_>>()?;
    let (worst_point, max_excess) =
        diffs.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((C64::new(0.0, 0.0), f64::NEG_INFINITY));
    let violations = diffs.iter().filter(|d| d.1 > 1e-9).count();
    let far: Vec<f64> = diffs.iter().filter(|d| (d.0 - centroid).norm() > 2.0 * radius).map(|d| d.1.abs()).collect();
    let far_max_diff = far.iter().copied().fold(0.0, f64::max);
    Ok(PotentialReport {
        grid_points: grid.len(),
        max_excess,
        worst_point,
        violations,
        far_points: far.len(),
        far_max_diff,
        root_radius: radius,
        inequality_holds: violations == 0,
        far_equality_holds: far_max_diff < 1e-6,
    })
}

/// Compares the potentials `u` of the root-counting measure of `p` and `u'`
/// of `p'` on the grid.
pub fn derivative_potential_check(p: &Polynomial, grid: &[C64]) -> Result<PotentialReport> {
    if p.degree().unwrap_or(0) < 2 {
        return Err(Error::InvalidInput("degree must be at least 2".into()));
    }
    potential_check_from_roots(&roots(p, 1e-14)?, &roots(&p.derivative(), 1e-14)?, grid)
}

/// The same check with the roots of `p` and `p'` found at the working
/// precision of `p`.
pub fn derivative_potential_check_mp(p: &MpPoly, grid: &[C64]) -> Result<PotentialReport> {
    if p.degree() < 2 {
        return Err(Error::InvalidInput("degree must be at least 2".into()));
    }
    potential_check_from_roots(&p.roots()?, &p.derivative().roots()?, grid)
}

/// `n x n` grid over the square of half-width `half` about `center`,
/// dropping points within `avoid` of any of the given points.
pub fn square_grid(center: C64, half: f64, n: usize, avoid: &[C64], clearance: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let s = |k: usize| if n == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (n - 1) as f64 };
            let z = center + C64::new(s(a), s(b));
            if avoid.iter().all(|r| (z - r).norm() >= clearance) {
                out.push(z);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cauchy_examples() {
        let z = c(0.3, 1.7);
        assert!((cauchy(&DiscreteMeasure::dirac(c(0.0, 0.0)), z).unwrap() - z.inv()).norm() < 1e-15);
        let two = DiscreteMeasure::uniform(vec![c(-1.0, 0.0), c(1.0, 0.0)], "pm1");
        assert!((cauchy(&two, z).unwrap() - z / (z * z - 1.0)).norm() < 1e-15);
        assert!(matches!(cauchy(&two, c(1.0, 1e-13)), Err(Error::Proximity { .. })));
    }

    #[test]
    fn potential_examples() {
        let two = DiscreteMeasure::uniform(vec![c(-1.0, 0.0), c(1.0, 0.0)], "pm1");
        let u = potential(&two, c(3.0, 0.0)).unwrap();
        assert!((u - (2f64.ln() + 4f64.ln()) / 2.0).abs() < 1e-15);
        let z = c(1e6, 0.0);
        assert!((potential(&two, z).unwrap() - z.norm().ln()).abs() < 1e-5);
    }

    #[test]
    fn ode_residual_of_a_point_mass() {
        let q = Polynomial::from_real(&[0.0, -1.0, 0.0, 1.0]);
        let d = DiscreteMeasure::dirac(c(0.0, 0.0));
        for z in [c(2.0, 0.5), c(-0.7, 3.0)] {
            let r = ct_ode_residual(&d, &q, z).unwrap();
            assert!((r + (z * z).inv()).norm() < 1e-12);
            let r2 = ct_ode_residual(&d.scaled(2.0), &q, z).unwrap();
            // the constant term Q'''/24 does not scale
            assert!((r2 - 0.25 - 2.0 * (r - 0.25)).norm() < 1e-12);
        }
    }

    #[test]
    fn slice_endpoints() {
        let r = CubicRoots::new([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)]).unwrap();
        for i in 0..3 {
            let (v, w) = shifted_coefficients(&r, i);
            // Q(z + a_i) expanded by hand
            let z = c(0.37, -0.21);
            let q = (z + r.a[i] - r.a[0]) * (z + r.a[i] - r.a[1]) * (z + r.a[i] - r.a[2]);
            assert!((q - (z * z * z + v * z * z + w * z)).norm() < 1e-14);
            let s1 = ArcsineSlice::new(v, w, 1.0, 5);
            assert!(s1.center.norm() < 1e-15 && s1.half_length.norm() < 1e-15);
            let s0 = ArcsineSlice::new(v, w, 0.0, 5);
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            assert!((s0.center + r.a[i] - (r.a[j] + r.a[k] - r.a[i])).norm() < 1e-14);
            assert!(s0.half_length.norm() < 1e-15);
        }
        let m = build_mi(&r, 0, 10, 7).unwrap();
        assert_eq!(m.len(), 70);
        assert!((m.total_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn potential_check_on_monomials_and_z2_minus_1() {
        let grid = square_grid(c(0.05, 0.05), 3.0, 20, &[c(0.0, 0.0)], 1e-2);
        // z^6: both root measures sit at 0
        let rep = potential_check_from_roots(&[c(0.0, 0.0); 6], &[c(0.0, 0.0); 5], &grid).unwrap();
        assert!(rep.max_excess.abs() < 1e-15 && rep.passed());
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        let rep = derivative_potential_check(&p, &grid).unwrap();
        // u' = log|z|, u = log|z^2 - 1| / 2: u' exceeds u near the real axis
        // outside the roots (at z = 3, log 3 > log 8 / 2)
        assert!(rep.violations > 0);
        let z = c(3.0, 0.0);
        assert!(z.norm().ln() > (z * z - 1.0).norm().ln() / 2.0);
    }
}
