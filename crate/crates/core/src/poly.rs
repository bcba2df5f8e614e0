//! Dense complex polynomials, Aberth root finding and triangle geometry.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub mod mp;

pub type C64 = Complex64;

/// Dense polynomial, `coeffs[k]` multiplies `z^k`. Trailing zeros are trimmed,
/// so the zero polynomial has no coefficients and no degree.
#[derive(Clone, Debug, PartialEq, Default, serde::Serialize)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut c = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            c.push(C64::new(0.0, 0.0));
            for k in (1..c.len()).rev() {
                c[k] = c[k - 1] - r * c[k];
            }
            c[0] = -r * c[0];
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Coefficients of `p(z + c)`.
    pub fn shift(&self, c: C64) -> Polynomial {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let next = a[k + 1];
                a[k] += c * next;
            }
        }
        Self::new(a)
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut c = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(C64::new(-1.0, 0.0))
    }
}

pub fn eval(p: &Polynomial, z: C64) -> C64 {
    p.eval(z)
}

pub fn derivative(p: &Polynomial) -> Polynomial {
    p.derivative()
}

/// Lexicographic order on (re, im); the single sort convention of the crate.
pub fn lex_cmp(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_lex(v: &mut [C64]) {
    v.sort_by(lex_cmp);
}

/// Positive root of `|a_n| x^n - sum_{k<n} |a_k| x^k`; every root lies in that disk.
pub(crate) fn cauchy_bound(abs_coeffs: &[f64]) -> f64 {
    let n = abs_coeffs.len() - 1;
    let lead = abs_coeffs[n];
    let g = |x: f64| {
        let mut v = lead;
        for k in (0..n).rev() {
            v = v * x - abs_coeffs[k];
        }
        v
    };
    if abs_coeffs[..n].iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Deterministic Aberth start: circle of Cauchy-bound radius about the root
/// centroid, equally spaced angles with phase offset 0.4.
pub(crate) fn aberth_start(center: C64, radius: f64, n: usize) -> Vec<C64> {
    let r = if radius > 0.0 { radius } else { 1.0 };
    (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            center + C64::from_polar(r, th)
        })
        .collect()
}

const ABERTH_MAX_ITER: usize = 800;

/// Roots by Aberth–Ehrlich iteration in double precision, sorted lexicographically.
pub fn roots(p: &Polynomial, tol: f64) -> Result<Vec<C64>> {
    let n = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(Error::InvalidInput("roots of a constant polynomial".into())),
    };
    let lead = p.leading();
    let monic = p.scale(lead.inv());
    let center = -monic.coeff(n - 1) / n as f64;
    let centered = monic.shift(center);
    let abs: Vec<f64> = centered.coeffs().iter().map(|c| c.norm()).collect();
    let mut z = aberth_start(center, cauchy_bound(&abs), n);
    let dp = monic.derivative();
    let abs_monic: Vec<f64> = monic.coeffs().iter().map(|c| c.norm()).collect();
    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_corr: f64 = 0.0;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let pv = monic.eval(z[k]);
            if pv == C64::new(0.0, 0.0) {
                done[k] = true;
                continue;
            }
            // |p(z)| at the Horner rounding level: take this correction, then stop
            let noisy = pv.norm() <= 4.0 * n as f64 * f64::EPSILON * eval_abs(&abs_monic, z[k].norm());
            let ratio = pv / dp.eval(z[k]);
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    s += (z[k] - z[j]).inv();
                }
            }
            let corr = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if corr.is_finite() {
                z[k] -= corr;
                max_corr = max_corr.max(corr.norm());
                if corr.norm() < tol || noisy {
                    done[k] = true;
                }
            } else {
                max_corr = f64::INFINITY;
            }
        }
        if max_corr < tol || done.iter().all(|&d| d) {
            sort_lex(&mut z);
            return Ok(z);
        }
    }
    let residual = z.iter().map(|&r| monic.eval(r).norm()).fold(0.0, f64::max);
    sort_lex(&mut z);
    Err(Error::RootsNoConvergence { best: z, residual })
}

fn eval_abs(abs: &[f64], r: f64) -> f64 {
    abs.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

/// Three vertices of a (possibly degenerate) triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [C64; 3],
    pub collinear: bool,
}

/// Relative tolerance of the collinearity test on `cross(e1, e2) / (|e1| |e2|)`.
pub const COLLINEAR_TOL: f64 = 1e-10;

pub fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

impl Triangle {
    pub fn new(vertices: [C64; 3]) -> Result<Self> {
        let [a, b, c] = vertices;
        if a == b || b == c || a == c {
            return Err(Error::RepeatedRoots);
        }
        let (e1, e2) = (b - a, c - a);
        let collinear = cross(e1, e2).abs() <= COLLINEAR_TOL * e1.norm() * e2.norm();
        Ok(Triangle { vertices, collinear })
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        (a - b).norm().max((b - c).norm()).max((a - c).norm())
    }

    pub fn centroid(&self) -> C64 {
        let [a, b, c] = self.vertices;
        (a + b + c) / 3.0
    }

    /// True when `z` is inside or on the boundary (non-collinear case).
    pub fn contains(&self, z: C64) -> bool {
        if self.collinear {
            return self.hull_distance(z) == 0.0;
        }
        let [a, b, c] = self.vertices;
        let d1 = cross(b - a, z - a);
        let d2 = cross(c - b, z - b);
        let d3 = cross(a - c, z - c);
        (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
    }

    /// Distance from `z` to the nearest side.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        let [a, b, c] = self.vertices;
        segment_distance(a, b, z)
            .min(segment_distance(b, c, z))
            .min(segment_distance(c, a, z))
    }

    pub fn hull_distance(&self, z: C64) -> f64 {
        if self.collinear {
            let [a, b, c] = self.vertices;
            // the two farthest vertices span the hull
            let pairs = [(a, b), (b, c), (a, c)];
            let &(p, q) = pairs
                .iter()
                .max_by(|x, y| (x.0 - x.1).norm().total_cmp(&(y.0 - y.1).norm()))
                .unwrap();
            return segment_distance(p, q, z);
        }
        if self.contains(z) {
            0.0
        } else {
            self.boundary_distance(z)
        }
    }
}

pub fn hull_distance(tri: &Triangle, z: C64) -> f64 {
    tri.hull_distance(z)
}

pub fn segment_distance(a: C64, b: C64, z: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = ((z - a) * d.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}
