//! Abelian integrals over the sides of the root triangle.
//!
//! For a side `(a_j, a_k)` with opposite root `a_i`, substituting
//! `t = m + h cos(theta)` (`m`, `h` the midpoint and half-length) turns
//!
//! ```text
//! f_jk(b) = int_{a_j}^{a_k} sqrt((b - t) / ((t - a_1)(t - a_2)(t - a_3))) dt
//! ```
//!
//! into `int_0^pi sqrt((t - b) / (t - a_i)) dtheta`, which Chebyshev–Gauss
//! integrates with equal weights. The square root is continued node to node,
//! and its global sign is fixed by a homotopy in `b` from `b = a_i`, where the
//! integrand is identically 1 and `f_jk(a_i) = pi`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::poly::{Triangle, C64};

pub const DEFAULT_NODES: usize = 200;
pub const MAX_NODES: usize = 1600;
const HOMOTOPY_CHECKPOINTS: usize = 32;
/// Largest accepted change of `arg g` between neighbouring nodes.
const JUMP_LIMIT: f64 = PI / 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicRoots {
    pub a: [C64; 3],
    pub collinear: bool,
}

impl CubicRoots {
    pub fn new(a: [C64; 3]) -> Result<Self> {
        let tri = Triangle::new(a)?;
        Ok(CubicRoots { a, collinear: tri.collinear })
    }

    pub fn triangle(&self) -> Triangle {
        Triangle { vertices: self.a, collinear: self.collinear }
    }

    pub fn diameter(&self) -> f64 {
        self.triangle().diameter()
    }

    pub fn centroid(&self) -> C64 {
        (self.a[0] + self.a[1] + self.a[2]) / 3.0
    }

    fn require_triangle(&self) -> Result<()> {
        if self.collinear {
            Err(Error::Unsupported("collinear roots".into()))
        } else {
            Ok(())
        }
    }
}

/// Index of the root not in `{j, k}`.
pub fn third(j: usize, k: usize) -> usize {
    3 - j - k
}

/// Chebyshev–Gauss rule with `m` nodes on `[0, pi]` in the angle variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChebRule {
    pub m: usize,
}

impl ChebRule {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 {
            return Err(Error::InvalidInput("Chebyshev rule needs at least 8 nodes".into()));
        }
        Ok(ChebRule { m })
    }

    pub fn theta(&self, l: usize) -> f64 {
        (2 * l + 1) as f64 * PI / (2 * self.m) as f64
    }

    pub fn weight(&self) -> f64 {
        PI / self.m as f64
    }
}

impl Default for ChebRule {
    fn default() -> Self {
        ChebRule { m: DEFAULT_NODES }
    }
}

fn check_pair(j: usize, k: usize) -> Result<()> {
    if j > 2 || k > 2 || j == k {
        return Err(Error::InvalidInput(format!("invalid side ({j}, {k})")));
    }
    Ok(())
}

/// Closest of `w` and `-w` to `prev`.
fn align(w: C64, prev: C64) -> C64 {
    if (w * prev.conj()).re < 0.0 {
        -w
    } else {
        w
    }
}

fn arg_jump(r: C64, prev: C64) -> f64 {
    (r / prev).arg().abs()
}

/// Branch-tracked integrand values `g(theta_l) = sqrt((t_l - b)/(t_l - a_i))`.
fn integrand(roots: &CubicRoots, b: C64, j: usize, k: usize, rule: ChebRule) -> Result<Vec<(C64, C64)>> {
    let i = third(j, k);
    let (aj, ak, ai) = (roots.a[j], roots.a[k], roots.a[i]);
    let guard = 1e-9 * (ak - aj).norm();
    if open_segment_distance(aj, ak, b) < guard || open_segment_distance(aj, ak, ai) < guard {
        return Err(Error::BranchAmbiguity);
    }
    let mid = (aj + ak) / 2.0;
    let h = (ak - aj) / 2.0;
    let ratio = |t: C64| (t - b) / (t - ai);
    let t0 = mid + h * rule.theta(0).cos();
    let start = homotopy_start(ai, b, t0)?;
    let mut out = Vec::with_capacity(rule.m);
    let mut prev_r = ratio(t0);
    let mut prev_w = start;
    out.push((t0, start));
    for l in 1..rule.m {
        let t = mid + h * rule.theta(l).cos();
        let r = ratio(t);
        let jump = arg_jump(r, prev_r);
        if jump > JUMP_LIMIT {
            return Err(Error::RefineRule { m: rule.m, jump });
        }
        let w = align(r.sqrt(), prev_w);
        out.push((t, w));
        prev_r = r;
        prev_w = w;
    }
    Ok(out)
}

/// Value of the square root at the first node, continued along the straight
/// path `a_i -> b` from the value 1 at `b = a_i`.
fn homotopy_start(ai: C64, b: C64, t0: C64) -> Result<C64> {
    let at = |s: f64| {
        let bs = ai + (b - ai) * s;
        (t0 - bs) / (t0 - ai)
    };
    let mut w = C64::new(1.0, 0.0);
    let mut r_prev = C64::new(1.0, 0.0);
    let mut s_prev = 0.0;
    let step = 1.0 / HOMOTOPY_CHECKPOINTS as f64;
    while s_prev < 1.0 {
        let mut ds = step.min(1.0 - s_prev);
        let mut depth = 0;
        loop {
            let r = at(s_prev + ds);
            if r.norm() == 0.0 {
                return Err(Error::BranchAmbiguity);
            }
            if arg_jump(r, r_prev) <= JUMP_LIMIT {
                w = align(r.sqrt(), w);
                r_prev = r;
                s_prev += ds;
                break;
            }
            ds *= 0.5;
            depth += 1;
            if depth > 40 {
                return Err(Error::BranchAmbiguity);
            }
        }
    }
    Ok(w)
}

/// Perpendicular distance to the open segment `(a, b)`; points whose
/// projection falls outside it count as far away.
fn open_segment_distance(a: C64, b: C64, z: C64) -> f64 {
    let d = b - a;
    let u = ((z - a) * d.conj()).re / d.norm_sqr();
    if u <= 0.0 || u >= 1.0 {
        return f64::INFINITY;
    }
    (z - a - d * u).norm()
}

fn with_refinement<T>(rule: ChebRule, mut f: impl FnMut(ChebRule) -> Result<T>) -> Result<T> {
    let mut r = rule;
    loop {
        match f(r) {
            Err(Error::RefineRule { .. }) if r.m * 2 <= MAX_NODES => r = ChebRule { m: r.m * 2 },
            other => return other,
        }
    }
}

/// `f_jk(b)`, normalized so that `f_jk(a_i) = pi`. The rule is doubled up to
/// `MAX_NODES` when the branch tracking reports a coarse rule.
pub fn f_jk(roots: &CubicRoots, b: C64, j: usize, k: usize, rule: ChebRule) -> Result<C64> {
    check_pair(j, k)?;
    roots.require_triangle()?;
    with_refinement(rule, |r| {
        let g = integrand(roots, b, j, k, r)?;
        Ok(g.iter().map(|(_, w)| w).sum::<C64>() * r.weight())
    })
}

/// Derivative of `f_jk` in `b`, `int_0^pi g / (2 (b - t)) dtheta` with the
/// branch of `f_jk`.
pub fn f_jk_prime(roots: &CubicRoots, b: C64, j: usize, k: usize, rule: ChebRule) -> Result<C64> {
    check_pair(j, k)?;
    roots.require_triangle()?;
    with_refinement(rule, |r| {
        let g = integrand(roots, b, j, k, r)?;
        Ok(g.iter().map(|(t, w)| w / (2.0 * (b - t))).sum::<C64>() * r.weight())
    })
}

/// `f_jk` and its derivative from one pass over the nodes.
pub fn f_and_prime(roots: &CubicRoots, b: C64, j: usize, k: usize, rule: ChebRule) -> Result<(C64, C64)> {
    check_pair(j, k)?;
    roots.require_triangle()?;
    with_refinement(rule, |r| {
        let g = integrand(roots, b, j, k, r)?;
        let f = g.iter().map(|(_, w)| w).sum::<C64>() * r.weight();
        let d = g.iter().map(|(t, w)| w / (2.0 * (b - t))).sum::<C64>() * r.weight();
        Ok((f, d))
    })
}

/// `int_b^{a_i} sqrt((b - t)/Q(t)) dt` along the straight segment, with
/// `sqrt((t - a_j)(t - a_k))` continued from `t - m` at infinity, the branch
/// matching `f_jk` for `b` inside the triangle.
pub fn tail_integral(roots: &CubicRoots, b: C64, j: usize, k: usize, rule: ChebRule) -> Result<C64> {
    check_pair(j, k)?;
    roots.require_triangle()?;
    let i = third(j, k);
    let (aj, ak, ai) = (roots.a[j], roots.a[k], roots.a[i]);
    let mid = (aj + ak) / 2.0;
    let h = (ak - aj) / 2.0;
    let mut sum = C64::new(0.0, 0.0);
    for l in 0..rule.m {
        let x = rule.theta(l).cos();
        let t = b + (ai - b) * (1.0 + x) / 2.0;
        let s = (t - mid) / h;
        let g = h * s * (1.0 - 1.0 / (s * s)).sqrt();
        sum += (1.0 + x) * (ai - b) / (2.0 * g);
    }
    Ok(sum * rule.weight())
}

/// Residuals of the two loop identities at `b` inside the triangle:
/// `max |f_jk(b) + int_b^{a_i} - pi|` over the sides, and
/// `|f_23 + f_31 + f_12 - 2 pi|`.
pub fn loop_identities(roots: &CubicRoots, b: C64, rule: ChebRule) -> Result<(f64, f64)> {
    roots.require_triangle()?;
    let mut r_pi: f64 = 0.0;
    let mut sum = C64::new(0.0, 0.0);
    for (j, k) in SIDES {
        let f = f_jk(roots, b, j, k, rule)?;
        let tail = tail_integral(roots, b, j, k, rule)?;
        r_pi = r_pi.max((f + tail - PI).norm());
        sum += f;
    }
    Ok((r_pi, (sum - 2.0 * PI).norm()))
}

/// Sides as `(j, k)` with `j < k`, listed by their opposite root `i = 0, 1, 2`.
pub const SIDES: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

/// Side `(j, k)` opposite root `i`.
pub fn side_of(i: usize) -> (usize, usize) {
    SIDES[i]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn skew() -> CubicRoots {
        CubicRoots::new([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)]).unwrap()
    }

    #[test]
    fn value_pi_at_opposite_root() {
        let r = skew();
        for i in 0..3 {
            let (j, k) = side_of(i);
            let f = f_jk(&r, r.a[i], j, k, ChebRule::default()).unwrap();
            assert!((f - PI).norm() < 1e-13, "{f}");
        }
    }

    #[test]
    fn opposite_root_off_axis_reduces_to_chebyshev_weight() {
        // b = a_i leaves only the weight 1/sqrt((1 + t)(1 - t)) on [-1, 1]
        let r = CubicRoots::new([c(-1.0, 0.0), c(0.0, 0.5), c(1.0, 0.0)]).unwrap();
        let f = f_jk(&r, r.a[1], 0, 2, ChebRule::default()).unwrap();
        assert!((f - PI).norm() < 1e-13);
    }

    #[test]
    fn symmetric_under_side_orientation() {
        let r = skew();
        let b = c(0.6, -0.3);
        let f1 = f_jk(&r, b, 1, 2, ChebRule::default()).unwrap();
        let f2 = f_jk(&r, b, 2, 1, ChebRule::default()).unwrap();
        assert!((f1 - f2).norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let r = skew();
        let b = r.centroid();
        let rule = ChebRule::new(400).unwrap();
        for (j, k) in SIDES {
            let d = f_jk_prime(&r, b, j, k, rule).unwrap();
            let mut errs = Vec::new();
            for h in [1e-3, 1e-4] {
                for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let fd = (f_jk(&r, b + dir * h, j, k, rule).unwrap() - f_jk(&r, b - dir * h, j, k, rule).unwrap())
                        / (2.0 * h * dir);
                    errs.push((fd - d).norm());
                }
            }
            // O(h^2): shrinking h tenfold cuts the error by about 100
            assert!(errs[0] < 1e-5 && errs[2] < 1e-7, "{errs:?}");
        }
    }

    #[test]
    fn guard_rejects_points_on_the_side() {
        let r = skew();
        let on_side = c(1.0, -0.5);
        assert!(matches!(f_jk(&r, on_side, 1, 2, ChebRule::default()), Err(Error::BranchAmbiguity)));
        assert!(ChebRule::new(4).is_err());
    }

    #[test]
    fn loop_identities_equilateral() {
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let r = CubicRoots::new([c(1.0, 0.0), w, w * w]).unwrap();
        let (r_pi, r_2pi) = loop_identities(&r, c(0.0, 0.0), ChebRule::new(400).unwrap()).unwrap();
        assert!(r_pi < 1e-8 && r_2pi < 1e-8, "{r_pi} {r_2pi}");
    }
}
