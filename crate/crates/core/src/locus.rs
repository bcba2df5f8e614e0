//! The limiting root locus: arcs of `{Im f_jk = 0}` from each root of `Q`
//! to the common point `b_0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::{f_and_prime, f_jk, side_of, ChebRule, CubicRoots};
use crate::error::{Error, Result};
use crate::poly::{cross, segment_distance, C64};

pub const DEFAULT_ARC_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
const STALL_LIMIT: f64 = 1e-12;
const CORRECTOR_ITERS: usize = 12;
const NEWTON_ITERS: usize = 50;

#[derive(Clone, Debug, Serialize)]
pub struct LocusArc {
    pub i: usize,
    pub points: Vec<C64>,
    pub arc_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaQ {
    pub arcs: [LocusArc; 3],
    pub b0: C64,
    /// Collinear roots: the arcs are pieces of the segment between the
    /// extreme roots and `b0` is the middle root.
    pub degenerate: bool,
}

/// Default trace step, `diam / 200`.
pub fn default_step(roots: &CubicRoots) -> f64 {
    roots.diameter() / 200.0
}

fn im_f(roots: &CubicRoots, b: C64, i: usize) -> Result<f64> {
    let (j, k) = side_of(i);
    Ok(f_jk(roots, b, j, k, ChebRule::default())?.im)
}

/// Traces `Γ_i` from `a_i` to `b_0`.
pub fn trace_gamma(roots: &CubicRoots, i: usize, step: f64, arc_tol: f64) -> Result<LocusArc> {
    let b0 = find_b0(roots, DEFAULT_NEWTON_TOL)?;
    trace_to(roots, i, step, arc_tol, b0)
}

fn trace_to(roots: &CubicRoots, i: usize, step: f64, arc_tol: f64, b0: C64) -> Result<LocusArc> {
    let companion = (i + 1) % 3;
    let mut prev_sign = im_f(roots, roots.a[i], companion)?.signum();
    let mut crossed = false;
    let (mut points, end) = trace_curve(roots, i, step, arc_tol, |_, p| {
        let sign = im_f(roots, p, companion)?.signum();
        crossed = sign != prev_sign && sign != 0.0 && prev_sign != 0.0;
        prev_sign = sign;
        Ok(crossed)
    })?;
    if end != TraceEnd::Stopped {
        return Err(Error::CorrectorDiverged { last: *points.last().unwrap() });
    }
    // the vertex past the companion curve is replaced by b_0
    points.pop();
    if points.len() > 1 && (points.last().unwrap() - b0).norm() < step / 4.0 {
        points.pop();
    }
    points.push(b0);
    Ok(LocusArc { i, points, arc_tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    /// The predicate fired; the last vertex is the one that triggered it.
    Stopped,
    /// The next vertex would leave the root triangle.
    LeftTriangle,
}

/// Predictor–corrector trace of `{Im f_jk = 0}` from `a_i` into the triangle.
/// `stop(previous, candidate)` is asked about each new vertex.
pub fn trace_curve(
    roots: &CubicRoots,
    i: usize,
    step: f64,
    arc_tol: f64,
    mut stop: impl FnMut(C64, C64) -> Result<bool>,
) -> Result<(Vec<C64>, TraceEnd)> {
    if roots.collinear {
        return Err(Error::Unsupported("collinear roots".into()));
    }
    let mut b = roots.a[i];
    let mut points = vec![b];
    let mut prev_dir: Option<C64> = None;
    let tri = roots.triangle();
    let max_steps = (40.0 * roots.diameter() / step) as usize + 100;
    let rule = ChebRule::default();
    let (j, k) = side_of(i);
    for _ in 0..max_steps {
        let (_, d) = f_and_prime(roots, b, j, k, rule)?;
        if d.norm() < STALL_LIMIT {
            return Err(Error::StalledTrace { at: b });
        }
        let mut dir = d.conj() / d.norm();
        let flip = match prev_dir {
            None => (dir * (roots.centroid() - roots.a[i]).conj()).re < 0.0,
            Some(p) => (dir * p.conj()).re < 0.0,
        };
        if flip {
            dir = -dir;
        }
        prev_dir = Some(dir);
        let mut p = b + dir * step;
        if !tri.contains(p) || tri.boundary_distance(p) < 1e-6 * tri.diameter() {
            return Ok((points, TraceEnd::LeftTriangle));
        }
        let mut converged = false;
        for _ in 0..CORRECTOR_ITERS {
            let (f, d) = f_and_prime(roots, p, j, k, rule)?;
            if f.im.abs() < arc_tol {
                converged = true;
                break;
            }
            if d.norm() < STALL_LIMIT {
                return Err(Error::StalledTrace { at: p });
            }
            let normal = C64::i() * d.conj() / d.norm();
            p -= normal * (f.im / d.norm());
        }
        if !converged || (p - b).norm() > 2.0 * step {
            return Err(Error::CorrectorDiverged { last: b });
        }
        if !tri.contains(p) {
            return Ok((points, TraceEnd::LeftTriangle));
        }
        let fire = stop(b, p)?;
        points.push(p);
        if fire {
            return Ok((points, TraceEnd::Stopped));
        }
        b = p;
    }
    Err(Error::CorrectorDiverged { last: b })
}

/// Residuals `|Im f_jk(b)|` for the three sides.
pub fn residuals(roots: &CubicRoots, b: C64) -> Result<[f64; 3]> {
    Ok([im_f(roots, b, 0)?.abs(), im_f(roots, b, 1)?.abs(), im_f(roots, b, 2)?.abs()])
}

/// The common point of the three curves: Newton on `(Im f_23, Im f_31)` from
/// the centroid, with grid bisection as the fallback.
pub fn find_b0(roots: &CubicRoots, newton_tol: f64) -> Result<C64> {
    if roots.collinear {
        return Err(Error::Unsupported("collinear roots".into()));
    }
    if let Some(b) = newton_b0(roots, roots.centroid(), newton_tol)? {
        return Ok(b);
    }
    let start = b0_by_bisection(roots, 1e-6 * roots.diameter())?;
    match newton_b0(roots, start, newton_tol)? {
        Some(b) => Ok(b),
        None => b0_by_bisection(roots, 1e-13 * roots.diameter()),
    }
}

fn newton_b0(roots: &CubicRoots, start: C64, tol: f64) -> Result<Option<C64>> {
    let tri = roots.triangle();
    let rule = ChebRule::default();
    let mut b = start;
    for _ in 0..NEWTON_ITERS {
        let (f0, d0) = f_and_prime(roots, b, 1, 2, rule)?;
        let (f1, d1) = f_and_prime(roots, b, 0, 2, rule)?;
        if f0.im.abs() < tol && f1.im.abs() < tol && im_f(roots, b, 2)?.abs() < tol {
            return Ok(Some(b));
        }
        // d Im f = Im f' dx + Re f' dy
        let (a11, a12, a21, a22) = (d0.im, d0.re, d1.im, d1.re);
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            return Ok(None);
        }
        let dx = (-f0.im * a22 + f1.im * a12) / det;
        let dy = (-a11 * f1.im + a21 * f0.im) / det;
        let next = b + C64::new(dx, dy);
        if !tri.contains(next) || tri.boundary_distance(next) < 1e-9 * tri.diameter() {
            return Ok(None);
        }
        if next == b {
            return Ok(None);
        }
        b = next;
    }
    Ok(None)
}

/// Recursive 4-way subdivision of the root triangle keeping the cells on
/// which both `Im f_23` and `Im f_31` change sign, until cells are smaller
/// than `tol`.
pub fn b0_by_bisection(roots: &CubicRoots, tol: f64) -> Result<C64> {
    if roots.collinear {
        return Err(Error::Unsupported("collinear roots".into()));
    }
    type Cell = [C64; 3];
    // samples on the sides themselves are ambiguous and carry no sign
    let signs = |z: C64| -> Result<Option<[f64; 2]>> {
        match (im_f(roots, z, 0), im_f(roots, z, 1)) {
            (Ok(a), Ok(b)) => Ok(Some([a, b])),
            (Err(Error::BranchAmbiguity | Error::RefineRule { .. }), _)
            | (_, Err(Error::BranchAmbiguity | Error::RefineRule { .. })) => Ok(None),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    };
    let changes = |v: &[[f64; 2]], m: usize| {
        let lo = v.iter().any(|s| s[m] <= 0.0);
        let hi = v.iter().any(|s| s[m] >= 0.0);
        lo && hi
    };
    let split = |c: &Cell| -> [Cell; 4] {
        let [a, b, d] = *c;
        let (ab, bd, da) = ((a + b) / 2.0, (b + d) / 2.0, (d + a) / 2.0);
        [[a, ab, da], [ab, b, bd], [da, bd, d], [ab, bd, da]]
    };
    // start from a uniform level so that no curve slips between vertices
    let mut cells: Vec<Cell> = vec![roots.a];
    for _ in 0..4 {
        cells = cells.iter().flat_map(split).collect();
    }
    let diam = |c: &Cell| (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[0] - c[2]).norm());
    loop {
        let kept: Vec<Cell> = cells
            .par_iter()
            .map(|c| -> Result<Option<Cell>> {
                let centroid = (c[0] + c[1] + c[2]) / 3.0;
                let mut v = Vec::with_capacity(4);
                for z in [c[0], c[1], c[2], centroid] {
                    v.extend(signs(z)?);
                }
                Ok((v.len() >= 2 && changes(&v, 0) && changes(&v, 1)).then_some(*c))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if kept.is_empty() {
            return Err(Error::NoSignCell);
        }
        if diam(&kept[0]) < tol {
            let sum: C64 = kept.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).sum();
            return Ok(sum / kept.len() as f64);
        }
        cells = kept.iter().flat_map(split).collect();
    }
}

/// Assembles the three arcs. Collinear roots give the degenerate locus, the
/// segment between the extreme roots split at the middle one.
pub fn build_gamma_q(roots: &CubicRoots, step: f64, arc_tol: f64) -> Result<GammaQ> {
    if roots.collinear {
        return Ok(degenerate_gamma_q(roots, step, arc_tol));
    }
    let b0 = find_b0(roots, DEFAULT_NEWTON_TOL)?;
    let arcs: Vec<LocusArc> = (0..3)
        .into_par_iter()
        .map(|i| trace_to(roots, i, step, arc_tol, b0))
        .collect::<Result<_>>()?;
    let [a0, a1, a2]: [LocusArc; 3] = arcs.try_into().expect("three arcs");
    Ok(GammaQ { arcs: [a0, a1, a2], b0, degenerate: false })
}

fn degenerate_gamma_q(roots: &CubicRoots, step: f64, arc_tol: f64) -> GammaQ {
    let a = roots.a;
    let pairs = [(0, 1), (1, 2), (0, 2)];
    let &(p, q) = pairs
        .iter()
        .max_by(|x, y| (a[x.0] - a[x.1]).norm().total_cmp(&(a[y.0] - a[y.1]).norm()))
        .unwrap();
    let mid = 3 - p - q;
    let b0 = a[mid];
    let segment = |from: C64| {
        let pieces = ((b0 - from).norm() / step).ceil().max(1.0) as usize;
        (0..=pieces).map(|s| from + (b0 - from) * (s as f64 / pieces as f64)).collect::<Vec<_>>()
    };
    let arcs = [0, 1, 2].map(|i| LocusArc {
        i,
        points: if i == mid { vec![b0] } else { segment(a[i]) },
        arc_tol,
    });
    GammaQ { arcs, b0, degenerate: true }
}

/// Distance from `z` to the union of the arcs.
pub fn distance_to_locus(gq: &GammaQ, z: C64) -> f64 {
    gq.arcs
        .iter()
        .map(|arc| match arc.points.len() {
            0 => f64::INFINITY,
            1 => (arc.points[0] - z).norm(),
            _ => arc.points.windows(2).map(|w| segment_distance(w[0], w[1], z)).fold(f64::INFINITY, f64::min),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Point of `Γ_i` at the given fraction of its polyline arclength, projected
/// back onto `Im f_jk = 0` along the normal.
pub fn arc_point(roots: &CubicRoots, gq: &GammaQ, i: usize, frac: f64, tol: f64) -> Result<C64> {
    let pts = &gq.arcs.get(i).ok_or_else(|| Error::InvalidInput(format!("no arc {i}")))?.points;
    if pts.len() < 2 {
        return Ok(pts[0]);
    }
    let total: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let mut left = frac.clamp(0.0, 1.0) * total;
    let mut p = *pts.last().unwrap();
    for w in pts.windows(2) {
        let l = (w[1] - w[0]).norm();
        if left <= l {
            p = w[0] + (w[1] - w[0]) * (left / l.max(f64::MIN_POSITIVE));
            break;
        }
        left -= l;
    }
    if gq.degenerate {
        return Ok(p);
    }
    let (j, k) = side_of(i);
    for _ in 0..CORRECTOR_ITERS {
        let (f, d) = f_and_prime(roots, p, j, k, ChebRule::default())?;
        if f.im.abs() < tol {
            return Ok(p);
        }
        if d.norm() < STALL_LIMIT {
            return Err(Error::StalledTrace { at: p });
        }
        p -= C64::i() * d.conj() / d.norm() * (f.im / d.norm());
    }
    Err(Error::CorrectorDiverged { last: p })
}

/// The point of `{Im f_jk = 0}` on the line through `b_ref` parallel to the
/// side `(a_j, a_k)`, by bisection on the chord inside the triangle.
pub fn unique_b_on_line(roots: &CubicRoots, b_ref: C64, j: usize, k: usize) -> Result<C64> {
    if roots.collinear {
        return Err(Error::Unsupported("collinear roots".into()));
    }
    if j > 2 || k > 2 || j == k {
        return Err(Error::InvalidInput(format!("invalid side ({j}, {k})")));
    }
    let (j, k) = (j.min(k), j.max(k));
    let i = 3 - j - k;
    let a = roots.a;
    let e = a[k] - a[j];
    let height = |z: C64| cross(e, z - a[j]);
    let (hb, hi) = (height(b_ref), height(a[i]));
    let u = 1.0 - hb / hi;
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput("reference point outside the triangle".into()));
    }
    let p = a[i] + (a[j] - a[i]) * u;
    let q = a[i] + (a[k] - a[i]) * u;
    let f = |z: C64| -> Result<f64> { Ok(f_jk(roots, z, j, k, ChebRule::default())?.im) };
    if (q - p).norm() <= 1e-14 * roots.diameter() {
        return if f(p)?.abs() < 1e-10 { Ok(p) } else { Err(Error::NoSignChange) };
    }
    let (mut lo, mut hi_) = (0.0f64, 1.0f64);
    let (mut flo, fhi) = (f(p)?, f(q)?);
    if flo == 0.0 {
        return Ok(p);
    }
    if fhi == 0.0 {
        return Ok(q);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange);
    }
    let at = |s: f64| p + (q - p) * s;
    while (hi_ - lo) * (q - p).norm() > 1e-15 * roots.diameter() {
        let mid = 0.5 * (lo + hi_);
        if mid <= lo || mid >= hi_ {
            break;
        }
        let fm = f(at(mid))?;
        if fm == 0.0 {
            return Ok(at(mid));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi_ = mid;
        }
    }
    Ok(at(0.5 * (lo + hi_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn equilateral() -> CubicRoots {
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        CubicRoots::new([c(1.0, 0.0), w, w * w]).unwrap()
    }

    #[test]
    fn equilateral_b0_is_origin() {
        let b0 = find_b0(&equilateral(), 1e-12).unwrap();
        assert!(b0.norm() < 1e-10, "{b0}");
    }

    #[test]
    fn isoceles_b0_on_axis() {
        let r = CubicRoots::new([c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let b0 = find_b0(&r, 1e-12).unwrap();
        assert!(b0.re.abs() < 1e-10 && b0.im > 0.0 && b0.im < 1.0, "{b0}");
        let grid = b0_by_bisection(&r, 1e-10).unwrap();
        assert!((grid - b0).norm() < 1e-8);
    }

    #[test]
    fn equilateral_arcs_are_straight() {
        let r = equilateral();
        let step = default_step(&r);
        let gq = build_gamma_q(&r, step, 1e-10).unwrap();
        for arc in &gq.arcs {
            let dir = r.a[arc.i] / r.a[arc.i].norm();
            for p in &arc.points {
                assert!(cross(dir, *p).abs() < 1e-9, "{p}");
            }
            for w in arc.points.windows(2) {
                let s = (w[1] - w[0]).norm();
                assert!(s >= step / 4.0 && s <= 2.0 * step, "{s}");
            }
            assert_eq!(*arc.points.last().unwrap(), gq.b0);
        }
        let rotated = r.a[0] * C64::from_polar(1.0, PI / 3.0);
        // nearest arc point is the origin end of the arc towards a_1 or a_3
        let exact = segment_distance(c(0.0, 0.0), r.a[0], rotated)
            .min(segment_distance(c(0.0, 0.0), r.a[1], rotated))
            .min(segment_distance(c(0.0, 0.0), r.a[2], rotated));
        assert!((distance_to_locus(&gq, rotated) - exact).abs() < 1e-9);
    }

    #[test]
    fn degenerate_real_case() {
        let r = CubicRoots::new([c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let gq = build_gamma_q(&r, 0.01, 1e-10).unwrap();
        assert!(gq.degenerate);
        assert_eq!(gq.b0, c(0.0, 0.0));
        assert_eq!(gq.arcs[1].points, vec![c(0.0, 0.0)]);
        assert_eq!(distance_to_locus(&gq, c(0.3, 0.0)), 0.0);
        assert!((distance_to_locus(&gq, c(0.3, 0.2)) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn line_point_on_axis_by_symmetry() {
        let r = equilateral();
        let b = unique_b_on_line(&r, c(0.3, 0.0), 1, 2).unwrap();
        assert!(b.im.abs() < 1e-10, "{b}");
        let b0 = find_b0(&r, 1e-12).unwrap();
        let same = unique_b_on_line(&r, b0, 1, 2).unwrap();
        assert!((same - b0).norm() < 1e-9);
    }
}
