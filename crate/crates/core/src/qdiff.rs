//! Rational quadratic differentials `Ψ = R(z) dz²` with `R = -U_1/U_2`,
//! their horizontal and vertical trajectories, and the singular graph.
//!
//! Trajectories are traced in the canonical coordinate `w = ∫ √R dz`:
//! horizontal ones keep `Im w` fixed, so `dz/ds = 1/√R` with `s = Re w`.
//! Near a simple pole or zero the integral is evaluated exactly after the
//! substitution `ζ = p + u²`, which is how launch points are placed on the
//! right level and how capture gaps are measured.

pub mod graph;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::abelian::CubicRoots;
use crate::error::{Error, Result};
use crate::poly::{roots, Polynomial, C64};

pub use graph::{
    admits_positive, classify, enumerate_measures, singular_graph, two_zero_four_pole_graph, Face, GraphEdge,
    GraphVertex, SignedMeasureSpec, SingularGraph, StrebelStatus,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Zero,
    Pole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Horizontal,
    Vertical,
}

impl TrajectoryKind {
    /// `√R dz` is `kappa` times a positive real along the trajectory.
    fn kappa(self) -> C64 {
        match self {
            TrajectoryKind::Horizontal => C64::new(1.0, 0.0),
            TrajectoryKind::Vertical => C64::new(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularPoint {
    pub pos: C64,
    pub kind: PointKind,
    /// Residue of `R` at a pole, `R'(z_0)` at a zero.
    pub coeff: C64,
    /// Number of coincident roots; only 1 is supported by the local theory.
    pub order: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadDiff {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
    pub points: Vec<SingularPoint>,
    /// Per point, the other factor of `R` with the vanishing one divided out.
    #[serde(skip)]
    reduced: Vec<(Polynomial, Polynomial)>,
}

fn deflate(p: &Polynomial, root: C64) -> Polynomial {
    // synthetic division by (z - root)
    let c = p.coeffs();
    let n = c.len() - 1;
    let mut q = vec![C64::new(0.0, 0.0); n];
    let mut acc = C64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        acc = acc * root + c[k];
        q[k - 1] = acc;
    }
    Polynomial::new(q)
}

impl QuadDiff {
    /// `Ψ = -(U_1/U_2) dz²` with monic `U_1`, `U_2` and `deg U_2 - deg U_1 = 2`.
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        let (d1, d2) = match (numerator.degree(), denominator.degree()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidInput("zero polynomial in quadratic differential".into())),
        };
        if d2 != d1 + 2 {
            return Err(Error::InvalidInput("deg U_2 - deg U_1 must be 2".into()));
        }
        let monic = |p: &Polynomial| (p.leading() - C64::new(1.0, 0.0)).norm() < 1e-12;
        if !monic(&numerator) || !monic(&denominator) {
            return Err(Error::InvalidInput("U_1 and U_2 must be monic".into()));
        }
        let zeros = if d1 > 0 { roots(&numerator, 1e-14)? } else { vec![] };
        let poles = roots(&denominator, 1e-14)?;
        let all: Vec<C64> = zeros.iter().chain(poles.iter()).copied().collect();
        let scale = spread(&all).max(1e-300);
        let mut points = Vec::new();
        let mut reduced = Vec::new();
        for (list, kind) in [(&zeros, PointKind::Zero), (&poles, PointKind::Pole)] {
            for &z in list.iter() {
                let order = all.iter().filter(|&&o| (o - z).norm() < 1e-9 * scale).count();
                let (num, den) = match kind {
                    PointKind::Zero => (deflate(&numerator, z), denominator.clone()),
                    PointKind::Pole => (numerator.clone(), deflate(&denominator, z)),
                };
                // R = -num/den times (z - p)^{+-1}
                let coeff = match kind {
                    PointKind::Zero => -num.eval(z) / den.eval(z),
                    PointKind::Pole => -num.eval(z) / den.eval(z),
                };
                points.push(SingularPoint { pos: z, kind, coeff, order });
                reduced.push((num, den));
            }
        }
        Ok(QuadDiff { numerator, denominator, points, reduced })
    }

    pub fn r(&self, z: C64) -> C64 {
        -self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// Diameter of the finite singular set (1 for a single point).
    pub fn scale(&self) -> f64 {
        let pts: Vec<C64> = self.points.iter().map(|p| p.pos).collect();
        let s = spread(&pts);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn center(&self) -> C64 {
        let n = self.points.len().max(1) as f64;
        self.points.iter().map(|p| p.pos).sum::<C64>() / n
    }

    fn nearest(&self, z: C64) -> (usize, f64) {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p.pos - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((usize::MAX, f64::INFINITY))
    }

    /// `∫_{p}^{z} √R dζ` from singular point `id` to a nearby `z`, with the
    /// branch that equals `sq_at_z` at `z`.
    fn tail(&self, id: usize, z: C64, sq_at_z: C64) -> C64 {
        let p = &self.points[id];
        let (num, den) = &self.reduced[id];
        let u_end = (z - p.pos).sqrt();
        // smooth factor: R = g/(ζ-p) at a pole, R = h (ζ-p) at a zero
        let smooth = |zeta: C64| -num.eval(zeta) / den.eval(zeta);
        let mut root = match p.kind {
            PointKind::Pole => sq_at_z * u_end,
            PointKind::Zero => sq_at_z / u_end,
        };
        let (nodes, weights) = gauss_legendre_01();
        let mut sum = C64::new(0.0, 0.0);
        for k in (0..nodes.len()).rev() {
            let u = u_end * nodes[k];
            root = align(smooth(p.pos + u * u).sqrt(), root);
            sum += weights[k]
                * match p.kind {
                    PointKind::Pole => 2.0 * root,
                    PointKind::Zero => 2.0 * u * u * root,
                };
        }
        sum * u_end
    }

    /// Distance by which a trajectory at level offset `eps` misses point `id`.
    fn gap_distance(&self, id: usize, eps: f64) -> f64 {
        let p = &self.points[id];
        match p.kind {
            PointKind::Pole => eps * eps / (4.0 * p.coeff.norm()),
            PointKind::Zero => (3.0 * eps / (2.0 * p.coeff.norm().sqrt())).powf(2.0 / 3.0),
        }
    }
}

fn spread(pts: &[C64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn align(w: C64, reference: C64) -> C64 {
    if (w * reference.conj()).re < 0.0 {
        -w
    } else {
        w
    }
}

/// 16-point Gauss–Legendre rule on `[0, 1]`.
fn gauss_legendre_01() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let r = RULE.get_or_init(|| {
        let n = 16;
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
                let dt = p1 / dp;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            x.push((1.0 - t) / 2.0);
            w.push(1.0 / ((1.0 - t * t) * dp * dp));
        }
        (x, w)
    });
    (&r.0, &r.1)
}

/// `R = (b - z)/Q(z)`, cancelling the common factor when `b` is a root.
pub fn heun_qdiff(roots: &CubicRoots, b: C64) -> QuadDiff {
    let tol = 1e-14 * roots.diameter().max(1.0);
    let hit = roots.a.iter().position(|a| (a - b).norm() <= tol);
    let (u1, u2) = match hit {
        Some(i) => {
            let rest: Vec<C64> = (0..3).filter(|&m| m != i).map(|m| roots.a[m]).collect();
            (Polynomial::constant(C64::new(1.0, 0.0)), Polynomial::from_roots(&rest))
        }
        None => (Polynomial::from_roots(&[b]), Polynomial::from_roots(&roots.a)),
    };
    QuadDiff::new(u1, u2).expect("Heun differential is well formed")
}

/// Unit directions of the trajectories of the given kind leaving singular
/// point `id`: one at a simple pole, three at a simple zero.
pub fn launch_directions(qd: &QuadDiff, id: usize, kind: TrajectoryKind) -> Result<Vec<C64>> {
    let p = qd.points.get(id).ok_or_else(|| Error::InvalidInput(format!("no singular point {id}")))?;
    if p.order != 1 {
        return Err(Error::Unsupported("zero or pole of higher order".into()));
    }
    let shift = match kind {
        TrajectoryKind::Horizontal => 0.0,
        TrajectoryKind::Vertical => PI,
    };
    let arg = p.coeff.arg();
    Ok(match p.kind {
        // rho e^{i alpha} / r > 0 (horizontal) or < 0 (vertical)
        PointKind::Pole => vec![C64::from_polar(1.0, shift - arg)],
        // sigma r e^{3 i alpha} > 0 or < 0
        PointKind::Zero => (0..3).map(|m| C64::from_polar(1.0, (shift - arg + 2.0 * PI * m as f64) / 3.0)).collect(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceControls {
    pub r_cap: f64,
    pub r_esc: f64,
    pub launch_offset: f64,
    pub max_arclength: f64,
    /// Step length as a fraction of the distance to the nearest singular point.
    pub step_fraction: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl TraceControls {
    pub fn for_qdiff(qd: &QuadDiff) -> Self {
        let d = qd.scale();
        TraceControls {
            r_cap: 1e-3 * d,
            r_esc: 50.0 * d,
            launch_offset: 1e-2 * d,
            max_arclength: 200.0 * d,
            step_fraction: 5e-3,
            h_max: 0.05 * d,
            max_steps: 400_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Origin {
    Singular { id: usize, slot: usize },
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Terminal {
    /// Captured at singular point `id`, arriving along launch slot `slot`;
    /// `gap` is the distance by which the level set misses the point.
    Hit { id: usize, slot: usize, gap: f64 },
    Escaped,
    Closed,
    Exhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySegment {
    pub points: Vec<C64>,
    /// Running `Re(w/kappa)` at each point, starting from 0.
    pub w: Vec<f64>,
    pub origin: Origin,
    pub terminal: Terminal,
    pub kind: TrajectoryKind,
    pub arclength: f64,
    /// Largest `|Im(w/kappa)|` seen along the trace.
    pub level_drift: f64,
}

struct Tracer<'a> {
    qd: &'a QuadDiff,
    c: TraceControls,
    kappa: C64,
    kind: TrajectoryKind,
    center: C64,
}

impl<'a> Tracer<'a> {
    fn sqrt_r(&self, z: C64, reference: C64) -> C64 {
        align(self.qd.r(z).sqrt(), reference)
    }

    /// One RK4 step of `dz/ds = kappa/√R` covering Euclidean length about `h`.
    fn step(&self, z: C64, sq: C64, h: f64) -> (C64, C64, C64) {
        let ds = h * sq.norm();
        let f = |p: C64, r: C64| {
            let s = self.sqrt_r(p, r);
            (self.kappa / s, s)
        };
        let k1 = self.kappa / sq;
        let (k2, s2) = f(z + k1 * (ds / 2.0), sq);
        let (k3, s3) = f(z + k2 * (ds / 2.0), s2);
        let (k4, s4) = f(z + k3 * ds, s3);
        let z1 = z + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (ds / 6.0);
        // increment of w along the chord, 3-point Gauss-Legendre
        let g = [(0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0)];
        let mut r = sq;
        let mut dw = C64::new(0.0, 0.0);
        for (x, wt) in g {
            r = self.sqrt_r(z + (z1 - z) * x, r);
            dw += wt * r;
        }
        let dw = dw * (z1 - z);
        (z1, align(self.qd.r(z1).sqrt(), s4), dw)
    }

    fn run(&self, start: C64, sq0: C64, w0: C64, origin: Origin, first: Vec<(C64, f64)>) -> Result<TrajectorySegment> {
        let qd = self.qd;
        let c = &self.c;
        let mut points: Vec<C64> = first.iter().map(|p| p.0).collect();
        let mut ws: Vec<f64> = first.iter().map(|p| p.1).collect();
        let (mut z, mut sq, mut w) = (start, sq0, w0);
        let mut arclength = 0.0;
        let mut drift: f64 = (w / self.kappa).im.abs();
        let origin_id = match origin {
            Origin::Singular { id, .. } => Some(id),
            Origin::Point => None,
        };
        let mut left_origin = false;
        let start_heading = self.kappa / sq;
        let mut h = c.h_max;
        for _ in 0..c.max_steps {
            let (near, dmin) = qd.nearest(z);
            let target = (c.step_fraction * dmin).min(c.h_max);
            h = (2.0 * h).min(target);
            if h < 1e-14 * qd.scale() {
                return Err(Error::StepCollapse { at: z });
            }
            let (mut z1, mut sq1, mut dw) = self.step(z, sq, h);
            let heading = (self.kappa / sq).arg();
            let turn = |s: C64| ((self.kappa / s).arg() - heading + PI).rem_euclid(2.0 * PI) - PI;
            let mut tries = 0;
            while turn(sq1).abs() > 0.1 && tries < 40 {
                h /= 2.0;
                (z1, sq1, dw) = self.step(z, sq, h);
                tries += 1;
            }
            // project back onto the level set
            w += dw;
            let e = (w / self.kappa).im;
            let delta = -C64::i() * self.kappa * e / sq1;
            z1 += delta;
            w += sq1 * delta;
            sq1 = self.sqrt_r(z1, sq1);
            drift = drift.max((w / self.kappa).im.abs());
            arclength += (z1 - z).norm();
            let prev = z;
            z = z1;
            sq = sq1;
            points.push(z);
            ws.push((w / self.kappa).re);
            if let Some(o) = origin_id {
                if (z - qd.points[o].pos).norm() > 2.0 * c.launch_offset {
                    left_origin = true;
                }
            }
            // capture
            let (near1, d1) = qd.nearest(z);
            let _ = near;
            if d1 < c.r_cap && (Some(near1) != origin_id || left_origin) {
                let tail = qd.tail(near1, z, sq);
                let total = w - tail;
                let eps = (total / self.kappa).im.abs();
                let gap = qd.gap_distance(near1, eps);
                if gap < 0.5 * c.r_cap {
                    let slot = arrival_slot(qd, near1, z, self.kind)?;
                    points.push(qd.points[near1].pos);
                    ws.push((total / self.kappa).re);
                    return Ok(self.finish(points, ws, origin, Terminal::Hit { id: near1, slot, gap }, arclength, drift));
                }
            }
            if (z - self.center).norm() > c.r_esc {
                return Ok(self.finish(points, ws, origin, Terminal::Escaped, arclength, drift));
            }
            if origin_id.is_none() && arclength > 4.0 * h {
                let d = crate::poly::segment_distance(prev, z, start);
                let tol = c.r_cap + h * h / dmin.max(1e-300);
                if d < tol && ((self.kappa / sq) * start_heading.conj()).re > 0.0 && arclength > 10.0 * tol {
                    points.push(start);
                    ws.push((w / self.kappa).re);
                    return Ok(self.finish(points, ws, origin, Terminal::Closed, arclength, drift));
                }
            }
            if arclength > c.max_arclength {
                break;
            }
        }
        Ok(self.finish(points, ws, origin, Terminal::Exhausted, arclength, drift))
    }

    fn finish(
        &self,
        points: Vec<C64>,
        w: Vec<f64>,
        origin: Origin,
        terminal: Terminal,
        arclength: f64,
        level_drift: f64,
    ) -> TrajectorySegment {
        TrajectorySegment { points, w, origin, terminal, kind: self.kind, arclength, level_drift }
    }
}

fn arrival_slot(qd: &QuadDiff, id: usize, z: C64, kind: TrajectoryKind) -> Result<usize> {
    let dirs = launch_directions(qd, id, kind)?;
    let u = (z - qd.points[id].pos) / (z - qd.points[id].pos).norm();
    Ok(dirs
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 * u.conj()).re.total_cmp(&(b.1 * u.conj()).re))
        .map(|(i, _)| i)
        .unwrap_or(0))
}

fn tracer(qd: &QuadDiff, kind: TrajectoryKind, c: TraceControls) -> Tracer<'_> {
    Tracer { qd, c, kappa: kind.kappa(), kind, center: qd.center() }
}

/// Traces from a regular point `start` with initial heading close to `dir`.
pub fn trace(qd: &QuadDiff, start: C64, dir: C64, kind: TrajectoryKind, controls: TraceControls) -> Result<TrajectorySegment> {
    let t = tracer(qd, kind, controls);
    let r = qd.r(start);
    if r.norm() == 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput("start point is singular".into()));
    }
    let mut sq = r.sqrt();
    if ((t.kappa / sq) * dir.conj()).re < 0.0 {
        sq = -sq;
    }
    t.run(start, sq, C64::new(0.0, 0.0), Origin::Point, vec![(start, 0.0)])
}

/// Traces the trajectory leaving singular point `id` along launch slot `slot`.
pub fn launch(qd: &QuadDiff, id: usize, slot: usize, kind: TrajectoryKind, controls: TraceControls) -> Result<TrajectorySegment> {
    let dirs = launch_directions(qd, id, kind)?;
    let dir = *dirs.get(slot).ok_or_else(|| Error::InvalidInput(format!("no launch slot {slot}")))?;
    let t = tracer(qd, kind, controls);
    let p = qd.points[id].pos;
    let mut z = p + dir * controls.launch_offset;
    let orient = |s: C64| if ((t.kappa / s) * dir.conj()).re < 0.0 { -s } else { s };
    let mut sq = orient(qd.r(z).sqrt());
    let mut w = qd.tail(id, z, sq);
    for _ in 0..4 {
        let e = (w / t.kappa).im;
        z += -C64::i() * t.kappa * e / sq;
        sq = align(qd.r(z).sqrt(), sq);
        w = qd.tail(id, z, sq);
    }
    let first = vec![(p, 0.0), (z, (w / t.kappa).re)];
    t.run(z, sq, w, Origin::Singular { id, slot }, first)
}

/// All trajectories of the given kind leaving the finite singular points.
pub fn launch_all(qd: &QuadDiff, kind: TrajectoryKind, controls: TraceControls) -> Result<Vec<TrajectorySegment>> {
    let mut jobs = Vec::new();
    for id in 0..qd.points.len() {
        for slot in 0..launch_directions(qd, id, kind)?.len() {
            jobs.push((id, slot));
        }
    }
    jobs.par_iter().map(|&(id, slot)| launch(qd, id, slot, kind, controls)).collect()
}
