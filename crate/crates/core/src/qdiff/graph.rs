//! The singular graph `K_Ψ`: embedding, faces and depth, edge labels, and
//! the signed measures supported on it.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use serde::Serialize;

use super::{launch_all, PointKind, QuadDiff, Terminal, TraceControls, TrajectoryKind, TrajectorySegment};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::poly::{segment_distance, C64};

#[derive(Clone, Debug, Serialize)]
pub struct GraphVertex {
    pub id: usize,
    pub pos: C64,
    pub kind: PointKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphEdge {
    pub id: usize,
    pub endpoints: (usize, usize),
    pub polyline: Vec<C64>,
    /// Running canonical length `∫ |√R| |dz|` at each polyline vertex.
    pub w: Vec<f64>,
    /// First and last polyline pieces are exact local tails at the endpoints.
    pub tails: bool,
    /// `w` at the end divided by `pi`: the mass the edge carries when it is in
    /// a support.
    pub mass: f64,
    /// Endpoint capture gap of the trace (0 for constructed graphs).
    pub gap: f64,
    /// Hausdorff distance to the same edge traced from the other end.
    pub reverse_hausdorff: Option<f64>,
    pub dividing: bool,
    pub preventing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Face {
    pub id: usize,
    pub depth: usize,
    /// Area enclosed by the outer boundary; 0 for the unbounded face.
    pub area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrebelStatus {
    Strebel,
    NotStrebel,
    /// Some singular trajectory hit the arc-length cap.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
    pub faces: Vec<Face>,
    pub status: StrebelStatus,
    pub is_strebel: bool,
    pub components: usize,
    /// The trajectory that made the result non-Strebel or inconclusive.
    pub offending: Option<TrajectorySegment>,
    /// Per half-edge `2e` (along the polyline) and `2e + 1` (against it): the
    /// face on its left and whether that side lies on the face's outer boundary.
    #[serde(skip)]
    sides: Vec<(usize, bool)>,
    #[serde(skip)]
    classified: bool,
}

impl SingularGraph {
    /// Number of complementary domains, including the unbounded one.
    pub fn domain_count(&self) -> usize {
        self.faces.len()
    }

    /// Face on the left of the edge and on its right.
    pub fn edge_faces(&self, e: usize) -> (usize, usize) {
        (self.sides[2 * e].0, self.sides[2 * e + 1].0)
    }

    /// Builds the embedding from edge polylines. Cyclic order at a vertex
    /// comes from the first polyline piece leaving it.
    pub fn from_edges(vertices: Vec<GraphVertex>, mut edges: Vec<GraphEdge>) -> Result<Self> {
        let nv = vertices.len();
        let ne = edges.len();
        for (i, e) in edges.iter_mut().enumerate() {
            e.id = i;
            if e.polyline.len() < 2 || e.endpoints.0 >= nv || e.endpoints.1 >= nv {
                return Err(Error::Embedding(format!("malformed edge {i}")));
            }
        }
        let head = |h: usize| if h.is_multiple_of(2) { edges[h / 2].endpoints.1 } else { edges[h / 2].endpoints.0 };
        let tail = |h: usize| if h.is_multiple_of(2) { edges[h / 2].endpoints.0 } else { edges[h / 2].endpoints.1 };
        let angle = |h: usize| {
            let p = &edges[h / 2].polyline;
            let n = p.len();
            let d = if h.is_multiple_of(2) { p[1] - p[0] } else { p[n - 2] - p[n - 1] };
            d.arg()
        };
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for h in 0..2 * ne {
            out[tail(h)].push(h);
        }
        for list in out.iter_mut() {
            list.sort_by(|a, b| angle(*a).total_cmp(&angle(*b)));
        }
        let next = |h: usize| {
            let v = head(h);
            let twin = h ^ 1;
            let list = &out[v];
            let idx = list.iter().position(|&x| x == twin).expect("twin leaves its head");
            list[(idx + list.len() - 1) % list.len()]
        };
        let mut cycle_of = vec![usize::MAX; 2 * ne];
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        for h0 in 0..2 * ne {
            if cycle_of[h0] != usize::MAX {
                continue;
            }
            let id = cycles.len();
            let mut cyc = Vec::new();
            let mut h = h0;
            loop {
                if cycle_of[h] != usize::MAX {
                    if h == h0 {
                        break;
                    }
                    return Err(Error::Embedding("inconsistent rotation system".into()));
                }
                cycle_of[h] = id;
                cyc.push(h);
                h = next(h);
            }
            cycles.push(cyc);
        }
        let polygon = |cyc: &[usize]| -> Vec<C64> {
            let mut pts = Vec::new();
            for &h in cyc {
                let p = &edges[h / 2].polyline;
                if h.is_multiple_of(2) {
                    pts.extend_from_slice(&p[..p.len() - 1]);
                } else {
                    pts.extend(p[1..].iter().rev());
                }
            }
            pts
        };
        let polys: Vec<Vec<C64>> = cycles.iter().map(|c| polygon(c)).collect();
        let areas: Vec<f64> = polys.iter().map(|p| signed_area(p)).collect();
        // components by union-find
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        for e in &edges {
            let (a, b) = (find(&mut parent, e.endpoints.0), find(&mut parent, e.endpoints.1));
            parent[a] = b;
        }
        let comp: Vec<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();
        let mut roots_seen: Vec<usize> = comp.clone();
        roots_seen.sort();
        roots_seen.dedup();
        let components = roots_seen.len();
        let scale = {
            let all: Vec<C64> = edges.iter().flat_map(|e| e.polyline.iter().copied()).collect();
            bbox_diameter(&all).max(1e-300)
        };
        let area_tol = 1e-9 * scale * scale;
        // bounded faces are the counterclockwise cycles
        let mut face_of_cycle = vec![usize::MAX; cycles.len()];
        let mut faces = vec![Face { id: 0, depth: 0, area: 0.0 }];
        for (c, &a) in areas.iter().enumerate() {
            if a > area_tol {
                face_of_cycle[c] = faces.len();
                faces.push(Face { id: faces.len(), depth: usize::MAX, area: a });
            }
        }
        // every other cycle bounds a component from outside and sits in the
        // smallest bounded face of another component that contains it
        for c in 0..cycles.len() {
            if face_of_cycle[c] != usize::MAX {
                continue;
            }
            let my_comp = comp[tail(cycles[c][0])];
            let probe = vertices[tail(cycles[c][0])].pos;
            let mut best: Option<(f64, usize)> = None;
            for (d, &a) in areas.iter().enumerate() {
                if a <= area_tol || comp[tail(cycles[d][0])] == my_comp {
                    continue;
                }
                if point_in_polygon(&polys[d], probe) && best.is_none_or(|(ba, _)| a < ba) {
                    best = Some((a, face_of_cycle[d]));
                }
            }
            face_of_cycle[c] = best.map(|b| b.1).unwrap_or(0);
        }
        let sides: Vec<(usize, bool)> =
            (0..2 * ne).map(|h| (face_of_cycle[cycle_of[h]], areas[cycle_of[h]] > area_tol)).collect();
        // depth by breadth-first search from the unbounded face
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); faces.len()];
        for e in 0..ne {
            let (f1, f2) = (sides[2 * e].0, sides[2 * e + 1].0);
            if f1 != f2 {
                adj[f1].push(f2);
                adj[f2].push(f1);
            }
        }
        faces[0].depth = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(f) = queue.pop_front() {
            for &g in &adj[f] {
                if faces[g].depth == usize::MAX {
                    faces[g].depth = faces[f].depth + 1;
                    queue.push_back(g);
                }
            }
        }
        if faces.iter().any(|f| f.depth == usize::MAX) {
            return Err(Error::Embedding("face not reachable from the unbounded one".into()));
        }
        let euler = nv as i64 - ne as i64 + faces.len() as i64;
        if euler != 1 + components as i64 {
            return Err(Error::Embedding(format!(
                "Euler relation fails: V - E + F = {euler}, components = {components}"
            )));
        }
        for e in 0..ne {
            let (a, b) = (sides[2 * e], sides[2 * e + 1]);
            edges[e].dividing = a.0 != b.0;
            // a non-dividing edge is preventing when it lies on the outer
            // boundary of its domain
            edges[e].preventing = !edges[e].dividing && (a.1 || b.1);
        }
        Ok(SingularGraph {
            vertices,
            edges,
            faces,
            status: StrebelStatus::Strebel,
            is_strebel: true,
            components,
            offending: None,
            sides,
            classified: false,
        })
    }

    fn unresolved(qd: &QuadDiff, status: StrebelStatus, offending: TrajectorySegment) -> Self {
        SingularGraph {
            vertices: vertices_of(qd),
            edges: vec![],
            faces: vec![],
            status,
            is_strebel: false,
            components: 0,
            offending: Some(offending),
            sides: vec![],
            classified: false,
        }
    }
}

fn vertices_of(qd: &QuadDiff) -> Vec<GraphVertex> {
    qd.points.iter().enumerate().map(|(id, p)| GraphVertex { id, pos: p.pos, kind: p.kind }).collect()
}

fn signed_area(p: &[C64]) -> f64 {
    let n = p.len();
    (0..n).map(|i| p[i].re * p[(i + 1) % n].im - p[(i + 1) % n].re * p[i].im).sum::<f64>() / 2.0
}

fn bbox_diameter(p: &[C64]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in p {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
}

fn point_in_polygon(poly: &[C64], z: C64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Largest distance from a vertex of `p` to the polyline `q`.
fn directed(p: &[C64], q: &[C64]) -> f64 {
    p.iter()
        .map(|z| q.windows(2).map(|w| segment_distance(w[0], w[1], *z)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two polylines (vertex to polyline, both ways).
pub fn polyline_hausdorff(a: &[C64], b: &[C64]) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Launches every singular trajectory and assembles `K_Ψ`.
pub fn singular_graph(qd: &QuadDiff, controls: TraceControls) -> Result<SingularGraph> {
    let segs = launch_all(qd, TrajectoryKind::Horizontal, controls)?;
    if let Some(s) = segs.iter().find(|s| s.terminal == Terminal::Exhausted) {
        return Ok(SingularGraph::unresolved(qd, StrebelStatus::Inconclusive, s.clone()));
    }
    if let Some(s) = segs.iter().find(|s| !matches!(s.terminal, Terminal::Hit { .. })) {
        return Ok(SingularGraph::unresolved(qd, StrebelStatus::NotStrebel, s.clone()));
    }
    // group the traces by the unordered pair of slots they join
    type Slot = (usize, usize);
    let mut groups: BTreeMap<(Slot, Slot), Vec<&TrajectorySegment>> = BTreeMap::new();
    for s in &segs {
        let a = match s.origin {
            super::Origin::Singular { id, slot } => (id, slot),
            super::Origin::Point => unreachable!("launched from singular points"),
        };
        let Terminal::Hit { id, slot, .. } = s.terminal else { unreachable!() };
        let b = (id, slot);
        groups.entry((a.min(b), a.max(b))).or_default().push(s);
    }
    let mut used: BTreeMap<Slot, usize> = BTreeMap::new();
    for (a, b) in groups.keys() {
        *used.entry(*a).or_default() += 1;
        *used.entry(*b).or_default() += 1;
    }
    // a slot joined to two different slots means some capture was a near
    // miss of a trajectory that does not end there; K_Ψ is then not compact
    // as far as the traces can tell
    if used.values().any(|&n| n != 1) || groups.values().any(|l| l.len() > 2) {
        let gap = |s: &TrajectorySegment| if let Terminal::Hit { gap, .. } = s.terminal { gap } else { 0.0 };
        let worst = segs.iter().max_by(|a, b| gap(a).total_cmp(&gap(b))).unwrap();
        return Ok(SingularGraph::unresolved(qd, StrebelStatus::Inconclusive, worst.clone()));
    }
    let mut edges = Vec::new();
    for ((_, _), list) in &groups {
        let s = list[0];
        let Terminal::Hit { id, gap, .. } = s.terminal else { unreachable!() };
        let super::Origin::Singular { id: from, .. } = s.origin else { unreachable!() };
        // the launch pieces are chords, not traced geometry; compare what
        // lies outside the launch disks of both endpoints
        let ends = [qd.points[from].pos, qd.points[id].pos];
        let traced = |p: &[C64]| -> Vec<C64> {
            p.iter().copied().filter(|z| ends.iter().all(|e| (z - e).norm() > 1.5 * controls.launch_offset)).collect()
        };
        let reverse_hausdorff =
            list.get(1).map(|t| directed(&traced(&s.points), &t.points).max(directed(&traced(&t.points), &s.points)));
        let gap = list.iter().map(|t| if let Terminal::Hit { gap, .. } = t.terminal { gap } else { 0.0 }).fold(gap, f64::max);
        let total = *s.w.last().unwrap();
        edges.push(GraphEdge {
            id: edges.len(),
            endpoints: (from, id),
            polyline: s.points.clone(),
            w: s.w.clone(),
            tails: true,
            mass: total / PI,
            gap,
            reverse_hausdorff,
            dividing: false,
            preventing: false,
        });
    }
    SingularGraph::from_edges(vertices_of(qd), edges)
}

/// Edge labels (dividing, preventing) and face depths. Only Strebel graphs
/// can be classified.
pub fn classify(graph: &SingularGraph) -> Result<SingularGraph> {
    if !graph.is_strebel {
        return Err(Error::NotStrebel);
    }
    let mut g = graph.clone();
    g.classified = true;
    Ok(g)
}

/// True iff no dividing edge separates two domains of equal depth and every
/// non-dividing edge is non-preventing.
pub fn admits_positive(graph: &SingularGraph) -> bool {
    if !graph.is_strebel {
        return false;
    }
    graph.edges.iter().all(|e| {
        if e.dividing {
            let (a, b) = graph.edge_faces(e.id);
            graph.faces[a].depth != graph.faces[b].depth
        } else {
            !e.preventing
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SignedMeasureSpec {
    /// Branch bit per bounded face (face ids 1, 2, ...): false means the
    /// potential grows towards the outer boundary of the face.
    pub branch_choice: Vec<bool>,
    /// Supported edges with sign +1 or -1.
    pub support_edges: Vec<(usize, i8)>,
    /// Exact total mass from the canonical lengths of the edges.
    pub total_mass: f64,
    pub discretization: Option<DiscreteMeasure>,
}

impl SignedMeasureSpec {
    pub fn all_positive(&self) -> bool {
        self.support_edges.iter().all(|&(_, s)| s > 0)
    }

    /// Equal-mass pieces in the canonical parameter, one point per piece.
    pub fn discretize(&self, graph: &SingularGraph, points_per_edge: usize) -> DiscreteMeasure {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(e, sign) in &self.support_edges {
            let edge = &graph.edges[e];
            let (kinds, n) = (
                (graph.vertices[edge.endpoints.0].kind, graph.vertices[edge.endpoints.1].kind),
                points_per_edge.max(1),
            );
            let total = *edge.w.last().unwrap();
            for k in 0..n {
                let wm = (k as f64 + 0.5) * total / n as f64;
                points.push(point_at(edge, kinds, wm));
                weights.push(sign as f64 * total / (n as f64 * PI));
            }
        }
        let label = format!(
            "signed measure, branches {:?}",
            self.branch_choice.iter().map(|&b| b as u8).collect::<Vec<_>>()
        );
        DiscreteMeasure { points, weights, provenance: label }
    }
}

/// Point at canonical parameter `wm` along an edge; inside the end pieces the
/// local power law of the endpoint replaces linear interpolation.
fn point_at(edge: &GraphEdge, kinds: (PointKind, PointKind), wm: f64) -> C64 {
    let (p, w) = (&edge.polyline, &edge.w);
    let n = p.len();
    let k = w.partition_point(|&x| x <= wm).clamp(1, n - 1);
    let (w0, w1) = (w[k - 1], w[k]);
    let exponent = |kind: PointKind| match kind {
        PointKind::Pole => 2.0,
        PointKind::Zero => 2.0 / 3.0,
    };
    if edge.tails && k == 1 && w1 > 0.0 {
        return p[0] + (p[1] - p[0]) * (wm / w1).clamp(0.0, 1.0).powf(exponent(kinds.0));
    }
    if edge.tails && k == n - 1 && w1 > w0 {
        let s = ((w1 - wm) / (w1 - w0)).clamp(0.0, 1.0);
        return p[n - 1] + (p[n - 2] - p[n - 1]) * s.powf(exponent(kinds.1));
    }
    if w1 > w0 {
        p[k - 1] + (p[k] - p[k - 1]) * ((wm - w0) / (w1 - w0))
    } else {
        p[k]
    }
}

/// The `2^{d-1}` real measures on `K_Ψ`, one per choice of branch in the
/// bounded domains. On each side of an edge the potential's gradient points
/// away from the edge or towards it; an edge carries mass `+` when both sides
/// point away, `-` when both point towards it, and none otherwise.
pub fn enumerate_measures(graph: &SingularGraph, points_per_edge: usize) -> Result<Vec<SignedMeasureSpec>> {
    if !graph.is_strebel {
        return Err(Error::NotStrebel);
    }
    let bounded = graph.faces.len() - 1;
    if bounded > 20 {
        return Err(Error::Unsupported(format!("{bounded} bounded domains")));
    }
    let mut out = Vec::with_capacity(1 << bounded);
    for mask in 0u32..(1u32 << bounded) {
        let bit = |f: usize| f > 0 && (mask >> (f - 1)) & 1 == 1;
        // outward gradient in a face points towards its outer boundary
        let away = |h: usize| {
            let (f, outer) = graph.sides[h];
            outer == bit(f)
        };
        let mut support = Vec::new();
        let mut total = 0.0;
        for e in &graph.edges {
            let (a, b) = (away(2 * e.id), away(2 * e.id + 1));
            let sign: i8 = match (a, b) {
                (true, true) => 1,
                (false, false) => -1,
                _ => 0,
            };
            if sign != 0 {
                support.push((e.id, sign));
                total += sign as f64 * e.mass;
            }
        }
        let mut spec = SignedMeasureSpec {
            branch_choice: (1..=bounded).map(bit).collect(),
            support_edges: support,
            total_mass: total,
            discretization: None,
        };
        if points_per_edge > 0 {
            spec.discretization = Some(spec.discretize(graph, points_per_edge));
        }
        out.push(spec);
    }
    Ok(out)
}

/// A constructed graph with two zeros joined by three edges and two
/// pole-to-pole edges, one inside each of the two bounded domains. Edge
/// masses are chosen so that every one of the four measures has mass 1.
pub fn two_zero_four_pole_graph() -> SingularGraph {
    let c = |re: f64, im: f64| C64::new(re, im);
    let vertices = vec![
        GraphVertex { id: 0, pos: c(-1.0, 0.0), kind: PointKind::Zero },
        GraphVertex { id: 1, pos: c(1.0, 0.0), kind: PointKind::Zero },
        GraphVertex { id: 2, pos: c(-0.4, 0.4), kind: PointKind::Pole },
        GraphVertex { id: 3, pos: c(0.4, 0.4), kind: PointKind::Pole },
        GraphVertex { id: 4, pos: c(-0.4, -0.4), kind: PointKind::Pole },
        GraphVertex { id: 5, pos: c(0.4, -0.4), kind: PointKind::Pole },
    ];
    let arc = |height: f64| (0..=64).map(move |k| {
        let t = PI * k as f64 / 64.0;
        c(-t.cos(), height * t.sin())
    });
    let small = |y: f64, bulge: f64| (0..=32).map(move |k| {
        let t = PI * k as f64 / 32.0;
        c(-0.4 * t.cos(), y + bulge * t.sin())
    });
    let line = (0..=64).map(|k| c(-1.0 + 2.0 * k as f64 / 64.0, 0.0));
    let edge = |endpoints: (usize, usize), polyline: Vec<C64>, mass: f64| {
        let len: Vec<f64> = std::iter::once(0.0)
            .chain(polyline.windows(2).scan(0.0, |acc, w| {
                *acc += (w[1] - w[0]).norm();
                Some(*acc)
            }))
            .collect();
        let l = *len.last().unwrap();
        GraphEdge {
            id: 0,
            endpoints,
            w: len.iter().map(|x| x / l * mass * PI).collect(),
            polyline,
            tails: false,
            mass,
            gap: 0.0,
            reverse_hausdorff: None,
            dividing: false,
            preventing: false,
        }
    };
    let edges = vec![
        edge((0, 1), arc(0.8).collect(), 1.0),
        edge((0, 1), line.collect(), 0.5),
        edge((0, 1), arc(-0.8).collect(), 1.0),
        edge((2, 3), small(0.4, 0.1).collect(), 0.75),
        edge((4, 5), small(-0.4, -0.1).collect(), 0.75),
    ];
    SingularGraph::from_edges(vertices, edges).expect("valid constructed graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_zero_four_pole_topology() {
        let g = two_zero_four_pole_graph();
        assert_eq!(g.faces.len(), 3);
        assert_eq!(g.components, 3);
        let depths: Vec<usize> = g.faces.iter().map(|f| f.depth).collect();
        assert_eq!(depths, vec![0, 1, 1]);
        // the middle segment divides two depth-1 domains
        assert!(g.edges[1].dividing);
        let (a, b) = g.edge_faces(1);
        assert_eq!(g.faces[a].depth, g.faces[b].depth);
        assert!(g.edges[0].dividing && g.edges[2].dividing);
        assert!(!g.edges[3].dividing && !g.edges[3].preventing);
        assert!(!admits_positive(&g));
        let specs = enumerate_measures(&g, 10).unwrap();
        assert_eq!(specs.len(), 4);
        for s in &specs {
            assert!((s.total_mass - 1.0).abs() < 1e-12);
            let d = s.discretization.as_ref().unwrap();
            assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // with outward gradients everywhere: both pole edges +, middle -
        let first = specs.iter().find(|s| s.branch_choice.iter().all(|b| !b)).unwrap();
        let mut sup = first.support_edges.clone();
        sup.sort();
        assert_eq!(sup, vec![(1, -1), (3, 1), (4, 1)]);
        assert_eq!(specs.iter().filter(|s| s.all_positive()).count(), 0);
    }
}
