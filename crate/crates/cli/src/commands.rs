//! The five subcommands. Each returns whether its checks passed.

use heun_spectra::abelian::CubicRoots;
use heun_spectra::locus::{arc_point, build_gamma_q, default_step, GammaQ};
use heun_spectra::measures::{balayage_gap, build_mi, ring, DiscreteMeasure};
use heun_spectra::qdiff::{
    admits_positive, enumerate_measures, heun_qdiff, singular_graph, trace, PointKind, QuadDiff, SingularGraph, StrebelStatus,
    Terminal, TraceControls, TrajectoryKind,
};
use heun_spectra::spectrum::{solve, stieltjes_roots, SpectrumResult};
use heun_spectra::verify::{Suite, VerifyOptions};
use heun_spectra::C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{from_c, to_c, JobConfig, Pair};
use crate::output::{labelled_csv, points_csv, weighted_csv, OutDir};
use crate::svg::Plot;
use crate::CliError;

pub enum Status {
    Ok,
    Warning(String),
    Failed(String),
}

fn spectra(cfg: &JobConfig) -> Result<Vec<SpectrumResult>, CliError> {
    let op = cfg.operator()?;
    // collect keeps the degree order whatever the thread count
    let out: Vec<_> = cfg.degrees.par_iter().map(|&n| solve(&op, n, cfg.tolerances.cluster)).collect();
    Ok(out.into_iter().collect::<Result<_, _>>()?)
}

fn roots(cfg: &JobConfig) -> Result<CubicRoots, CliError> {
    Ok(CubicRoots::new(cfg.roots_c())?)
}

pub fn spectrum(cfg: &JobConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let q_roots = cfg.roots_c();
    for s in spectra(cfg)? {
        let n = s.n;
        let stieltjes: Vec<Vec<C64>> = s.pairs.par_iter().map(stieltjes_roots).collect::<Result<_, _>>()?;
        out.write(&format!("roots-n{n}.csv"), points_csv(&s.t_roots).as_bytes())?;
        let rows: Vec<(usize, C64)> =
            stieltjes.iter().enumerate().flat_map(|(k, r)| r.iter().map(move |z| (k, *z))).collect();
        out.write(&format!("stieltjes-n{n}.csv"), labelled_csv("pair", &rows).as_bytes())?;

        let mut plot = Plot::new(q_roots.iter().chain(&s.t_roots).chain(rows.iter().map(|r| &r.1)).copied(), 600.0);
        for (_, z) in &rows {
            plot.dot(*z, 1.2, "#444");
        }
        for z in &q_roots {
            plot.dot(*z, 3.5, "#1f5fbf");
        }
        for z in &s.t_roots {
            plot.dot(*z, 5.0, "#c0392b");
        }
        out.write(&format!("spectrum-n{n}.svg"), plot.finish().as_bytes())?;
        let pairs: Vec<_> = s
            .pairs
            .iter()
            .zip(&stieltjes)
            .map(|(p, r)| {
                json!({
                    "t": from_c(p.t), "v1": from_c(p.v1), "v0": from_c(p.v0),
                    "multiplicity": p.multiplicity, "residual": p.residual,
                    "stieltjes_roots": r.iter().copied().map(from_c).collect::<Vec<_>>(),
                })
            })
            .collect();
        out.json(
            &format!("spectrum-n{n}.svg.json"),
            &json!({ "n": n, "q_roots": q_roots.map(from_c), "precision_bits": s.precision, "pairs": pairs }),
        )?;
    }
    Ok(Status::Ok)
}

fn gamma(cfg: &JobConfig, r: &CubicRoots) -> Result<GammaQ, CliError> {
    Ok(build_gamma_q(r, default_step(r), cfg.tolerances.arc)?)
}

pub fn locus(cfg: &JobConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let r = roots(cfg)?;
    let g = gamma(cfg, &r)?;
    let arcs: Vec<Vec<Pair>> = g.arcs.iter().map(|a| a.points.iter().copied().map(from_c).collect()).collect();
    out.json("gamma-q.json", &json!({ "b0": from_c(g.b0), "arcs": arcs }))?;
    let sp = spectra(cfg)?;
    let mut plot = Plot::new(r.a.iter().chain(sp.iter().flat_map(|s| &s.t_roots)).copied(), 600.0);
    for a in &g.arcs {
        plot.polyline(&a.points, 1.5, "#1f5fbf");
    }
    for s in &sp {
        for z in &s.t_roots {
            plot.dot(*z, 2.0, "#c0392b");
        }
    }
    for z in &r.a {
        plot.dot(*z, 4.0, "#000");
    }
    out.write("locus.svg", plot.finish().as_bytes())?;
    let overlays: Vec<_> =
        sp.iter().map(|s| json!({ "n": s.n, "t_roots": s.t_roots.iter().copied().map(from_c).collect::<Vec<_>>() })).collect();
    out.json(
        "locus.svg.json",
        &json!({ "q_roots": r.a.map(from_c), "b0": from_c(g.b0), "degenerate": g.degenerate, "arcs": arcs, "spectra": overlays }),
    )?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct KpsiVertex {
    id: usize,
    pos: Pair,
    kind: PointKind,
}

#[derive(Serialize)]
struct KpsiEdge {
    id: usize,
    endpoints: (usize, usize),
    polyline: Vec<Pair>,
    dividing: bool,
    preventing: bool,
    mass: f64,
    gap: f64,
}

#[derive(Serialize)]
struct KpsiFace {
    id: usize,
    depth: usize,
}

fn kpsi_json(g: &SingularGraph) -> serde_json::Value {
    let vertices: Vec<_> = g.vertices.iter().map(|v| KpsiVertex { id: v.id, pos: from_c(v.pos), kind: v.kind }).collect();
    let edges: Vec<_> = g
        .edges
        .iter()
        .map(|e| KpsiEdge {
            id: e.id,
            endpoints: e.endpoints,
            polyline: e.polyline.iter().copied().map(from_c).collect(),
            dividing: e.dividing,
            preventing: e.preventing,
            mass: e.mass,
            gap: e.gap,
        })
        .collect();
    let faces: Vec<_> = g.faces.iter().map(|f| KpsiFace { id: f.id, depth: f.depth }).collect();
    json!({ "vertices": vertices, "edges": edges, "faces": faces, "is_strebel": g.is_strebel, "status": g.status })
}

/// Closed horizontal trajectories through points on a ray away from the
/// singular points.
fn closed_samples(qd: &QuadDiff, r: &CubicRoots, count: usize, controls: TraceControls) -> Vec<Vec<C64>> {
    let c = r.centroid();
    let rh = r.a.iter().map(|a| (a - c).norm()).fold(0.0, f64::max);
    let jobs: Vec<C64> = (0..count).map(|k| c + C64::from_polar(rh * (1.3 + 0.5 * k as f64), 0.3)).collect();
    jobs.par_iter()
        .filter_map(|&z| trace(qd, z, C64::new(1.0, 0.0), TrajectoryKind::Horizontal, controls).ok())
        .filter(|s| s.terminal == Terminal::Closed)
        .map(|s| s.points)
        .collect()
}

pub fn trajectories(cfg: &JobConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let r = roots(cfg)?;
    let t = &cfg.trajectories;
    let b = match t.b {
        Some(b) => to_c(b),
        None => arc_point(&r, &gamma(cfg, &r)?, t.arc, t.arc_fraction, cfg.tolerances.newton)?,
    };
    let qd = heun_qdiff(&r, b);
    let mut controls = TraceControls::for_qdiff(&qd);
    controls.step_fraction = cfg.tolerances.trace;
    let g = singular_graph(&qd, controls)?;
    out.json("kpsi.json", &kpsi_json(&g))?;

    let specs = if g.is_strebel { enumerate_measures(&g, t.points_per_edge)? } else { Vec::new() };
    let table: Vec<_> = specs
        .iter()
        .map(|s| {
            json!({
                "branch_choice": s.branch_choice,
                "support_edges": s.support_edges.iter().map(|&(e, sign)| json!({ "edge": e, "sign": sign })).collect::<Vec<_>>(),
                "total_mass": s.total_mass,
                "discretized_mass": s.discretization.as_ref().map(DiscreteMeasure::total_mass),
                "all_positive": s.all_positive(),
            })
        })
        .collect();
    out.json(
        "kpsi-report.json",
        &json!({
            "b": from_c(b),
            "status": g.status,
            "is_strebel": g.is_strebel,
            "components": g.components,
            // complementary domains including the unbounded one
            "domains": g.domain_count(),
            "depths": g.faces.iter().map(|f| f.depth).collect::<Vec<_>>(),
            "edges": g.edges.iter().map(|e| json!({
                "id": e.id, "endpoints": e.endpoints, "dividing": e.dividing, "preventing": e.preventing, "mass": e.mass,
            })).collect::<Vec<_>>(),
            "admits_positive": admits_positive(&g),
            "measures": table,
        }),
    )?;

    let closed = closed_samples(&qd, &r, t.closed_samples, controls);
    let offending: Vec<C64> = g.offending.as_ref().map(|s| s.points.clone()).unwrap_or_default();
    let mut plot = Plot::new(
        qd.points.iter().map(|p| p.pos).chain(g.edges.iter().flat_map(|e| e.polyline.iter().copied())).chain(closed.iter().flatten().copied()),
        600.0,
    );
    for c in &closed {
        plot.polyline(c, 0.6, "#9bb7d4");
    }
    for e in &g.edges {
        plot.polyline(&e.polyline, 2.2, "#000");
    }
    plot.polyline(&offending, 1.0, "#c0392b");
    for p in &qd.points {
        plot.dot(p.pos, 3.5, if p.kind == PointKind::Zero { "#c0392b" } else { "#1f5fbf" });
    }
    out.write("kpsi.svg", plot.finish().as_bytes())?;
    let as_pairs = |v: &[C64]| v.iter().copied().map(from_c).collect::<Vec<_>>();
    out.json(
        "kpsi.svg.json",
        &json!({
            "points": qd.points.iter().map(|p| json!({ "pos": from_c(p.pos), "kind": p.kind })).collect::<Vec<_>>(),
            "singular": g.edges.iter().map(|e| as_pairs(&e.polyline)).collect::<Vec<_>>(),
            "closed": closed.iter().map(|c| as_pairs(c)).collect::<Vec<_>>(),
            "offending": as_pairs(&offending),
        }),
    )?;
    Ok(match g.status {
        StrebelStatus::Strebel => Status::Ok,
        StrebelStatus::NotStrebel => Status::Warning(format!("b = {b} does not give a Strebel differential")),
        StrebelStatus::Inconclusive => Status::Warning(format!("b = {b}: Strebel property inconclusive")),
    })
}

pub fn measures(cfg: &JobConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let r = roots(cfg)?;
    let m = &cfg.measures;
    let mi: Vec<DiscreteMeasure> = (0..3).into_par_iter().map(|i| build_mi(&r, i, m.tau_nodes, m.slice_nodes)).collect::<Result<_, _>>()?;
    for (i, mm) in mi.iter().enumerate() {
        out.write(&format!("m{}.csv", i + 1), weighted_csv(mm.rows()).as_bytes())?;
    }
    let circle = ring(r.centroid(), m.ring_radius * r.diameter(), m.ring_points);
    let mut pairwise = Vec::new();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        pairwise.push(json!({ "pair": [a + 1, b + 1], "gap": balayage_gap(&mi[a], &mi[b], &circle)? }));
    }
    let mut per_n = Vec::new();
    for s in spectra(cfg)? {
        out.write(&format!("mu-n{}.csv", s.n), weighted_csv(s.measure.rows()).as_bytes())?;
        let gaps = mi.iter().map(|mm| balayage_gap(mm, &s.measure, &circle)).collect::<Result<Vec<_>, _>>()?;
        per_n.push(json!({ "n": s.n, "mass": s.measure.total_mass(), "gap_to_m": gaps }));
    }
    out.json(
        "measures.json",
        &json!({
            "ring": { "center": from_c(r.centroid()), "radius": m.ring_radius * r.diameter(), "points": m.ring_points },
            "m_masses": mi.iter().map(DiscreteMeasure::total_mass).collect::<Vec<_>>(),
            "m_pairwise_gaps": pairwise,
            "spectra": per_n,
        }),
    )?;
    Ok(Status::Ok)
}

pub fn verify(cfg: &JobConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let opts = VerifyOptions { roots: cfg.roots_c(), cluster_tol: cfg.tolerances.cluster, only: cfg.verify.criteria.clone() };
    let report = Suite::new(opts)?.run();
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed = report.failed();
    println!("{} of {} criteria passed in {:.1}s", report.criteria.len() - failed.len(), report.criteria.len(), report.seconds);
    out.json("verify.json", &json!({ "passed": failed.is_empty(), "failed": failed, "report": report }))?;
    Ok(if failed.is_empty() { Status::Ok } else { Status::Failed(format!("criteria {failed:?} failed")) })
}
