use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SKEW: &str = r#""roots": [[0, 0], [1, 0], [1, -1]]"#;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_heun-spectra"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn spectrum_writes_one_row_per_van_vleck_root() {
    let d = TempDir::new().unwrap();
    let o = run("spectrum", &format!(r#"{{{SKEW}, "degrees": [24]}}"#), d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    assert_eq!(data_rows(&out.join("roots-n24.csv")).len(), 25);
    assert_eq!(data_rows(&out.join("stieltjes-n24.csv")).len(), 25 * 24);
    assert!(fs::read_to_string(out.join("spectrum-n24.svg")).unwrap().starts_with("<svg"));
    let side = json(&out.join("spectrum-n24.svg.json"));
    assert_eq!(side["pairs"].as_array().unwrap().len(), 25);
    let cfg = json(&out.join("effective-config.json"));
    assert_eq!(cfg["tolerances"]["cluster"].as_f64(), Some(1e-7));
}

#[test]
fn lame_degree_one_rows() {
    let d = TempDir::new().unwrap();
    let o = run("spectrum", r#"{"roots": [[-1, 0], [0, 0], [1, 0]], "p": "lame", "degrees": [1]}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&d.path().join("out/roots-n1.csv"));
    assert_eq!(rows.len(), 2);
    let s = 1.0 / 3f64.sqrt();
    assert!((rows[0][0] + s).abs() < 1e-12 && (rows[1][0] - s).abs() < 1e-12);
    assert!(rows.iter().all(|r| r[1].abs() < 1e-12));
}

#[test]
fn empty_degree_list_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let o = run("spectrum", r#"{"degrees": []}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn missing_config_and_unknown_field_exit_2() {
    let d = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_heun-spectra"))
        .args(["locus", "--config"])
        .arg(d.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run("locus", r#"{"degree": [3]}"#, d.path(), &[]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3_with_a_report() {
    // P = -2 z^2 makes the leading coefficient of V vanish at n = 3
    let d = TempDir::new().unwrap();
    let o = run("spectrum", r#"{"p": [[0, 0], [0, 0], [-2, 0]], "degrees": [3]}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&d.path().join("out/error.json"))["error"], "numerical");
}

#[test]
fn equilateral_locus_is_three_straight_arcs() {
    let d = TempDir::new().unwrap();
    let h = 3f64.sqrt() / 2.0;
    let o = run("locus", &format!(r#"{{"roots": [[1, 0], [-0.5, {h}], [-0.5, -{h}]], "degrees": [6]}}"#), d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let g = json(&d.path().join("out/gamma-q.json"));
    let (x, y) = pair(&g["b0"]);
    assert!(x.hypot(y) < 1e-10);
    let arcs = g["arcs"].as_array().unwrap();
    assert_eq!(arcs.len(), 3);
    for a in arcs {
        let pts: Vec<(f64, f64)> = a.as_array().unwrap().iter().map(pair).collect();
        let (ex, ey) = pts[0];
        let r = ex.hypot(ey);
        // every vertex on the ray from 0 to the start vertex
        for (px, py) in pts {
            assert!((px * ey - py * ex).abs() / r < 1e-8);
        }
    }
    assert!(d.path().join("out/locus.svg.json").exists());
}

#[test]
fn collinear_locus_is_the_segment() {
    let d = TempDir::new().unwrap();
    let o = run("locus", r#"{"roots": [[-1, 0], [0, 0], [1, 0]], "degrees": [4]}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let g = json(&d.path().join("out/gamma-q.json"));
    for a in g["arcs"].as_array().unwrap() {
        for p in a.as_array().unwrap() {
            let (x, y) = pair(p);
            assert!(y.abs() < 1e-12 && x.abs() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn trajectories_on_the_first_arc() {
    let d = TempDir::new().unwrap();
    let o = run("trajectories", &format!("{{{SKEW}}}"), d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = d.path().join("out");
    let rep = json(&out.join("kpsi-report.json"));
    assert_eq!(rep["domains"], 2);
    let m = rep["measures"].as_array().unwrap();
    assert_eq!(m.len(), 2);
    let pos: Vec<&Value> = m.iter().filter(|x| x["all_positive"] == true).collect();
    assert_eq!(pos.len(), 1);
    assert_eq!(pos[0]["support_edges"].as_array().unwrap().len(), 2);
    assert!((pos[0]["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let k = json(&out.join("kpsi.json"));
    assert_eq!(k["is_strebel"], true);
    for key in ["vertices", "edges", "faces"] {
        assert!(k[key].is_array());
    }
    assert!(k["vertices"][0]["kind"] == "zero" || k["vertices"][0]["kind"] == "pole");
    assert!(out.join("kpsi.svg").exists() && out.join("kpsi.svg.json").exists());
}

#[test]
fn trajectories_at_the_triple_point() {
    let d = TempDir::new().unwrap();
    let o = run("trajectories", r#"{"trajectories": {"b": [0.722103839556221, -0.277896160443779]}}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&d.path().join("out/kpsi-report.json"));
    assert_eq!(rep["domains"], 1);
    assert_eq!(rep["edges"].as_array().unwrap().len(), 3);
    assert_eq!(rep["measures"].as_array().unwrap().len(), 1);
}

#[test]
fn off_locus_parameter_warns_and_exits_0() {
    let d = TempDir::new().unwrap();
    let o = run("trajectories", r#"{"trajectories": {"b": [0.85, -0.45]}}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(json(&d.path().join("out/kpsi.json"))["is_strebel"], false);
}

#[test]
fn measures_have_unit_mass() {
    let d = TempDir::new().unwrap();
    let o = run("measures", r#"{"degrees": [6], "measures": {"tau_nodes": 40, "slice_nodes": 20}}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = d.path().join("out");
    let m1 = data_rows(&out.join("m1.csv"));
    assert_eq!(m1.len(), 800);
    assert!((m1.iter().map(|r| r[2]).sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(data_rows(&out.join("mu-n6.csv")).len(), 7);
    assert_eq!(json(&out.join("measures.json"))["m_pairwise_gaps"].as_array().unwrap().len(), 3);
}

#[test]
fn absurd_cluster_tolerance_fails_the_count_criterion() {
    let d = TempDir::new().unwrap();
    let o = run("verify", r#"{"tolerances": {"cluster": 1000}, "verify": {"criteria": [1]}}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let rep = json(&d.path().join("out/verify.json"));
    assert_eq!(rep["failed"], serde_json::json!([1]));
}

#[test]
fn quick_criteria_pass() {
    let d = TempDir::new().unwrap();
    let o = run("verify", r#"{"verify": {"criteria": [1, 2, 3, 4, 11]}}"#, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("PASS").count(), 5);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let cfg = format!(r#"{{{SKEW}, "degrees": [10, 16]}}"#);
    let read = |threads: &str| {
        let d = TempDir::new().unwrap();
        for cmd in ["spectrum", "locus", "trajectories"] {
            assert_eq!(run(cmd, &cfg, d.path(), &["--threads", threads]).status.code(), Some(0));
        }
        let mut files: Vec<_> = fs::read_dir(d.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "effective-config.json")
            .collect();
        files.sort();
        files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>()
    };
    let (a, b) = (read("1"), read("3"));
    assert_eq!(a.len(), b.len());
    assert!(a == b);
}
