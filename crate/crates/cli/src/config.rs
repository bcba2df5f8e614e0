//! Job configuration: one JSON document, every default filled in.

use std::path::PathBuf;

use heun_spectra::spectrum::{HeunOperator, DEFAULT_CLUSTER_TOL, MAX_DEGREE};
use heun_spectra::{Polynomial, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub type Pair = [f64; 2];

pub fn to_c(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn from_c(z: C64) -> Pair {
    [z.re, z.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    /// `"zero"` or `"lame"` (`P = Q'/2`).
    Keyword(String),
    /// Coefficients in increasing degree, at most three.
    Coeffs(Vec<Pair>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub cluster: f64,
    pub arc: f64,
    pub newton: f64,
    /// Trajectory step as a fraction of the distance to the nearest singular point.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cluster: DEFAULT_CLUSTER_TOL, arc: 1e-10, newton: 1e-12, trace: 5e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryOptions {
    /// Parameter `b`; when absent, the point at `arc_fraction` along arc `arc`.
    pub b: Option<Pair>,
    pub arc: usize,
    pub arc_fraction: f64,
    pub closed_samples: usize,
    pub points_per_edge: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions { b: None, arc: 0, arc_fraction: 0.5, closed_samples: 6, points_per_edge: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureOptions {
    pub tau_nodes: usize,
    pub slice_nodes: usize,
    pub ring_points: usize,
    /// Ring radius in units of the triangle diameter.
    pub ring_radius: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { tau_nodes: 400, slice_nodes: 200, ring_points: 64, ring_radius: 10.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criteria to run (1-based); all when absent.
    pub criteria: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub roots: [Pair; 3],
    pub p: PSpec,
    pub degrees: Vec<usize>,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub trajectories: TrajectoryOptions,
    pub measures: MeasureOptions,
    pub verify: VerifyConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            roots: [[0.0, 0.0], [1.0, 0.0], [1.0, -1.0]],
            p: PSpec::Keyword("zero".into()),
            degrees: vec![24],
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            trajectories: TrajectoryOptions::default(),
            measures: MeasureOptions::default(),
            verify: VerifyConfig::default(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn roots_c(&self) -> [C64; 3] {
        self.roots.map(to_c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.roots.iter().flatten().any(|x| !x.is_finite()) {
            return Err(usage("roots must be finite"));
        }
        let r = self.roots_c();
        if (0..3).any(|i| (r[i] - r[(i + 1) % 3]).norm() == 0.0) {
            return Err(usage("roots of Q must be distinct"));
        }
        if self.degrees.is_empty() {
            return Err(usage("degree list is empty"));
        }
        if let Some(&n) = self.degrees.iter().find(|&&n| n == 0 || n > MAX_DEGREE) {
            return Err(usage(format!("degree {n} outside 1..={MAX_DEGREE}")));
        }
        let t = &self.tolerances;
        if [t.cluster, t.arc, t.newton, t.trace].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(usage("tolerances must be positive"));
        }
        match &self.p {
            PSpec::Keyword(k) if k != "zero" && k != "lame" => return Err(usage(format!("unknown P keyword {k:?}"))),
            PSpec::Coeffs(c) if c.len() > 3 => return Err(usage("P has degree at most 2")),
            _ => {}
        }
        if self.trajectories.arc > 2 || !(0.0..=1.0).contains(&self.trajectories.arc_fraction) {
            return Err(usage("trajectories.arc must be 0..=2 and arc_fraction in [0, 1]"));
        }
        let m = &self.measures;
        if m.tau_nodes == 0 || m.slice_nodes == 0 || m.ring_points == 0 || m.ring_radius.is_nan() || m.ring_radius <= 0.0 {
            return Err(usage("measure node counts and ring radius must be positive"));
        }
        if let Some(c) = &self.verify.criteria {
            if c.iter().any(|&i| !(1..=heun_spectra::verify::CRITERIA).contains(&i)) {
                return Err(usage("verify.criteria out of range"));
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<HeunOperator, CliError> {
        let roots = self.roots_c();
        Ok(match &self.p {
            PSpec::Keyword(k) if k == "lame" => HeunOperator::lame(roots),
            PSpec::Keyword(_) => HeunOperator::from_roots(roots, Polynomial::zero())?,
            PSpec::Coeffs(c) => HeunOperator::from_roots(roots, Polynomial::new(c.iter().copied().map(to_c).collect()))?,
        })
    }
}
