use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("repeated roots of Q")]
    RepeatedRoots,
    #[error("root finder did not converge (residual {residual:e})")]
    RootsNoConvergence { best: Vec<Complex64>, residual: f64 },
    #[error("degenerate leading coefficient: v1 = 0 at n = {n}")]
    DegenerateLeading { n: usize },
    #[error("degree {n} exceeds the supported maximum {max}")]
    DegreeTooLarge { n: usize, max: usize },
    #[error("QR iteration did not converge: {iterations} iterations on window {window:?}")]
    QrNoConvergence { iterations: usize, window: (usize, usize) },
    #[error("degree drop for t = {t}: leading eigenvector entry {lead:e}")]
    DegreeDrop { t: Complex64, lead: f64 },
    #[error("branch ambiguity: point within guard distance of the integration segment")]
    BranchAmbiguity,
    #[error("quadrature rule too coarse: argument jump {jump:.3} at m = {m}")]
    RefineRule { m: usize, jump: f64 },
    #[error("stalled trace at {at}")]
    StalledTrace { at: Complex64 },
    #[error("corrector diverged after {last}")]
    CorrectorDiverged { last: Complex64 },
    #[error("no sign-consistent cell found")]
    NoSignCell,
    #[error("no sign change of Im f along the line")]
    NoSignChange,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("step collapse near {at}")]
    StepCollapse { at: Complex64 },
    #[error("quadratic differential is not Strebel")]
    NotStrebel,
    #[error("planar embedding failed: {0}")]
    Embedding(String),
    #[error("evaluation point {at} too close to the support")]
    Proximity { at: Complex64 },
}

pub type Result<T> = std::result::Result<T, Error>;
