//! Van Vleck and Stieltjes polynomials of the Heun operator.
//!
//! For fixed `n` the map `S -> Q S'' + P S' + v1 z S` preserves polynomials
//! of degree `<= n` once `v1` cancels the `z^(n+1)` term, so the admissible
//! constant terms `v0` are minus the eigenvalues of an upper Hessenberg
//! matrix. The matrix is assembled in powers of `z - c` with `c` the centroid
//! of the roots of `Q`, and the eigenproblem is solved in multiprecision.

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::poly::mp::{eigen_precision_for_degree, mul_add_to, mul_sub_to, precision_for_degree, rotate_pair, MpPoly, Mpc, RotScratch};
use crate::poly::{self, sort_lex, Polynomial, Triangle, C64};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 300;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct HeunOperator {
    q: Polynomial,
    p: Polynomial,
    roots: [C64; 3],
}

impl HeunOperator {
    /// `q` must be monic of degree 3, `p` of degree at most 2.
    pub fn new(q: Polynomial, p: Polynomial) -> Result<Self> {
        if q.degree() != Some(3) || (q.leading() - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidInput("Q must be a monic cubic".into()));
        }
        if p.degree().is_some_and(|d| d > 2) {
            return Err(Error::InvalidInput("P must have degree at most 2".into()));
        }
        let r = poly::roots(&q, 1e-15)?;
        Ok(HeunOperator { q, p, roots: [r[0], r[1], r[2]] })
    }

    pub fn from_roots(roots: [C64; 3], p: Polynomial) -> Result<Self> {
        if p.degree().is_some_and(|d| d > 2) {
            return Err(Error::InvalidInput("P must have degree at most 2".into()));
        }
        Ok(HeunOperator { q: Polynomial::from_roots(&roots), p, roots })
    }

    /// Lamé form `P = Q'/2`.
    pub fn lame(roots: [C64; 3]) -> Self {
        let q = Polynomial::from_roots(&roots);
        let p = q.derivative().scale(C64::new(0.5, 0.0));
        HeunOperator { q, p, roots }
    }

    pub fn q(&self) -> &Polynomial {
        &self.q
    }

    pub fn p(&self) -> &Polynomial {
        &self.p
    }

    pub fn roots(&self) -> [C64; 3] {
        self.roots
    }

    pub fn centroid(&self) -> C64 {
        (self.roots[0] + self.roots[1] + self.roots[2]) / 3.0
    }

    pub fn triangle(&self) -> Result<Triangle> {
        Triangle::new(self.roots)
    }
}

#[derive(Clone, Debug)]
pub struct VanVleckPair {
    pub v1: C64,
    pub v0: C64,
    pub t: C64,
    /// Monic Stieltjes polynomial with rounded coefficients in `z`.
    pub s: Polynomial,
    /// The same polynomial at working precision, expanded about the centroid.
    pub s_exact: MpPoly,
    pub multiplicity: usize,
    pub residual: f64,
}

impl VanVleckPair {
    pub fn v(&self) -> Polynomial {
        Polynomial::new(vec![self.v0, self.v1])
    }

    pub fn degree(&self) -> usize {
        self.s_exact.degree()
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub n: usize,
    pub pairs: Vec<VanVleckPair>,
    pub t_roots: Vec<C64>,
    pub measure: DiscreteMeasure,
    pub precision: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub cluster_tol: f64,
    /// Bits for eigenvectors and Stieltjes roots; `None` picks `precision_for_degree(n)`.
    pub precision: Option<u32>,
    /// Bits for the QR iteration; `None` picks `eigen_precision_for_degree(n)`.
    pub eig_precision: Option<u32>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { cluster_tol: DEFAULT_CLUSTER_TOL, precision: None, eig_precision: None }
    }
}

pub fn leading_v1(op: &HeunOperator, n: usize) -> C64 {
    let nf = n as f64;
    -(C64::new(nf * (nf - 1.0), 0.0) + op.p.coeff(2) * nf)
}

/// Rows and columns index powers of `z`; entry `(r, c)` is the coefficient of
/// `z^r` in the image of `z^c`.
fn pencil_entries(q: &[C64; 4], p: &[C64; 3], v1: C64, n: usize) -> Vec<Vec<C64>> {
    let mut a = vec![vec![C64::new(0.0, 0.0); n + 1]; n + 1];
    for k in 0..=n {
        let kk = (k * k.saturating_sub(1)) as f64;
        if k >= 2 {
            for (j, qj) in q.iter().enumerate() {
                let r = k - 2 + j;
                if r <= n {
                    a[r][k] += qj * kk;
                }
            }
        }
        if k >= 1 {
            for (j, pj) in p.iter().enumerate() {
                let r = k - 1 + j;
                if r <= n {
                    a[r][k] += pj * k as f64;
                }
            }
        }
        if k < n {
            a[k + 1][k] += v1;
        }
    }
    a
}

/// The pencil in the plain monomial basis `{1, z, ..., z^n}`.
pub fn build_pencil(op: &HeunOperator, n: usize) -> Vec<Vec<C64>> {
    let q = [op.q.coeff(0), op.q.coeff(1), op.q.coeff(2), op.q.coeff(3)];
    let p = [op.p.coeff(0), op.p.coeff(1), op.p.coeff(2)];
    pencil_entries(&q, &p, leading_v1(op, n), n)
}

/// The pencil in powers of `z - c`, `c` the centroid, at the given precision.
fn centered_pencil(op: &HeunOperator, n: usize, prec: u32) -> (Vec<Vec<Mpc>>, C64) {
    let c = op.centroid();
    let qc = MpPoly::from_poly(&op.q, prec).recenter(c);
    let pc = MpPoly::from_poly(&op.p, prec).recenter(c);
    let v1 = Mpc::from_c64(leading_v1(op, n), prec);
    let qk = |j: usize| qc.coeffs.get(j).cloned().unwrap_or_else(|| Mpc::zero(prec));
    let pk = |j: usize| pc.coeffs.get(j).cloned().unwrap_or_else(|| Mpc::zero(prec));
    let mut a = vec![vec![Mpc::zero(prec); n + 1]; n + 1];
    for k in 0..=n {
        let kk = (k * k.saturating_sub(1)) as f64;
        if k >= 2 {
            for j in 0..4 {
                let r = k - 2 + j;
                if r <= n {
                    a[r][k] += &qk(j).scale_f64(kk);
                }
            }
        }
        if k >= 1 {
            for j in 0..3 {
                let r = k - 1 + j;
                if r <= n {
                    a[r][k] += &pk(j).scale_f64(k as f64);
                }
            }
        }
        if k < n {
            a[k + 1][k] += &v1;
        }
    }
    (a, c)
}

/// One implicit single-shift QR sweep on the active window `[n0, n1)`.
fn qr_step(a: &mut [Vec<Mpc>], n0: usize, n1: usize, shift: &Mpc, scratch: &mut RotScratch) {
    let prec = shift.prec();
    let rotate_rows = |a: &mut [Vec<Mpc>], r: usize, g: &[Mpc; 4], from: usize, sc: &mut RotScratch| {
        let (top, bottom) = a.split_at_mut(r + 1);
        let (x, y) = (&mut top[r], &mut bottom[0]);
        for j in from..n1 {
            rotate_pair(&mut x[j], &mut y[j], g, sc);
        }
    };
    let rotate_cols = |a: &mut [Vec<Mpc>], col: usize, g: &[Mpc; 4], to: usize, sc: &mut RotScratch| {
        for row in a.iter_mut().take(to).skip(n0) {
            let (l, r) = row.split_at_mut(col + 1);
            rotate_pair(&mut l[col], &mut r[0], g, sc);
        }
    };
    // rows get [conj c, conj s, c, s], columns the conjugate transpose
    let givens = |c: &Mpc, s: &Mpc| -> (Mpc, [Mpc; 4], [Mpc; 4]) {
        let v = Float::with_val(prec, c.abs().hypot_ref(&s.abs()));
        let (c, s) = if v.is_zero() {
            (Mpc::from_f64(1.0, prec), Mpc::zero(prec))
        } else {
            let inv = Float::with_val(prec, 1u32) / &v;
            (c.scale(&inv), s.scale(&inv))
        };
        let rows = [c.conj(), s.conj(), c.clone(), s.clone()];
        let cols = [c.clone(), s.clone(), c.conj(), s.conj()];
        (Mpc::from_floats(v, Float::new(prec)), rows, cols)
    };

    let (_, gr, gc) = givens(&(&a[n0][n0] - shift), &a[n0 + 1][n0]);
    rotate_rows(a, n0, &gr, n0, scratch);
    rotate_cols(a, n0, &gc, n1.min(n0 + 3), scratch);
    for j in n0..n1.saturating_sub(2) {
        let (v, gr, gc) = givens(&a[j + 1][j], &a[j + 2][j]);
        a[j + 1][j] = v;
        a[j + 2][j] = Mpc::zero(prec);
        rotate_rows(a, j + 1, &gr, j + 1, scratch);
        rotate_cols(a, j + 1, &gc, n1.min(j + 4), scratch);
    }
}

const QR_MAX_ITER: usize = 400;

/// Eigenvalues of an upper Hessenberg matrix by Wilkinson-shift QR with
/// deflation and exceptional shifts. The matrix is overwritten.
pub(crate) fn hessenberg_eigenvalues(a: &mut [Vec<Mpc>]) -> Result<Vec<Mpc>> {
    let n = a.len();
    if n == 1 {
        return Ok(vec![a[0][0].clone()]);
    }
    let prec = a[0][0].prec();
    let mut norm = Float::new(prec);
    for (x, _) in a.iter().enumerate() {
        for row in a.iter().take((x + 2).min(n)) {
            norm += row[x].norm_sqr();
        }
    }
    let norm = norm.sqrt() / n as u32;
    let eps = Float::with_val(prec, Float::u_exp(1, 1 - prec as i32));
    let (mut n0, mut n1) = (0usize, n);
    let mut its = 0usize;
    let mut scratch = RotScratch::new(prec);
    loop {
        let mut k = n0;
        while k + 1 < n1 {
            let mut s = a[k][k].abs1() + a[k + 1][k + 1].abs1();
            if s < Float::with_val(prec, &eps * &norm) {
                s = norm.clone();
            }
            if a[k + 1][k].abs() < Float::with_val(prec, &eps * &s) {
                break;
            }
            k += 1;
        }
        if k + 1 < n1 {
            a[k + 1][k] = Mpc::zero(prec);
            n0 = k + 1;
            its = 0;
            if n0 + 1 >= n1 {
                n0 = 0;
                n1 = k + 1;
                if n1 < 2 {
                    return Ok((0..n).map(|i| a[i][i].clone()).collect());
                }
            }
            continue;
        }
        let shift = match its % 30 {
            10 => a[n1 - 1][n1 - 2].clone(),
            20 => Mpc::from_floats(a[n1 - 1][n1 - 2].abs(), Float::new(prec)),
            29 => Mpc::from_floats(norm.clone(), Float::new(prec)),
            _ => wilkinson_shift(a, n1),
        };
        its += 1;
        if its > QR_MAX_ITER {
            return Err(Error::QrNoConvergence { iterations: its, window: (n0, n1) });
        }
        qr_step(a, n0, n1, &shift, &mut scratch);
    }
}

/// Eigenvalue of the trailing 2x2 block closer to the corner entry.
fn wilkinson_shift(a: &[Vec<Mpc>], n1: usize) -> Mpc {
    let (p, q, r, s) = (&a[n1 - 2][n1 - 2], &a[n1 - 2][n1 - 1], &a[n1 - 1][n1 - 2], &a[n1 - 1][n1 - 1]);
    let t = p + s;
    let d = s - p;
    let disc = &(&d * &d) + &(q * r).scale_f64(4.0);
    let root = disc.sqrt();
    let e1 = (&t + &root).scale_f64(0.5);
    let e2 = (&t - &root).scale_f64(0.5);
    if (s - &e1).abs() > (s - &e2).abs() {
        e2
    } else {
        e1
    }
}

/// Solves `(A - sigma I) x = b` for upper Hessenberg `A` by elimination with
/// adjacent-row pivoting.
fn hessenberg_solve(a: &[Vec<Mpc>], sigma: &Mpc, b: &[Mpc], tiny: &Float) -> Vec<Mpc> {
    let n = a.len();
    let prec = sigma.prec();
    let mut m: Vec<Vec<Mpc>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= sigma;
    }
    let mut x = b.to_vec();
    let mut tmp = Float::new(prec);
    for k in 0..n.saturating_sub(1) {
        if m[k + 1][k].abs() > m[k][k].abs() {
            m.swap(k, k + 1);
            x.swap(k, k + 1);
        }
        if m[k][k].abs() < *tiny {
            m[k][k] = Mpc::from_floats(tiny.clone(), Float::new(prec));
        }
        if m[k + 1][k].is_zero() {
            continue;
        }
        let l = &m[k + 1][k] / &m[k][k];
        let (upper, lower) = m.split_at_mut(k + 1);
        let (rk, rk1) = (&upper[k], &mut lower[0]);
        for j in k + 1..n {
            mul_sub_to(&mut rk1[j], &l, &rk[j], &mut tmp);
        }
        rk1[k] = Mpc::zero(prec);
        let t = &l * &x[k];
        x[k + 1] -= &t;
    }
    if m[n - 1][n - 1].abs() < *tiny {
        m[n - 1][n - 1] = Mpc::from_floats(tiny.clone(), Float::new(prec));
    }
    for i in (0..n).rev() {
        let mut acc = x[i].clone();
        for j in i + 1..n {
            mul_sub_to(&mut acc, &m[i][j], &x[j], &mut tmp);
        }
        x[i] = &acc / &m[i][i];
    }
    x
}

fn mat_vec(a: &[Vec<Mpc>], x: &[Mpc]) -> Vec<Mpc> {
    let prec = x[0].prec();
    a.iter()
        .map(|row| {
            let mut acc = Mpc::zero(prec);
            let mut tmp = Float::new(prec);
            for (aij, xj) in row.iter().zip(x) {
                if !aij.is_zero() {
                    mul_add_to(&mut acc, aij, xj, &mut tmp);
                }
            }
            acc
        })
        .collect()
}

fn inf_norm_vec(x: &[Mpc]) -> Float {
    let prec = x[0].prec();
    x.iter().map(|v| v.abs()).fold(Float::new(prec), |m, v| if v > m { v } else { m })
}

/// Inverse iteration for the eigenvector near `lambda`. The shift is refreshed
/// from the iterate after every pass, so a low-precision eigenvalue estimate
/// is enough to start. Returns the vector, the refined eigenvalue and the
/// normalized residual `|(A - lambda) x| / (|A| |x|)`.
fn inverse_iteration(a: &[Vec<Mpc>], lambda: &Mpc, anorm: &Float) -> (Vec<Mpc>, Mpc, f64) {
    let n = a.len();
    let prec = lambda.prec();
    // perturbation eps^(3/4) |A|, the double-precision analogue of 1e-12 |A|
    let delta = Float::with_val(prec, Float::u_exp(1, -(3 * prec as i32) / 4)) * anorm;
    let nudge = Mpc::from_floats(delta.clone(), Float::with_val(prec, &delta * 0.5f64));
    let tiny = Float::with_val(prec, Float::u_exp(1, -(prec as i32))) * anorm;
    let tol = Float::with_val(prec, Float::u_exp(1, -(3 * prec as i32) / 4));
    let mut lam = lambda.clone();
    let mut b: Vec<Mpc> = vec![Mpc::from_f64(1.0, prec); n];
    let mut residual = f64::INFINITY;
    for _pass in 0..INVERSE_PASSES {
        let sigma = &lam + &nudge;
        let x = hessenberg_solve(a, &sigma, &b, &tiny);
        // (A - sigma) x = b, so A x = sigma x + b; read lambda off the largest entry
        let k = (0..n).max_by(|&i, &j| x[i].abs1().partial_cmp(&x[j].abs1()).unwrap()).unwrap();
        lam = &sigma + &(&b[k] / &x[k]);
        let inv = Float::with_val(prec, 1u32) / inf_norm_vec(&x);
        b = x.iter().map(|v| v.scale(&inv)).collect();
        let ax = mat_vec(a, &b);
        let r: Vec<Mpc> = ax.iter().zip(&b).map(|(u, v)| u - &(&lam * v)).collect();
        let rn = inf_norm_vec(&r) / anorm;
        residual = rn.to_f64();
        if rn < tol {
            break;
        }
    }
    (b, lam, residual)
}

const INVERSE_PASSES: usize = 8;

/// Coefficients of `Q S'' + P S' + V S` with `V = v1 z + v0`, all in the
/// same local variable; returns `(sup |residual|, sup |Q S''|)`.
fn heun_residual(q: &MpPoly, p: &MpPoly, v1: &Mpc, v0: &Mpc, s: &[Mpc]) -> (Float, Float) {
    let prec = v1.prec();
    let n = s.len() - 1;
    let mut res = vec![Mpc::zero(prec); n + 2];
    let mut qs2 = vec![Mpc::zero(prec); n + 2];
    for k in 0..=n {
        if k >= 2 {
            let d2 = s[k].scale_f64((k * (k - 1)) as f64);
            for (j, qj) in q.coeffs.iter().enumerate() {
                let t = qj * &d2;
                qs2[k - 2 + j] += &t;
            }
        }
        if k >= 1 {
            let d1 = s[k].scale_f64(k as f64);
            for (j, pj) in p.coeffs.iter().enumerate() {
                let t = pj * &d1;
                res[k - 1 + j] += &t;
            }
        }
        let t = v1 * &s[k];
        res[k + 1] += &t;
        let t = v0 * &s[k];
        res[k] += &t;
    }
    for (r, q2) in res.iter_mut().zip(&qs2) {
        *r += q2;
    }
    (inf_norm_vec(&res), inf_norm_vec(&qs2))
}

/// Single-linkage clusters of `t` at absolute threshold `thr`, each cluster
/// as sorted member indices; clusters ordered by their first member.
fn clusters(t: &[C64], thr: f64) -> Vec<Vec<usize>> {
    let n = t.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (t[i] - t[j]).norm() <= thr {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

pub fn solve(op: &HeunOperator, n: usize, cluster_tol: f64) -> Result<SpectrumResult> {
    solve_with(op, n, SolveOptions { cluster_tol, ..Default::default() })
}

pub fn solve_with(op: &HeunOperator, n: usize, opts: SolveOptions) -> Result<SpectrumResult> {
    if n == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    if n > MAX_DEGREE {
        return Err(Error::DegreeTooLarge { n, max: MAX_DEGREE });
    }
    let v1c = leading_v1(op, n);
    if v1c.norm() == 0.0 {
        return Err(Error::DegenerateLeading { n });
    }
    let prec = opts.precision.unwrap_or_else(|| precision_for_degree(n));
    let eig_prec = opts.eig_precision.unwrap_or_else(|| eigen_precision_for_degree(n));

    // eigenvalues at the cheaper precision
    let (mut work, c) = centered_pencil(op, n, eig_prec);
    let rough = hessenberg_eigenvalues(&mut work)?;
    drop(work);
    let v1e = Mpc::from_c64(v1c, eig_prec);
    let ce = Mpc::from_c64(c, eig_prec);
    let mut t_rough: Vec<(C64, Mpc)> = rough.into_iter().map(|l| ((&(&l / &v1e) + &ce).to_c64(), l)).collect();
    t_rough.sort_by(|x, y| poly::lex_cmp(&x.0, &y.0));

    let mut diam: f64 = 0.0;
    for i in 0..t_rough.len() {
        for j in i + 1..t_rough.len() {
            diam = diam.max((t_rough[i].0 - t_rough[j].0).norm());
        }
    }
    let thr = opts.cluster_tol * if diam > 0.0 { diam } else { 1.0 };
    let ts: Vec<C64> = t_rough.iter().map(|x| x.0).collect();
    let groups = clusters(&ts, thr);

    // eigenvectors, refined eigenvalues and residuals at full precision
    let (a, _) = centered_pencil(op, n, prec);
    let mut anorm = Float::new(prec);
    for row in &a {
        let mut s = Float::new(prec);
        for v in row {
            s += v.abs1();
        }
        if s > anorm {
            anorm = s;
        }
    }
    let v1 = Mpc::from_c64(v1c, prec);
    let cm = Mpc::from_c64(c, prec);
    let t_of = |l: &Mpc| (&(l / &v1) + &cm).to_c64();
    let qc = MpPoly::from_poly(&op.q, prec).recenter(c);
    let pc = MpPoly::from_poly(&op.p, prec).recenter(c);
    let drop_tol = Float::with_val(prec, Float::u_exp(1, -(prec as i32) / 2)).to_f64();
    let solved: Vec<Result<(VanVleckPair, Vec<C64>)>> = groups
        .par_iter()
        .map(|g| {
            let mut lam = Mpc::zero(prec);
            for &i in g {
                let l = &t_rough[i].1;
                lam += &Mpc::from_floats(Float::with_val(prec, &l.re), Float::with_val(prec, &l.im));
            }
            let lam = lam.scale_f64(1.0 / g.len() as f64);
            let (x, lam_refined, _) = inverse_iteration(&a, &lam, &anorm);
            // a genuine cluster keeps its mean; a simple eigenvalue takes the refinement
            let lam = if g.len() == 1 { lam_refined } else { lam };
            let t = t_of(&lam);
            let lead_rel = (Float::with_val(prec, x[n].abs() / &inf_norm_vec(&x))).to_f64();
            if lead_rel < drop_tol {
                return Err(Error::DegreeDrop { t, lead: lead_rel });
            }
            let inv = x[n].inv();
            let s: Vec<Mpc> = x.iter().map(|v| v * &inv).collect();
            let v0_local = -&lam;
            let (rn, qn) = heun_residual(&qc, &pc, &v1, &v0_local, &s);
            let residual = if qn.is_zero() { rn.to_f64() } else { (rn / qn).to_f64() };
            let s_exact = MpPoly { center: c, coeffs: s };
            // v0 in the original variable: v1 (z - c) + v0_local = v1 z + v0
            let v0 = (&v0_local - &(&v1 * &cm)).to_c64();
            let members = if g.len() == 1 { vec![t] } else { g.iter().map(|&i| t_rough[i].0).collect() };
            let pair = VanVleckPair { v1: v1c, v0, t, s: s_exact.to_polynomial(), s_exact, multiplicity: g.len(), residual };
            Ok((pair, members))
        })
        .collect();
    let mut pairs = Vec::with_capacity(solved.len());
    let mut t_roots = Vec::with_capacity(n + 1);
    for r in solved {
        let (pair, members) = r?;
        pairs.push(pair);
        t_roots.extend(members);
    }
    sort_lex(&mut t_roots);
    let measure = DiscreteMeasure::uniform(t_roots.clone(), format!("spectral roots, n = {n}"));
    Ok(SpectrumResult { n, pairs, t_roots, measure, precision: prec })
}

/// Roots of the spectral polynomial from the QR iteration alone, at the given
/// precision, sorted. No eigenvectors.
pub fn spectral_values(op: &HeunOperator, n: usize, prec: u32) -> Result<Vec<C64>> {
    let v1c = leading_v1(op, n);
    if v1c.norm() == 0.0 {
        return Err(Error::DegenerateLeading { n });
    }
    let (mut a, c) = centered_pencil(op, n, prec);
    let v1_inv = Mpc::from_c64(v1c, prec).inv();
    let cm = Mpc::from_c64(c, prec);
    let mut t: Vec<C64> = hessenberg_eigenvalues(&mut a)?.iter().map(|l| (&(l * &v1_inv) + &cm).to_c64()).collect();
    sort_lex(&mut t);
    Ok(t)
}

/// The `n + 1` values `t_{n,j}` with multiplicity, sorted.
pub fn spectral_roots(res: &SpectrumResult) -> Vec<C64> {
    let mut t = res.t_roots.clone();
    sort_lex(&mut t);
    t
}

/// Roots of the Stieltjes polynomial of a pair, at the pair's precision.
pub fn stieltjes_roots(pair: &VanVleckPair) -> Result<Vec<C64>> {
    pair.s_exact.roots()
}

/// Root-counting measure of `S`, weight `1/n` per root.
pub fn stieltjes_measure(pair: &VanVleckPair) -> Result<DiscreteMeasure> {
    let r = stieltjes_roots(pair)?;
    Ok(DiscreteMeasure::uniform(r, format!("Stieltjes roots, t = {}", pair.t)))
}

/// Pólya inclusion test. `None` when the residues of `P/Q` are not all
/// positive, otherwise whether every `t` and every Stieltjes root lies within
/// `tol` of the triangle spanned by the roots of `Q`.
pub fn polya_check(op: &HeunOperator, res: &SpectrumResult, tol: f64) -> Result<Option<bool>> {
    let tri = op.triangle()?;
    let dq = op.q.derivative();
    for a in op.roots {
        let rho = op.p.eval(a) / dq.eval(a);
        if rho.re <= tol || rho.im.abs() > tol {
            return Ok(None);
        }
    }
    for &t in &res.t_roots {
        if tri.hull_distance(t) > tol {
            return Ok(Some(false));
        }
    }
    for pair in &res.pairs {
        for r in stieltjes_roots(pair)? {
            if tri.hull_distance(r) > tol {
                return Ok(Some(false));
            }
        }
    }
    Ok(Some(true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lame_pm1() -> HeunOperator {
        HeunOperator::lame([c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    #[test]
    fn leading_coefficient_examples() {
        assert_eq!(leading_v1(&lame_pm1(), 1), c(-1.5, 0.0));
        let op = HeunOperator::from_roots([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)], Polynomial::zero()).unwrap();
        assert_eq!(leading_v1(&op, 7), c(-42.0, 0.0));
        assert_eq!(leading_v1(&op, 1), c(0.0, 0.0));
    }

    #[test]
    fn pencil_examples() {
        let a = build_pencil(&lame_pm1(), 1);
        assert!((a[0][0]).norm() < 1e-15 && (a[0][1] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((a[1][0] - c(-1.5, 0.0)).norm() < 1e-15 && a[1][1].norm() < 1e-15);
        let op = HeunOperator::from_roots([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)], Polynomial::zero()).unwrap();
        let z = build_pencil(&op, 1);
        assert!(z.iter().flatten().all(|v| v.norm() == 0.0));
        let op = HeunOperator::from_roots(
            [c(0.3, 0.1), c(-1.0, 2.0), c(1.0, -1.0)],
            Polynomial::new(vec![c(1.0, 1.0), c(0.5, 0.0), c(2.0, -1.0)]),
        )
        .unwrap();
        let a = build_pencil(&op, 6);
        for (r, row) in a.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                if r > col + 1 || col > r + 2 {
                    assert_eq!(*v, c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn degenerate_v1_rejected() {
        let op = HeunOperator::from_roots([c(0.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)], Polynomial::zero()).unwrap();
        assert!(matches!(solve(&op, 1, 1e-7), Err(Error::DegenerateLeading { .. })));
        assert!(matches!(solve(&op, 301, 1e-7), Err(Error::DegreeTooLarge { .. })));
    }

    #[test]
    fn lame_n1_by_hand() {
        let res = solve(&lame_pm1(), 1, 1e-7).unwrap();
        let s3 = 1.0 / 3f64.sqrt();
        let t = spectral_roots(&res);
        assert!((t[0] - c(-s3, 0.0)).norm() < 1e-12 && (t[1] - c(s3, 0.0)).norm() < 1e-12);
        // hand solution: S = z + s gives v0 = 3s/2 and s^2 = 1/3, so t = s
        let p0 = &res.pairs[0];
        assert!((p0.s.coeff(0) - c(-s3, 0.0)).norm() < 1e-12);
        assert!((p0.v0 - c(-3f64.sqrt() / 2.0, 0.0)).norm() < 1e-12);
        let m = stieltjes_measure(p0).unwrap();
        assert!((m.points[0] - c(s3, 0.0)).norm() < 1e-12);
    }
}
