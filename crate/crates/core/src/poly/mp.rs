//! Multiprecision complex scalars and polynomial routines on top of MPFR.
//!
//! The Heun pencil and its Stieltjes polynomials are exponentially
//! ill-conditioned in the monomial basis, so degrees beyond a few dozen need
//! more than 53 bits. Everything here carries an explicit precision.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::{Assign, Float};

use super::{aberth_start, cauchy_bound, sort_lex, Polynomial, C64};
use crate::error::{Error, Result};

/// Bits for eigenvectors and Stieltjes roots of a degree-`n` Heun problem.
/// Calibrated against runs at higher precision, see `tests/precision.rs`.
pub fn precision_for_degree(n: usize) -> u32 {
    (96 + 5 * n / 2).max(128) as u32
}

/// Bits for the QR eigenvalue iteration. Below roughly `1.1 n` bits the
/// computed spectrum of typical complex pencils is off by O(0.1) (it follows
/// the pseudospectrum); above it the error drops to working precision.
pub fn eigen_precision_for_degree(n: usize) -> u32 {
    (64 + 9 * n / 8).max(128) as u32
}

#[derive(Clone, Debug)]
pub struct Mpc {
    pub re: Float,
    pub im: Float,
}

impl Mpc {
    pub fn zero(prec: u32) -> Self {
        Mpc { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn from_c64(z: C64, prec: u32) -> Self {
        Mpc { re: Float::with_val(prec, z.re), im: Float::with_val(prec, z.im) }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        Mpc { re: Float::with_val(prec, x), im: Float::new(prec) }
    }

    pub fn from_floats(re: Float, im: Float) -> Self {
        Mpc { re, im }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let mut s = Float::with_val(p, &self.re * &self.re);
        s += Float::with_val(p, &self.im * &self.im);
        s
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    /// `|re| + |im|`, a cheap norm used in convergence tests.
    pub fn abs1(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.abs_ref()) + Float::with_val(p, self.im.abs_ref())
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn conj(&self) -> Self {
        Mpc { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec();
        Mpc { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        let p = self.prec();
        Mpc { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn inv(&self) -> Self {
        let d = self.norm_sqr();
        let p = self.prec();
        Mpc { re: Float::with_val(p, &self.re / &d), im: Float::with_val(p, -&self.im) / &d }
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        let r = self.abs();
        if r.is_zero() {
            return Mpc::zero(p);
        }
        let re = (Float::with_val(p, &r + &self.re) / 2u32).sqrt();
        let mut im = (Float::with_val(p, &r - &self.re) / 2u32).sqrt();
        if self.im.is_sign_negative() {
            im = -im;
        }
        Mpc { re, im }
    }
}

impl Add<&Mpc> for &Mpc {
    type Output = Mpc;
    fn add(self, rhs: &Mpc) -> Mpc {
        let p = self.prec();
        Mpc { re: Float::with_val(p, &self.re + &rhs.re), im: Float::with_val(p, &self.im + &rhs.im) }
    }
}

impl Sub<&Mpc> for &Mpc {
    type Output = Mpc;
    fn sub(self, rhs: &Mpc) -> Mpc {
        let p = self.prec();
        Mpc { re: Float::with_val(p, &self.re - &rhs.re), im: Float::with_val(p, &self.im - &rhs.im) }
    }
}

impl Mul<&Mpc> for &Mpc {
    type Output = Mpc;
    fn mul(self, rhs: &Mpc) -> Mpc {
        let p = self.prec();
        let mut re = Float::with_val(p, &self.re * &rhs.re);
        re -= Float::with_val(p, &self.im * &rhs.im);
        let mut im = Float::with_val(p, &self.re * &rhs.im);
        im += Float::with_val(p, &self.im * &rhs.re);
        Mpc { re, im }
    }
}

impl Div<&Mpc> for &Mpc {
    type Output = Mpc;
    // through the reciprocal, which Mpc already provides
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Mpc) -> Mpc {
        self * &rhs.inv()
    }
}

impl Neg for &Mpc {
    type Output = Mpc;
    fn neg(self) -> Mpc {
        let p = self.prec();
        Mpc { re: Float::with_val(p, -&self.re), im: Float::with_val(p, -&self.im) }
    }
}

impl AddAssign<&Mpc> for Mpc {
    fn add_assign(&mut self, rhs: &Mpc) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&Mpc> for Mpc {
    fn sub_assign(&mut self, rhs: &Mpc) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&Mpc> for Mpc {
    fn mul_assign(&mut self, rhs: &Mpc) {
        *self = &*self * rhs;
    }
}

/// `dst += a * b` without allocating; `tmp` must have the working precision.
#[inline]
pub fn mul_add_to(dst: &mut Mpc, a: &Mpc, b: &Mpc, tmp: &mut Float) {
    tmp.assign(&a.re * &b.re);
    dst.re += &*tmp;
    tmp.assign(&a.im * &b.im);
    dst.re -= &*tmp;
    tmp.assign(&a.re * &b.im);
    dst.im += &*tmp;
    tmp.assign(&a.im * &b.re);
    dst.im += &*tmp;
}

/// `dst -= a * b` without allocating.
#[inline]
pub fn mul_sub_to(dst: &mut Mpc, a: &Mpc, b: &Mpc, tmp: &mut Float) {
    tmp.assign(&a.re * &b.re);
    dst.re -= &*tmp;
    tmp.assign(&a.im * &b.im);
    dst.re += &*tmp;
    tmp.assign(&a.re * &b.im);
    dst.im -= &*tmp;
    tmp.assign(&a.im * &b.re);
    dst.im -= &*tmp;
}

/// `dst = dst * w + c` in place.
#[inline]
pub fn horner_step(dst: &mut Mpc, w: &Mpc, c: &Mpc, t: &mut [Float; 2]) {
    let [t0, t1] = t;
    t0.assign(&dst.re * &w.re);
    t1.assign(&dst.im * &w.im);
    *t0 -= &*t1;
    t1.assign(&dst.re * &w.im);
    dst.im *= &w.re;
    dst.im += &*t1;
    dst.im += &c.im;
    dst.re.assign(&*t0 + &c.re);
}

/// Applies `x' = alpha x + beta y`, `y' = gamma y - delta x` in place.
#[inline]
pub fn rotate_pair(x: &mut Mpc, y: &mut Mpc, g: &[Mpc; 4], s: &mut RotScratch) {
    let [alpha, beta, gamma, delta] = g;
    s.x.re.assign(&x.re);
    s.x.im.assign(&x.im);
    x.re.assign(0);
    x.im.assign(0);
    mul_add_to(x, alpha, &s.x, &mut s.t);
    mul_add_to(x, beta, y, &mut s.t);
    s.y.re.assign(&y.re);
    s.y.im.assign(&y.im);
    y.re.assign(0);
    y.im.assign(0);
    mul_add_to(y, gamma, &s.y, &mut s.t);
    mul_sub_to(y, delta, &s.x, &mut s.t);
}

pub struct RotScratch {
    x: Mpc,
    y: Mpc,
    t: Float,
}

impl RotScratch {
    pub fn new(prec: u32) -> Self {
        RotScratch { x: Mpc::zero(prec), y: Mpc::zero(prec), t: Float::new(prec) }
    }
}

/// Polynomial in `z - center` with multiprecision coefficients, low order first.
#[derive(Clone, Debug)]
pub struct MpPoly {
    pub center: C64,
    pub coeffs: Vec<Mpc>,
}

impl MpPoly {
    pub fn from_poly(p: &Polynomial, prec: u32) -> Self {
        MpPoly { center: C64::new(0.0, 0.0), coeffs: p.coeffs().iter().map(|&c| Mpc::from_c64(c, prec)).collect() }
    }

    pub fn prec(&self) -> u32 {
        self.coeffs.first().map(|c| c.prec()).unwrap_or(128)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation in the local variable `w = z - center`.
    pub fn eval_local(&self, w: &Mpc) -> Mpc {
        let mut acc = Mpc::zero(w.prec());
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * w) + c;
        }
        acc
    }

    pub fn derivative(&self) -> MpPoly {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.scale_f64(k as f64)).collect();
        MpPoly { center: self.center, coeffs }
    }

    /// Re-expand about a new center, all arithmetic at the working precision.
    pub fn recenter(&self, new_center: C64) -> MpPoly {
        let prec = self.prec();
        let d = &Mpc::from_c64(new_center, prec) - &Mpc::from_c64(self.center, prec);
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let t = &d * &a[k + 1];
                a[k] += &t;
            }
        }
        MpPoly { center: new_center, coeffs: a }
    }

    /// Rounded coefficients in the global variable `z`.
    pub fn to_polynomial(&self) -> Polynomial {
        let p = self.recenter(C64::new(0.0, 0.0));
        Polynomial::new(p.coeffs.iter().map(|c| c.to_c64()).collect())
    }

    /// Roots by Aberth iteration, returned rounded and sorted lexicographically.
    ///
    /// `p/p'` is evaluated at the working precision; the pairwise Aberth sum
    /// only needs a few correct digits and is accumulated in doubles.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::InvalidInput("roots of a constant polynomial".into()));
        }
        let prec = self.prec();
        let lead_inv = self.coeffs[n].inv();
        let monic = MpPoly { center: self.center, coeffs: self.coeffs.iter().map(|c| c * &lead_inv).collect() };
        // expand about the root centroid for a tight start circle
        let shift = (monic.coeffs[n - 1].to_c64()) / -(n as f64);
        let origin = self.center + shift;
        let local = monic.recenter(origin);
        let abs: Vec<f64> = local.coeffs.iter().map(|c| c.abs_f64()).collect();
        let start = aberth_start(C64::new(0.0, 0.0), cauchy_bound(&abs), n);
        let mut z: Vec<Mpc> = start.iter().map(|&s| Mpc::from_c64(s, prec)).collect();
        let mut zf = start;
        let scale = zf.iter().map(|r| r.norm()).fold(0.0, f64::max).max(1e-300);
        // corrections below this are far under double precision
        let tol = scale * 1e-20;
        let mut done = vec![false; n];
        let mut last_max = f64::INFINITY;
        let (mut pv, mut dv) = (Mpc::zero(prec), Mpc::zero(prec));
        let mut t = [Float::new(prec), Float::new(prec)];
        for it in 0..ABERTH_MAX_ITER_MP {
            let mut max_corr: f64 = 0.0;
            for k in 0..n {
                if done[k] {
                    continue;
                }
                pv.clone_from(&local.coeffs[n]);
                dv.re.assign(0);
                dv.im.assign(0);
                for c in local.coeffs[..n].iter().rev() {
                    horner_step(&mut dv, &z[k], &pv, &mut t);
                    horner_step(&mut pv, &z[k], c, &mut t);
                }
                if pv.is_zero() {
                    done[k] = true;
                    continue;
                }
                let ratio = (&pv / &dv).to_c64();
                let mut s = C64::new(0.0, 0.0);
                for (j, zj) in zf.iter().enumerate() {
                    if j != k {
                        s += (zf[k] - zj).inv();
                    }
                }
                let corr = ratio / (1.0 - ratio * s);
                let c = corr.norm();
                if !c.is_finite() {
                    max_corr = f64::INFINITY;
                    continue;
                }
                z[k] -= &Mpc::from_c64(corr, prec);
                zf[k] = z[k].to_c64();
                max_corr = max_corr.max(c);
                if c < tol {
                    done[k] = true;
                }
            }
            if done.iter().all(|&d| d) || max_corr < tol {
                return Ok(finish(&z, origin));
            }
            // stagnation at the noise floor of the working precision
            let stalled = it > 50 && max_corr < scale * 1e-15 && max_corr >= last_max;
            if stalled || it + 1 == ABERTH_MAX_ITER_MP {
                return Err(Error::RootsNoConvergence { best: finish(&z, origin), residual: max_corr });
            }
            last_max = max_corr;
        }
        unreachable!()
    }
}

const ABERTH_MAX_ITER_MP: usize = 600;

fn finish(z: &[Mpc], center: C64) -> Vec<C64> {
    let mut out: Vec<C64> = z.iter().map(|r| r.to_c64() + center).collect();
    sort_lex(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trip() {
        let a = Mpc::from_c64(C64::new(1.5, -2.0), 200);
        let b = Mpc::from_c64(C64::new(-0.25, 0.75), 200);
        let q = &(&a * &b) / &b;
        assert!((q.to_c64() - C64::new(1.5, -2.0)).norm() < 1e-30);
        let s = Mpc::from_c64(C64::new(-4.0, 0.0), 200).sqrt();
        assert!((s.to_c64() - C64::new(0.0, 2.0)).norm() < 1e-30);
        let s = Mpc::from_c64(C64::new(-4.0, -0.0), 200).sqrt();
        assert!((s.to_c64() - C64::new(0.0, -2.0)).norm() < 1e-30);
    }

    #[test]
    fn roots_of_wilkinson_like_polynomial() {
        // roots 1..=20 in z, badly conditioned in doubles
        let r: Vec<C64> = (1..=20).map(|k| C64::new(k as f64, 0.0)).collect();
        let p = MpPoly { center: C64::new(0.0, 0.0), coeffs: {
            let prec = 256;
            let mut c = vec![Mpc::from_f64(1.0, prec)];
            for x in &r {
                let x = Mpc::from_c64(*x, prec);
                c.push(Mpc::zero(prec));
                for k in (1..c.len()).rev() {
                    let t = &x * &c[k];
                    c[k] = &c[k - 1] - &t;
                }
                c[0] = -&(&x * &c[0]);
            }
            c
        } };
        let got = p.roots().unwrap();
        for (g, e) in got.iter().zip(&r) {
            assert!((g - e).norm() < 1e-14, "{g} vs {e}");
        }
    }
}
