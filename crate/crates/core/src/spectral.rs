//! Eigenvalues as zeros of F_J, eigenvectors, norms, Green functions and
//! bilateral second-order difference equations.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ffun::{f_bilateral, f_from_pairs, f_left_profile, f_tail_profile, SequenceSpec};
use crate::jacobi::{charfn, charfn_cleared, check_convergence, GeneralJacobiDescriptor, JacobiDescriptor, PROBE_LEN};
use crate::truncation::truncated_spectrum_in;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Accuracy requested from 𝔉 tails inside zero searches.
/// Tolerance for evaluating the characteristic function during zero searches.
pub const F_TOL: f64 = 1e-13;
const K_CAP: usize = 10_000;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealZero {
    pub z: f64,
    pub bracket: (f64, f64),
    /// |ξ_0(z)| in the scaled pole-free form used for the search.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub z: C64,
    /// ξ_1..ξ_K.
    pub xi: Vec<C64>,
    /// Σ_{k≤K} |ξ_k|².
    pub norm_sq: f64,
    pub bracket: Option<(f64, f64)>,
}

impl EigenPair {
    /// max_k |w_{k−1}ξ_{k−1} + (λ_k − z)ξ_k + w_kξ_{k+1}| / max|ξ| over 2 ≤ k ≤ K−1.
    pub fn recurrence_residual(&self, desc: &JacobiDescriptor) -> f64 {
        let k_len = self.xi.len();
        let scale = self.xi.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for k in 2..k_len {
            let kk = k as i64;
            let r =
                desc.w(kk - 1) * self.xi[k - 2] + (desc.lambda(kk) - self.z) * self.xi[k - 1] + desc.w(kk) * self.xi[k];
            worst = worst.max(r.norm());
        }
        worst / scale
    }
}

// ---------------------------------------------------------------------------
// zero search

/// Largest index with λ_k inside `[a, b]`, or 0.
fn last_index_in(desc: &JacobiDescriptor, a: f64, b: f64) -> i64 {
    let inside = |k: i64| {
        let l = desc.lambda_re(k);
        l >= a && l <= b
    };
    let mut m = (1..=PROBE_LEN).filter(|&k| inside(k)).max().unwrap_or(0);
    if m == PROBE_LEN {
        let mut k = PROBE_LEN + 1;
        while k < 1_000_000 && inside(k) {
            m = k;
            k += 1;
        }
    }
    m
}

/// Push the cleared index past diagonal entries that sit just outside the
/// window, so the remaining tail has a moderate pair sum at both ends.
/// The extra factors `λ_k − u` do not vanish on the window.
fn well_conditioned_index(desc: &JacobiDescriptor, a: f64, b: f64, m: i64) -> i64 {
    let head = |u: f64, from: i64| -> f64 { (from..from + 256).map(|k| desc.pair(re(u), k).norm()).sum() };
    let mut m = m;
    for _ in 0..64 {
        if head(a, m + 1) <= 1.0 && head(b, m + 1) <= 1.0 {
            break;
        }
        m += 1;
    }
    m
}

/// Real, pole-free function on the window with the same zeros as the
/// regularized characteristic function.
struct WindowFn<'a> {
    desc: &'a JacobiDescriptor,
    m: i64,
}

impl WindowFn<'_> {
    fn eval(&self, u: f64) -> Result<f64> {
        Ok(charfn_cleared(self.desc, re(u), self.m, F_TOL)?.re)
    }
}

/// All zeros of the regularized F_J in `[a, b]`.
pub fn find_real_zeros(desc: &JacobiDescriptor, window: (f64, f64), tol: f64) -> Result<Vec<RealZero>> {
    let (a, b) = window;
    if !desc.is_real() {
        return Err(Error::BadParams("real zero search needs a real descriptor".into()));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::BadParams(format!("bad window ({a}, {b})")));
    }
    if desc.der_lambda().meets_interval(a, b) {
        return Err(Error::WindowTouchesAccumulation { lo: a, hi: b });
    }
    let z0 = C64::new(0.5 * (a + b), 1.0 + (b - a));
    check_convergence(desc, z0, 1e-6).map_err(|e| Error::NoConvergenceCertificate(e.to_string()))?;

    let f = WindowFn { desc, m: well_conditioned_index(desc, a, b, last_index_in(desc, a, b)) };
    let n_seed = (400usize).max(4 * f.m as usize);
    let seeds = truncated_spectrum_in(desc, n_seed, a, b, 1e-12 * (1.0 + a.abs().max(b.abs())))?;

    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(seeds.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let grid = 48;
    pts.extend((1..grid).map(|i| a + (b - a) * i as f64 / grid as f64));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
    // keep each seed strictly inside its own cell
    pts.retain(|p| seeds.iter().all(|s| (p - s).abs() > 1e-9 * (1.0 + s.abs())) || *p == a || *p == b);

    let vals: Vec<f64> = pts.iter().map(|&p| f.eval(p)).collect::<Result<_>>()?;
    let mut out: Vec<RealZero> = Vec::new();
    for i in 0..pts.len() {
        if vals[i] == 0.0 {
            let p = pts[i];
            out.push(RealZero { z: p, bracket: (p, p), residual: 0.0 });
        }
        if i + 1 < pts.len() && vals[i] * vals[i + 1] < 0.0 {
            out.push(refine(&f, pts[i], pts[i + 1], vals[i], vals[i + 1], tol)?);
        }
    }
    out.dedup_by(|x, y| (x.z - y.z).abs() <= tol * (1.0 + x.z.abs()));
    Ok(out)
}

/// Bracketed Illinois iteration with a bisection safeguard. Once the
/// estimate settles, the bracket is closed to width `tol·(1+|z|)` around it.
fn refine(f: &WindowFn, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64, tol: f64) -> Result<RealZero> {
    let width = |x: f64| tol * (1.0 + x.abs());
    let mut side = 0i32;
    let mut last_width = hi - lo;
    let mut stall = 0;
    let mut x_prev = f64::NAN;
    for _ in 0..300 {
        if hi - lo <= width(0.5 * (lo + hi)) {
            break;
        }
        let mut x = if stall >= 3 { 0.5 * (lo + hi) } else { (lo * fhi - hi * flo) / (fhi - flo) };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        if (x - x_prev).abs() < width(x) {
            let h = 0.5 * width(x);
            if x - h > lo && x + h < hi {
                let (fl, fr) = (f.eval(x - h)?, f.eval(x + h)?);
                if fl * fr <= 0.0 {
                    lo = x - h;
                    hi = x + h;
                    break;
                }
            }
        }
        x_prev = x;
        let fx = f.eval(x)?;
        if fx == 0.0 {
            lo = x;
            hi = x;
            break;
        }
        if fx * flo < 0.0 {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        }
        if hi - lo > 0.5 * last_width {
            stall += 1;
        } else {
            stall = 0;
            last_width = hi - lo;
        }
    }
    let z = 0.5 * (lo + hi);
    let residual = f.eval(z)?.abs();
    Ok(RealZero { z, bracket: (lo, hi), residual })
}

// ---------------------------------------------------------------------------
// eigenvectors and norms

/// ξ_1..ξ_K at `z`. With `k_len = None`, K is the smallest length with
/// |ξ_K| ≤ 1e−14·max|ξ_k|, capped at 10⁴.
pub fn eigenvector(desc: &JacobiDescriptor, z: C64, k_len: Option<usize>, tol: f64) -> Result<EigenPair> {
    if desc.der_lambda().contains(z, 0.0) {
        return Err(Error::AccumulationPoint(z));
    }
    let mut k = k_len.unwrap_or(64).max(1);
    loop {
        let xi = xi_components(desc, z, k, tol)?;
        let top = xi.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let done = k_len.is_some() || xi[k - 1].norm() <= 1e-14 * top || k >= K_CAP;
        if done {
            let norm_sq = xi.iter().map(|x| x.norm_sqr()).sum();
            return Ok(EigenPair { z, xi, norm_sq, bracket: None });
        }
        k = (2 * k).min(K_CAP);
    }
}

fn xi_components(desc: &JacobiDescriptor, z: C64, k_len: usize, tol: f64) -> Result<Vec<C64>> {
    let scan = (k_len as i64).max(PROBE_LEN);
    let near = |l: i64| (z - desc.lambda(l)).norm() < 1e-4 * (1.0 + desc.lambda(l).norm());
    let exact = |l: i64| (z - desc.lambda(l)).norm() < 1e-12 * (1.0 + desc.lambda(l).norm());
    let m = (1..=scan).filter(|&l| near(l)).max().unwrap_or(0);
    let seq = desc.sequence_at(z)?;
    let w = |l: i64| if l == 0 { ONE } else { desc.w(l) };

    // ξ_k for k ≥ max(m, 1): product (exact hits dropped) times the 𝔉 tail
    let k0 = m.max(1);
    let count = (k_len as i64 - k0 + 2).max(2) as usize;
    let (tails, _) = f_tail_profile(&seq, k0 + 1, count, tol)?;
    let mut prod = ONE;
    for l in 1..=k0 {
        prod *= w(l - 1);
        if !exact(l) {
            prod /= z - desc.lambda(l);
        }
    }
    let mut upper = Vec::with_capacity(count);
    for (j, t) in tails.iter().enumerate() {
        let k = k0 + j as i64;
        if j > 0 {
            prod *= w(k - 1);
            if !exact(k) {
                prod /= z - desc.lambda(k);
            }
        }
        upper.push(prod * t);
    }
    // below k0: backward through the eigenvalue equation
    let mut xi = vec![ZERO; k_len + 1];
    for (j, v) in upper.iter().enumerate() {
        let idx = k0 as usize + j;
        if idx <= k_len {
            xi[idx] = *v;
        }
    }
    let (mut next, mut cur) = (upper[1], upper[0]); // ξ_{k+1}, ξ_k
    let mut k = k0;
    while k > 1 {
        let prev = ((z - desc.lambda(k)) * cur - desc.w(k) * next) / w(k - 1);
        xi[(k - 1) as usize] = prev;
        next = cur;
        cur = prev;
        k -= 1;
    }
    xi.remove(0);
    xi.truncate(k_len);
    Ok(xi)
}

/// ξ_0(u) = (u − z)^{r} F_J(u) near a fixed `z`, for `u ≠ z`.
fn xi0_near(desc: &JacobiDescriptor, z: f64, r: usize, u: f64, tol: f64) -> Result<f64> {
    let (f, _) = charfn(desc, re(u), tol)?;
    Ok(f.re * (u - z).powi(r as i32))
}

/// `ξ′_0(z)ξ_1(z)` (finite differences, one Richardson step) and `Σ_{k≤K} ξ_k²`.
pub fn eigen_norm_sq(desc: &JacobiDescriptor, z: f64, tol: f64) -> Result<(f64, f64)> {
    if !desc.is_real() {
        return Err(Error::BadParams("norms are defined for real descriptors only".into()));
    }
    let (r, _) = desc.multiplicity(re(z), 1);
    let h = 1e-6f64.max(1e-7 * z.abs());
    let ftol = tol.min(1e-13);
    let d = |h: f64| -> Result<f64> {
        Ok((xi0_near(desc, z, r, z + h, ftol)? - xi0_near(desc, z, r, z - h, ftol)?) / (2.0 * h))
    };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    let deriv = (4.0 * d2 - d1) / 3.0;
    let ev = eigenvector(desc, re(z), None, ftol)?;
    Ok((deriv * ev.xi[0].re, ev.norm_sq))
}

/// Both sides of `Σ_{k≥1} ξ_k(z)² = ξ′_0ξ_1 − ξ_0ξ′_1` at a point off the
/// diagonal range (no pole factor).
pub fn xi_sum_identity(desc: &JacobiDescriptor, z: f64, tol: f64) -> Result<(f64, f64)> {
    let ftol = tol.min(1e-13);
    let xi0 = |u: f64| -> Result<f64> { Ok(charfn(desc, re(u), ftol)?.0.re) };
    let xi1 = |u: f64| -> Result<f64> { Ok(eigenvector(desc, re(u), Some(1), ftol)?.xi[0].re) };
    let h = 1e-5f64.max(1e-7 * z.abs());
    let diff = |g: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let d1 = (g(z + h)? - g(z - h)?) / (2.0 * h);
        let d2 = (g(z + h / 2.0)? - g(z - h / 2.0)?) / h;
        Ok((4.0 * d2 - d1) / 3.0)
    };
    let rhs = diff(&xi0)? * xi1(z)? - xi0(z)? * diff(&xi1)?;
    let ev = eigenvector(desc, re(z), None, ftol)?;
    let lhs = ev.xi.iter().map(|x| x.re * x.re).sum();
    Ok((lhs, rhs))
}

/// Whether 0 is an eigenvalue of a zero-diagonal matrix: `Σ 1/γ_{2k−1}²`
/// converges. Decided from the decay of the terms over `k ≤ 2000`.
pub fn zero_eigen_test(desc: &JacobiDescriptor) -> Result<bool> {
    if (1..=PROBE_LEN).any(|k| desc.lambda(k).norm() != 0.0) {
        return Err(Error::BadParams("zero_eigen_test needs a zero diagonal".into()));
    }
    let kmax = 2000i64;
    // 1/γ_{2k−1}² by the running product
    let mut g2 = 1.0f64;
    let mut terms = Vec::with_capacity(kmax as usize);
    for k in 1..=kmax {
        if k > 1 {
            let r = (desc.w(2 * (k - 1)) / desc.w(2 * (k - 1) - 1)).norm();
            g2 *= r * r;
        }
        terms.push(1.0 / g2);
    }
    let t = |k: i64| terms[(k - 1) as usize];
    let (k1, k2) = (kmax / 2, kmax);
    if !t(k2).is_finite() || t(k2) >= t(k1) {
        return Ok(false);
    }
    // geometric decay
    if t(k2) / t(k1) < 0.5f64.powi(((k2 - k1) / 10) as i32) {
        return Ok(true);
    }
    // algebraic decay ~ k^{−p}
    let p = -(t(k2) / t(k1)).ln() / (k2 as f64 / k1 as f64).ln();
    if p > 1.2 {
        Ok(true)
    } else if p < 1.0 {
        Ok(false)
    } else {
        Err(Error::NoConvergenceCertificate(format!("terms decay like k^-{p:.3}")))
    }
}

// ---------------------------------------------------------------------------
// Green functions

/// G(z; i, j) of the infinite matrix (1-based indices).
pub fn green_entry(desc: &JacobiDescriptor, z: C64, i: usize, j: usize, tol: f64) -> Result<C64> {
    if desc.der_lambda().contains(z, 0.0) {
        return Err(Error::AccumulationPoint(z));
    }
    let (lo, hi) = (i.min(j) as i64, i.max(j) as i64);
    if lo < 1 {
        return Err(Error::BadParams("Green function indices start at 1".into()));
    }
    let (full, _) = charfn(desc, z, tol)?;
    if full.norm() < tol {
        return Err(Error::NearSpectrum { value: full.norm() });
    }
    let seq = desc.sequence_at(z)?;
    let (right, _) = f_tail_profile(&seq, hi + 1, 1, tol)?;
    let left_pairs: Vec<C64> = (1..lo - 1).map(|k| desc.pair(z, k)).collect();
    let left = f_from_pairs(&left_pairs);
    let mut pref = -ONE / desc.w(hi);
    for l in lo..=hi {
        pref *= desc.w(l) / (z - desc.lambda(l));
    }
    Ok(pref * left * right[0] / full)
}

/// Weyl m-function m(z) = G(z; 1, 1).
pub fn weyl_m(desc: &JacobiDescriptor, z: C64, tol: f64) -> Result<C64> {
    green_entry(desc, z, 1, 1, tol)
}

/// Entry (i, j) of (J_n − z)^{−1} for a general finite Jacobi matrix.
pub fn green_finite(g: &GeneralJacobiDescriptor, n: usize, z: C64, i: usize, j: usize) -> Result<C64> {
    assert!(i >= 1 && j >= 1 && i <= n && j <= n, "indices out of range");
    let (lo, hi) = (i.min(j), i.max(j));
    let x = g.f_arguments(n, z);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularAtZ(z));
    }
    let total = crate::ffun::f_finite(&x);
    if total.norm() == 0.0 {
        return Err(Error::SingularAtZ(z));
    }
    let omega = if i < j {
        (i..j).fold(ONE, |p, l| p * g.w.term(l as i64))
    } else if i > j {
        (j..i).fold(ONE, |p, l| p * g.v.term(l as i64))
    } else {
        ONE
    };
    let prod = (lo..=hi).fold(ONE, |p, l| p * (z - g.lambda.term(l as i64)));
    let left = crate::ffun::f_finite(&x[..lo - 1]);
    let right = crate::ffun::f_finite(&x[hi..]);
    Ok(-omega / prod * left * right / total)
}

// ---------------------------------------------------------------------------
// bilateral equations  w_n u_{n+1} − ζ_n u_n + w_{n−1} u_{n−1} = 0

pub type IndexFn = Arc<dyn Fn(i64) -> C64 + Send + Sync>;

/// Coefficients ζ_n, w_n on ℤ together with the 𝔉 sequence `{γ_n²/ζ_n}`.
#[derive(Clone)]
pub struct BilateralSpec {
    zeta: IndexFn,
    w: IndexFn,
    seq: SequenceSpec,
}

impl std::fmt::Debug for BilateralSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BilateralSpec").field("seq", &self.seq).finish()
    }
}

impl BilateralSpec {
    /// Without tail bounds; both tails must then decay geometrically.
    pub fn new<Z, W>(zeta: Z, w: W) -> Self
    where
        Z: Fn(i64) -> C64 + Send + Sync + 'static,
        W: Fn(i64) -> C64 + Send + Sync + 'static,
    {
        let zeta: IndexFn = Arc::new(zeta);
        let w: IndexFn = Arc::new(w);
        let (z2, w2) = (zeta.clone(), w.clone());
        let seq =
            SequenceSpec::new(|_| ZERO).with_pair(move |k| w2(k) * w2(k) / (z2(k) * z2(k + 1))).with_range(None, None);
        BilateralSpec { zeta, w, seq }
    }

    /// Attach tail bounds: `right(n) ≥ Σ_{k≥n}|a_k|`, `left(n) ≥ Σ_{k≤n}|a_k|`.
    pub fn with_bounds<R, L>(mut self, right: R, left: L, algebraic: bool, regular_from: i64) -> Self
    where
        R: Fn(i64) -> f64 + Send + Sync + 'static,
        L: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        self.seq =
            self.seq.with_tail_bound(right).with_left_tail_bound(left).algebraic(algebraic).regular_from(regular_from);
        self
    }

    /// ζ_n = ν + n, w_n = w, with telescoping tail bounds.
    pub fn bessel(nu: f64, w: f64) -> Self {
        Self::shifted_linear(nu, w, 1.0)
    }

    /// ζ_n = c(ν + n), w_n = c·w.
    pub fn shifted_linear(nu: f64, w: f64, c: f64) -> Self {
        let base = Self::new(move |n| re(c * (nu + n as f64)), move |_| re(c * w));
        let ww = w * w;
        let pair_abs = move |k: i64| ww / ((nu + k as f64) * (nu + k as f64 + 1.0)).abs();
        // Σ_{k≥n} 1/((k+ν)(k+ν+1)) = 1/(n+ν) once n + ν ≥ 1
        let n1 = (1.0 - nu).ceil() as i64;
        let right = move |n: i64| {
            let m = n.max(n1);
            (n..m).map(pair_abs).sum::<f64>() + ww / (m as f64 + nu)
        };
        // Σ_{k≤n} 1/((k+ν)(k+ν+1)) = 1/(−n−1−ν) once −n−1−ν ≥ 1
        let n2 = (-2.0 - nu).floor() as i64;
        let left = move |n: i64| {
            let m = n.min(n2);
            (m + 1..=n).map(pair_abs).sum::<f64>() + ww / (-(m as f64) - 1.0 - nu)
        };
        base.with_bounds(right, left, true, nu.abs().ceil() as i64 + 2)
    }

    pub fn zeta(&self, n: i64) -> C64 {
        (self.zeta)(n)
    }

    pub fn w(&self, n: i64) -> C64 {
        (self.w)(n)
    }

    pub fn sequence(&self) -> &SequenceSpec {
        &self.seq
    }

    /// 𝒫_n with 𝒫_0 = 1 and 𝒫_{n+1} = (w_n/ζ_{n+1})𝒫_n.
    pub fn p(&self, n: i64) -> C64 {
        let mut p = ONE;
        if n >= 0 {
            for k in 1..=n {
                p *= self.w(k - 1) / self.zeta(k);
            }
        } else {
            for k in n + 1..=0 {
                p *= self.zeta(k) / self.w(k - 1);
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilateralSolutionPair {
    pub first_index: i64,
    pub f: Vec<C64>,
    pub g: Vec<C64>,
    /// 𝔉 over all of ℤ.
    pub wronskian: C64,
    /// w_n(f_n g_{n+1} − f_{n+1} g_n) over the window.
    pub wronskian_samples: Vec<C64>,
}

impl BilateralSolutionPair {
    pub fn max_wronskian_deviation(&self) -> f64 {
        let s = self.wronskian.norm().max(1e-300);
        self.wronskian_samples.iter().map(|w| (w - self.wronskian).norm() / s).fold(0.0, f64::max)
    }
}

/// f_n and g_n for `n ∈ [lo, hi]`.
pub fn bilateral_solutions(b: &BilateralSpec, window: (i64, i64), tol: f64) -> Result<BilateralSolutionPair> {
    let (lo, hi) = window;
    assert!(lo <= hi, "empty window");
    let count = (hi - lo + 2) as usize;
    // F(x_{n+1..}) for n = lo..=hi+1
    let (right, _) = f_tail_profile(&b.seq, lo + 1, count, tol)?;
    // F(x_{..n−1}) for n = hi+1 down to lo
    let (left, _) = f_left_profile(&b.seq, hi, count, tol)?;
    let mut f = Vec::with_capacity(count);
    let mut g = Vec::with_capacity(count);
    for j in 0..count {
        let n = lo + j as i64;
        f.push(b.p(n) * right[j]);
        g.push(left[count - 1 - j] / (b.w(n - 1) * b.p(n - 1)));
    }
    let wronskian_samples: Vec<C64> =
        (0..count - 1).map(|j| b.w(lo + j as i64) * (f[j] * g[j + 1] - f[j + 1] * g[j])).collect();
    let (wronskian, _) = f_bilateral(&b.seq, tol)?;
    f.pop();
    g.pop();
    Ok(BilateralSolutionPair { first_index: lo, f, g, wronskian, wronskian_samples })
}

/// 𝔍(m, n): for each m, the solution in n with 𝔍(m,m) = 0, 𝔍(m,m+1) = 1/w_m.
pub fn jmatrix_entry(b: &BilateralSpec, m: i64, n: i64) -> C64 {
    if m == n {
        return ZERO;
    }
    if m > n {
        return -jmatrix_entry(b, n, m);
    }
    let mut pref = ONE / b.w(m);
    for j in m + 1..n {
        pref *= b.zeta(j) / b.w(j);
    }
    let pairs: Vec<C64> = (m + 1..n - 1).map(|k| b.seq.pair(k)).collect();
    pref * f_from_pairs(&pairs)
}

/// `Σ_{j≥1}(ζ¹_j − ζ²_j) f¹_j f²_j` and `w_0(f¹_0 f²_1 − f¹_1 f²_0)` for two
/// equations sharing `w`.
pub fn green_summation_check(b1: &BilateralSpec, b2: &BilateralSpec, tol: f64) -> Result<(C64, C64)> {
    for (name, (x, y)) in [("zeta1/zeta2", (b1, b2)), ("zeta2/zeta1", (b2, b1))] {
        let v = |k: i64| (x.w(k) * x.w(k) / (x.zeta(k) * y.zeta(k + 1))).norm();
        let early = (1..=500).map(v).fold(0.0, f64::max);
        let late = (501..=1000).map(v).fold(0.0, f64::max);
        if !early.is_finite() || !late.is_finite() || late > 10.0 * early.max(1.0) {
            return Err(Error::HypothesisFailed(format!("sup |w_n^2/({name})| does not look finite")));
        }
    }
    let n_max = 4000usize;
    let profile = |b: &BilateralSpec| -> Result<Vec<C64>> {
        let seq = b.seq.clone().with_range(Some(1), None);
        let (t, _) = f_tail_profile(&seq, 1, n_max + 1, tol)?;
        let mut p = ONE;
        let mut f = Vec::with_capacity(n_max + 1);
        for (j, tj) in t.iter().enumerate() {
            if j > 0 {
                p *= b.w(j as i64 - 1) / b.zeta(j as i64);
            }
            f.push(p * tj);
        }
        Ok(f)
    };
    let (f1, f2) = (profile(b1)?, profile(b2)?);
    let mut acc = ZERO;
    let mut quiet = 0;
    for j in 1..=n_max {
        let t = (b1.zeta(j as i64) - b2.zeta(j as i64)) * f1[j] * f2[j];
        acc += t;
        if t.norm() <= 1e-18 * acc.norm() {
            quiet += 1;
            if quiet > 8 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let rhs = b1.w(0) * (f1[0] * f2[1] - f1[1] * f2[0]);
    Ok((acc, rhs))
}
