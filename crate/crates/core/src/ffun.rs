//! The functional 𝔉 on finite, one-sided and bilateral index ranges.
//!
//! 𝔉 depends on its argument only through the adjacent products
//! `a_k = x_k x_{k+1}`, so every evaluator here works on those products.
//! Finite values come from the three-term recurrence
//! `F(x_1..x_{k+1}) = F(x_1..x_k) - a_k F(x_1..x_{k-1})`; tails of infinite
//! sequences from the same recurrence run backwards from a truncation index.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{det, Dense};

pub type Term = Arc<dyn Fn(i64) -> C64 + Send + Sync>;
pub type BoundFn = Arc<dyn Fn(i64) -> f64 + Send + Sync>;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest truncation span evaluated directly when a certified index is known.
const DIRECT_CAP: i64 = 1 << 21;
/// Partial values above this magnitude switch the recurrence to compensated arithmetic.
const COMPENSATE_ABOVE: f64 = 1e6;
const MAX_LEVELS: usize = 15;
const EXTRAPOLATION_CAP: i64 = 1 << 26;
const SLOPE_RELAX: f64 = 0.9;

/// A lazily evaluated sequence `{x_k}` on a signed index range.
///
/// `tail_bound(n)` must bound `Σ_{k≥n} |x_k x_{k+1}|`; `left_tail_bound(n)`
/// bounds `Σ_{k≤n} |x_k x_{k+1}|`. Both must be nonincreasing as the range
/// they cover shrinks.
#[derive(Clone)]
pub struct SequenceSpec {
    term: Term,
    pair: Option<Term>,
    lo: Option<i64>,
    hi: Option<i64>,
    tail_bound: Option<BoundFn>,
    left_tail_bound: Option<BoundFn>,
    algebraic: bool,
    regular_from: i64,
}

impl fmt::Debug for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceSpec")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("tail_bound", &self.tail_bound.is_some())
            .field("left_tail_bound", &self.left_tail_bound.is_some())
            .field("algebraic", &self.algebraic)
            .field("regular_from", &self.regular_from)
            .finish()
    }
}

impl SequenceSpec {
    /// Sequence on `1..∞` given by `term`.
    pub fn new<F>(term: F) -> Self
    where
        F: Fn(i64) -> C64 + Send + Sync + 'static,
    {
        SequenceSpec {
            term: Arc::new(term),
            pair: None,
            lo: Some(1),
            hi: None,
            tail_bound: None,
            left_tail_bound: None,
            algebraic: false,
            regular_from: 1,
        }
    }

    /// Real-valued convenience constructor.
    pub fn real<F>(term: F) -> Self
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        Self::new(move |k| C64::new(term(k), 0.0))
    }

    /// A finite sequence `x_1..x_n`.
    pub fn finite(xs: &[C64]) -> Self {
        let v: Vec<C64> = xs.to_vec();
        let n = v.len() as i64;
        Self::new(move |k| if k >= 1 && k <= n { v[(k - 1) as usize] } else { ZERO }).with_range(Some(1), Some(n))
    }

    /// Supply the adjacent products `a_k = x_k x_{k+1}` directly.
    ///
    /// Useful when the products are better conditioned than the terms,
    /// e.g. `w_k² / ((λ_k - z)(λ_{k+1} - z))` versus `γ_k² / (λ_k - z)`.
    pub fn with_pair<F>(mut self, pair: F) -> Self
    where
        F: Fn(i64) -> C64 + Send + Sync + 'static,
    {
        self.pair = Some(Arc::new(pair));
        self
    }

    /// Index range; `None` is an infinite endpoint.
    pub fn with_range(mut self, lo: Option<i64>, hi: Option<i64>) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn with_tail_bound<F>(mut self, f: F) -> Self
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        self.tail_bound = Some(Arc::new(f));
        self
    }

    pub fn with_left_tail_bound<F>(mut self, f: F) -> Self
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        self.left_tail_bound = Some(Arc::new(f));
        self
    }

    /// Declare that `a_k` has an asymptotic expansion in powers of `1/k`
    /// (rational decay). Enables extrapolation in the truncation index when
    /// the certified bound needs an impractically long truncation.
    pub fn algebraic(mut self, yes: bool) -> Self {
        self.algebraic = yes;
        self
    }

    /// Index from which `a_k` is in its asymptotic regime (past all poles).
    pub fn regular_from(mut self, k: i64) -> Self {
        self.regular_from = k;
        self
    }

    pub fn range(&self) -> (Option<i64>, Option<i64>) {
        (self.lo, self.hi)
    }

    pub fn is_algebraic(&self) -> bool {
        self.algebraic
    }

    fn in_range(&self, k: i64) -> bool {
        self.lo.is_none_or(|l| k >= l) && self.hi.is_none_or(|h| k <= h)
    }

    pub fn term(&self, k: i64) -> C64 {
        if self.in_range(k) {
            (self.term)(k)
        } else {
            ZERO
        }
    }

    /// `x_k x_{k+1}`, zero when either index falls outside the range.
    pub fn pair(&self, k: i64) -> C64 {
        if !(self.in_range(k) && self.in_range(k + 1)) {
            return ZERO;
        }
        match &self.pair {
            Some(p) => p(k),
            None => (self.term)(k) * (self.term)(k + 1),
        }
    }

    /// The left part `{x_k}_{k≤n}` read backwards as a sequence on `1..`:
    /// `y_j = x_{n+1-j}`, so `y_j y_{j+1} = a_{n-j}`.
    pub fn reflected(&self, n: i64) -> SequenceSpec {
        let src = self.clone();
        let src_pair = self.clone();
        let mut y = SequenceSpec::new(move |j| src.term(n + 1 - j))
            .with_pair(move |j| src_pair.pair(n - j))
            .with_range(Some(1), self.lo.map(|l| n + 1 - l));
        if let Some(lb) = &self.left_tail_bound {
            let lb = lb.clone();
            y = y.with_tail_bound(move |m| lb(n - m));
        }
        y.algebraic = self.algebraic;
        y.regular_from = self.regular_from.max(1);
        y
    }
}

/// Certified (or, for extrapolated tails, estimated) truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    /// Last index of the sequence that enters the evaluation.
    pub index: i64,
    /// Bound on the absolute error of the returned value.
    pub residual: f64,
    /// `true` when `residual` is the rigorous truncation estimate;
    /// `false` when it is an extrapolation error estimate.
    pub certified: bool,
}

impl TailBound {
    pub fn exact(index: i64) -> Self {
        TailBound { index, residual: 0.0, certified: true }
    }
}

// ---------------------------------------------------------------------------
// finite evaluation

/// 𝔉(x_1, …, x_n) by the forward recurrence. Returns 1 for `n ≤ 1`.
pub fn f_finite(x: &[C64]) -> C64 {
    let pairs: Vec<C64> = x.windows(2).map(|w| w[0] * w[1]).collect();
    f_from_pairs(&pairs)
}

/// 𝔉 of a finite sequence given by its adjacent products `a_1..a_{n-1}`.
pub fn f_from_pairs(a: &[C64]) -> C64 {
    let (v, peak) = forward_plain(a);
    if peak > COMPENSATE_ABOVE {
        forward_compensated(a)
    } else {
        v
    }
}

fn forward_plain(a: &[C64]) -> (C64, f64) {
    let (mut prev, mut cur) = (ONE, ONE);
    let mut peak = 1.0f64;
    for &ak in a {
        let next = cur - ak * prev;
        prev = cur;
        cur = next;
        peak = peak.max(cur.norm());
    }
    (cur, peak)
}

fn forward_compensated(a: &[C64]) -> C64 {
    let mut prev = Dd::one();
    let mut cur = Dd::one();
    for &ak in a {
        let next = Dd::step(cur, ak, prev);
        prev = cur;
        cur = next;
    }
    cur.value()
}

/// Complex value carried with a low-order correction.
#[derive(Clone, Copy)]
struct Dd {
    hi: C64,
    lo: C64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn one() -> Self {
        Dd { hi: ONE, lo: ZERO }
    }

    fn value(self) -> C64 {
        self.hi + self.lo
    }

    /// `t1 - a * t2` with the rounding errors of the product and the
    /// difference carried into `lo`.
    fn step(t1: Dd, a: C64, t2: Dd) -> Dd {
        let (p1, e1) = two_prod(a.re, t2.hi.re);
        let (p2, e2) = two_prod(a.im, t2.hi.im);
        let (p3, e3) = two_prod(a.re, t2.hi.im);
        let (p4, e4) = two_prod(a.im, t2.hi.re);
        let (pre, e5) = two_sum(p1, -p2);
        let (pim, e6) = two_sum(p3, p4);
        let perr = C64::new(e1 - e2 + e5, e3 + e4 + e6);
        let (sre, f1) = two_sum(t1.hi.re, -pre);
        let (sim, f2) = two_sum(t1.hi.im, -pim);
        let lo = t1.lo - a * t2.lo - perr + C64::new(f1, f2);
        let (hre, lre) = two_sum(sre, lo.re);
        let (him, lim) = two_sum(sim, lo.im);
        Dd { hi: C64::new(hre, him), lo: C64::new(lre, lim) }
    }
}

/// Values `F(x_k..x_end)` for `k = start..start+count-1` (backward recurrence).
/// Pairs are generated on the fly, so memory is `O(count)`.
fn backward_profile(x: &SequenceSpec, start: i64, count: usize, end: i64) -> Vec<C64> {
    let (vals, peak) = backward_plain(x, start, count, end);
    if peak > COMPENSATE_ABOVE {
        backward_compensated(x, start, count, end)
    } else {
        vals
    }
}

fn backward_plain(x: &SequenceSpec, start: i64, count: usize, end: i64) -> (Vec<C64>, f64) {
    let mut out = vec![ONE; count];
    let (mut t1, mut t2) = (ONE, ONE); // t_{k+1}, t_{k+2}
    let mut peak = 1.0f64;
    let mut k = end - 1;
    while k >= start {
        let t = t1 - x.pair(k) * t2;
        t2 = t1;
        t1 = t;
        peak = peak.max(t.norm());
        let idx = (k - start) as usize;
        if idx < count {
            out[idx] = t;
        }
        k -= 1;
    }
    (out, peak)
}

fn backward_compensated(x: &SequenceSpec, start: i64, count: usize, end: i64) -> Vec<C64> {
    let mut out = vec![ONE; count];
    let (mut t1, mut t2) = (Dd::one(), Dd::one());
    let mut k = end - 1;
    while k >= start {
        let t = Dd::step(t1, x.pair(k), t2);
        t2 = t1;
        t1 = t;
        let idx = (k - start) as usize;
        if idx < count {
            out[idx] = t.value();
        }
        k -= 1;
    }
    out
}

// ---------------------------------------------------------------------------
// tail certification

/// Tail-sum bound for a sequence without a supplied one: fit
/// `|a_j| ≤ C ρ^j` on `[N, 4N]`, relax ρ slightly, verify with a 2× margin
/// on `[4N, 16N]`.
fn geometric_tail_bound(x: &SequenceSpec, start: i64) -> Result<BoundFn> {
    let n0 = start.max(x.regular_from).max(16);
    let probe = |j: i64| x.pair(j).norm();
    let fit: Vec<(f64, f64)> = (n0..=4 * n0)
        .filter_map(|j| {
            let v = probe(j);
            (v > 0.0).then(|| (j as f64, v.ln()))
        })
        .collect();
    let check: Vec<(i64, f64)> = (4 * n0..=16 * n0).map(|j| (j, probe(j))).collect();

    let head: Vec<f64> = (start..n0).map(probe).collect();
    let head_sum = move |n: i64| -> f64 {
        if n >= n0 {
            0.0
        } else {
            head[(n.max(start) - start) as usize..].iter().sum()
        }
    };

    if fit.is_empty() {
        if check.iter().all(|&(_, v)| v == 0.0) {
            return Ok(Arc::new(head_sum));
        }
        return Err(Error::NoTailBound("irregular zero pattern in the probe window".into()));
    }
    if fit.len() < 3 {
        return Err(Error::NoTailBound("too few nonzero probes".into()));
    }
    let m = fit.len() as f64;
    let sx: f64 = fit.iter().map(|p| p.0).sum();
    let sy: f64 = fit.iter().map(|p| p.1).sum();
    let sxx: f64 = fit.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = fit.iter().map(|p| p.0 * p.1).sum();
    let fitted = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    // relax the rate so slowly varying prefactors (k^{-p}) stay under the envelope
    let slope = SLOPE_RELAX * fitted;
    if !(slope < 0.0) {
        return Err(Error::NoTailBound(format!("products do not decay geometrically (log-slope {slope:.3e})")));
    }
    let log_c = fit.iter().map(|&(j, l)| l - slope * j).fold(f64::NEG_INFINITY, f64::max);
    let envelope = move |j: f64| (log_c + slope * j).exp();
    for &(j, v) in &check {
        if v > 2.0 * envelope(j as f64) {
            return Err(Error::NoTailBound(format!("geometric fit violated at index {j}")));
        }
    }
    let rho = slope.exp();
    Ok(Arc::new(move |n: i64| {
        let n_eff = n.max(n0);
        head_sum(n) + 2.0 * envelope(n_eff as f64) / (1.0 - rho)
    }))
}

fn tail_bound_fn(x: &SequenceSpec, start: i64) -> Result<BoundFn> {
    match &x.tail_bound {
        Some(b) => Ok(b.clone()),
        None => geometric_tail_bound(x, start),
    }
}

/// Minimal `N ≥ start` with `factor · tb(N) ≤ tol`, if one exists within the cap.
fn minimal_index(tb: &BoundFn, factor: f64, start: i64, tol: f64) -> Option<i64> {
    let ok = |n: i64| factor * tb(n) <= tol;
    if ok(start) {
        return Some(start);
    }
    let mut d: i64 = 1;
    while !ok(start + d) {
        if d > DIRECT_CAP {
            return None;
        }
        d *= 2;
    }
    let (mut bad, mut good) = (start + d / 2, start + d);
    if d == 1 {
        bad = start;
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Values `F({x_k}_{k≥s})` for `s = start..start+count-1`, with one error bound
/// covering all of them.
pub fn f_tail_profile(x: &SequenceSpec, start: i64, count: usize, tol: f64) -> Result<(Vec<C64>, TailBound)> {
    let count = count.max(1);
    if let Some(h) = x.hi {
        return Ok((backward_profile(x, start, count, h), TailBound::exact(h)));
    }
    let tb = tail_bound_fn(x, start)?;
    let s = tb(start);
    if !s.is_finite() {
        return Err(Error::NoTailBound(format!("tail sum bound is not finite at index {start}")));
    }
    let factor = 2.0 * (2.0 * s).exp();
    if let Some(n) = minimal_index(&tb, factor, start, tol) {
        if n - start <= DIRECT_CAP {
            let vals = backward_profile(x, start, count, n);
            return Ok((vals, TailBound { index: n, residual: factor * tb(n), certified: true }));
        }
    }
    if x.algebraic {
        return extrapolated_profile(x, start, count, tol);
    }
    let n = start + DIRECT_CAP;
    Err(Error::TolUnreachable { tol, best: factor * tb(n), index: n as usize })
}

/// Polynomial extrapolation in `1/N` of truncated tails over `N = N0·2^j`.
fn extrapolated_profile(x: &SequenceSpec, start: i64, count: usize, tol: f64) -> Result<(Vec<C64>, TailBound)> {
    let n0 = 64i64.max(8 * x.regular_from.max(start).max(1)).max(start + count as i64 + 16);
    let mut h: Vec<f64> = Vec::new();
    // Neville tableau, one row per level, each entry a profile.
    let mut rows: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut best: Option<(Vec<C64>, f64, i64)> = None;
    let mut worse_in_a_row = 0;
    for j in 0..MAX_LEVELS {
        let n = n0 << j;
        if n > EXTRAPOLATION_CAP && j >= 2 {
            break;
        }
        h.push(1.0 / n as f64);
        // compensated: Neville amplifies rounding noise in the inputs
        let mut row = vec![backward_compensated(x, start, count, n)];
        for m in 1..=j {
            let hj = h[j];
            let hm = h[j - m];
            let prev_same = &row[m - 1];
            let prev_row = &rows[j - 1][m - 1];
            let ext: Vec<C64> = prev_same.iter().zip(prev_row).map(|(&p, &q)| p + (p - q) * (hj / (hm - hj))).collect();
            row.push(ext);
        }
        if j >= 1 {
            let cur = &row[j];
            let prev = &rows[j - 1][j - 1];
            let err = cur.iter().zip(prev).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).fold(0.0, f64::max);
            let improved = best.as_ref().is_none_or(|b| err < b.1);
            if improved {
                best = Some((cur.clone(), err, n));
                worse_in_a_row = 0;
            } else {
                worse_in_a_row += 1;
            }
            if j >= 3 && err <= tol {
                break;
            }
            if worse_in_a_row >= 2 {
                break;
            }
        }
        rows.push(row);
    }
    let (vals, err, n) = best.expect("at least two levels");
    if err <= tol {
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        Ok((vals, TailBound { index: n, residual: err * scale, certified: false }))
    } else {
        Err(Error::TolUnreachable { tol, best: err, index: n as usize })
    }
}

/// 𝔉({x_k}_{k≥start}) within `tol`.
pub fn f_tail(x: &SequenceSpec, start: i64, tol: f64) -> Result<(C64, TailBound)> {
    let (v, b) = f_tail_profile(x, start, 1, tol)?;
    Ok((v[0], b))
}

/// Values `F({x_k}_{k≤n-j})` for `j = 0..count-1`.
pub fn f_left_profile(x: &SequenceSpec, n: i64, count: usize, tol: f64) -> Result<(Vec<C64>, TailBound)> {
    let y = x.reflected(n);
    let (v, mut b) = f_tail_profile(&y, 1, count, tol)?;
    b.index = n + 1 - b.index;
    Ok((v, b))
}

/// 𝔉 over all of ℤ, split at the index in −4..=4 with the smallest pair,
/// since the split error is amplified by |a_n|.
pub fn f_bilateral(x: &SequenceSpec, tol: f64) -> Result<(C64, TailBound)> {
    let n = (-4..=4i64)
        .min_by(|&a, &b| x.pair(a).norm().partial_cmp(&x.pair(b).norm()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    f_bilateral_split(x, n, tol)
}

/// 𝔉 over all of ℤ using the splitting rule at index `n`.
pub fn f_bilateral_split(x: &SequenceSpec, n: i64, tol: f64) -> Result<(C64, TailBound)> {
    let a_n = x.pair(n);
    // below a few ulps the extrapolated tails stop improving
    let floor = 8.0 * f64::EPSILON;
    let mut part_tol = (tol / 8.0).max(floor);
    let mut best = f64::NAN;
    for _ in 0..3 {
        let (r, rb) = f_tail_profile(x, n + 1, 2, part_tol)?;
        let (l, lb) = f_left_profile(x, n, 2, part_tol)?;
        let value = l[0] * r[0] - a_n * l[1] * r[1];
        let (er, el) = (rb.residual, lb.residual);
        let residual = er * (l[0].norm() + a_n.norm() * l[1].norm())
            + el * (r[0].norm() + a_n.norm() * r[1].norm())
            + er * el * (1.0 + a_n.norm());
        let bound = TailBound { index: rb.index.max(-lb.index), residual, certified: rb.certified && lb.certified };
        if residual <= tol {
            return Ok((value, bound));
        }
        best = residual;
        if part_tol == floor {
            break;
        }
        part_tol = (part_tol * (tol / residual).min(0.5)).max(floor);
    }
    Err(Error::TolUnreachable { tol, best, index: 0 })
}

// ---------------------------------------------------------------------------
// identities and oracles

/// Both sides of the splitting rule at `n` (1-based, `1 ≤ n < len`).
pub fn split_identity_check(x: &[C64], n: usize) -> (C64, C64) {
    assert!(n >= 1 && n < x.len(), "split index out of range");
    let left = f_finite(x);
    let right = f_finite(&x[..n]) * f_finite(&x[n..]) - x[n - 1] * x[n] * f_finite(&x[..n - 1]) * f_finite(&x[n + 1..]);
    (left, right)
}

/// Splitting rule at `n` for an infinite sequence: `F(x)` on the left,
/// `F(x_1..x_n)F(T^n x) - a_n F(x_1..x_{n-1})F(T^{n+1}x)` on the right.
pub fn split_identity_tail(x: &SequenceSpec, n: i64, tol: f64) -> Result<(C64, C64)> {
    let (whole, _) = f_tail(x, 1, tol)?;
    let (tails, _) = f_tail_profile(x, n + 1, 2, tol)?;
    let head: Vec<C64> = (1..n).map(|k| x.pair(k)).collect();
    let f_n = f_from_pairs(&head);
    let f_nm1 = f_from_pairs(&head[..head.len().saturating_sub(1)]);
    Ok((whole, f_n * tails[0] - x.pair(n) * f_nm1 * tails[1]))
}

/// Determinant of the unit-diagonal matrix `X_n` (superdiagonal `x_1..x_{n-1}`,
/// subdiagonal `x_2..x_n`) by dense LU.
pub fn f_det_oracle(x: &[C64]) -> C64 {
    let n = x.len();
    if n == 0 {
        return ONE;
    }
    let mut m = Dense::zeros(n);
    for i in 0..n {
        m.set(i, i, ONE);
        if i + 1 < n {
            m.set(i, i + 1, x[i]);
            m.set(i + 1, i, x[i + 1]);
        }
    }
    det(&m)
}

/// `Σ |x_k x_{k+1}|` of a finite sequence.
pub fn pair_abs_sum(x: &[C64]) -> f64 {
    x.windows(2).map(|w| (w[0] * w[1]).norm()).sum()
}

/// `exp(Σ |x_k x_{k+1}|)`, the a-priori bound on `|𝔉(x)|`.
pub fn exp_bound(x: &[C64]) -> f64 {
    pair_abs_sum(x).exp()
}
