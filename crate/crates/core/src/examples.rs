//! The example catalog, the c-deformed construction, and the λ_s(w) study
//! for the linear-diagonal family with α = 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffun::SequenceSpec;
use crate::jacobi::{DerLambda, Family, JacobiDescriptor};
use crate::specfun::{self, KahanSum};
use crate::truncation::{charpoly, Tridiag};
use crate::C64;

/// Zero tolerance used by the curve routines.
pub const CURVE_TOL: f64 = 1e-13;
/// Default right end of the curve table.
pub const DEFAULT_W_MAX: f64 = 3.0;
/// Default spacing of the curve table.
pub const DEFAULT_STEP: f64 = 0.02;

const FD_STEP: f64 = 1e-5;
const SUM_EPS: f64 = 1e-17;
const SUM_LIMIT: usize = 100_000;

// ---------------------------------------------------------------------------
// catalog

/// Parameters shared by the five catalog examples; each example reads the
/// ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub alpha: f64,
    pub w: f64,
    pub beta: f64,
    pub q: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams { alpha: 1.0, w: 0.5, beta: 1.0, q: 0.5 }
    }
}

/// Example `id` in 1..=5:
/// 1 linear diagonal, 2 harmonic, 3 geometric, 4 zero diagonal with
/// 1/√((n+α)(n+α+1)) weights, 5 zero diagonal with q^{n−1} weights.
pub fn build_example(id: u8, p: &ExampleParams) -> Result<JacobiDescriptor> {
    let family = match id {
        1 => Family::LinearDiag { alpha: p.alpha, w: p.w },
        2 => Family::Harmonic { beta: p.beta },
        3 => Family::Qgeom { q: p.q, beta: p.beta },
        4 => Family::ZeroDiagHarm { alpha: p.alpha },
        5 => Family::ZeroDiagQ { q: p.q },
        _ => return Err(Error::BadParams(format!("example id must be 1..5, got {id}"))),
    };
    JacobiDescriptor::from_family(family)
}

/// F_J(z) of example `id` from its closed form.
pub fn closed_form_charfn(id: u8, p: &ExampleParams, z: C64) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    let nonzero = || {
        if z.norm() == 0.0 {
            Err(Error::DomainError("z = 0 is an accumulation point".into()))
        } else {
            Ok(())
        }
    };
    let on_diagonal = |e: Error| match e {
        Error::PochhammerZero(_) | Error::DomainError(_) => Error::DomainError(format!("z = {z} is a diagonal entry")),
        other => other,
    };
    match id {
        1 => {
            if p.alpha == 0.0 {
                return Err(Error::BadParams("alpha must be nonzero".into()));
            }
            let r = p.w / p.alpha;
            specfun::hyp0f1(one - z / p.alpha, C64::new(-r * r, 0.0)).map_err(on_diagonal)
        }
        2 => {
            nonzero()?;
            specfun::hyp0f1(one - one / z, -(p.beta * p.beta) / (z * z)).map_err(on_diagonal)
        }
        3 => {
            nonzero()?;
            specfun::phi01(one / z, p.q, -(p.beta * p.beta) / (z * z)).map_err(on_diagonal)
        }
        4 => {
            nonzero()?;
            specfun::hyp0f1(C64::new(p.alpha + 1.0, 0.0), -one / (z * z))
        }
        5 => {
            nonzero()?;
            specfun::phi01(C64::new(0.0, 0.0), p.q * p.q, -one / (z * z))
        }
        _ => Err(Error::BadParams(format!("example id must be 1..5, got {id}"))),
    }
}

// ---------------------------------------------------------------------------
// c-deformed numbers

/// `[n]_c = 1 + c + … + c^{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CDeformed {
    c: f64,
}

impl CDeformed {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::BadParams(format!("c must be positive, got {c}")));
        }
        Ok(CDeformed { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn number(&self, n: i64) -> f64 {
        if self.c == 1.0 {
            n as f64
        } else {
            (n as f64 * (self.c - 1.0).ln_1p()).exp_m1() / (self.c - 1.0)
        }
    }

    /// `([n+m−1] − [n−1])/[m] − ([n] − [n−1])`.
    pub fn const_dist_residual(&self, n: i64, m: i64) -> f64 {
        (self.number(n + m - 1) - self.number(n - 1)) / self.number(m) - (self.number(n) - self.number(n - 1))
    }

    /// `ln(α + [n]_c)`, stable for large n.
    fn ln_shifted(&self, alpha: f64, n: i64) -> f64 {
        if self.c > 1.0 && n > 30 {
            let nf = n as f64;
            let tail = (-nf * self.c.ln()).exp();
            nf * self.c.ln() + ((1.0 - tail) / (self.c - 1.0) + alpha * tail).ln()
        } else {
            (alpha + self.number(n)).ln()
        }
    }

    /// λ_n = 1/(α + [n−1]_c).
    pub fn lambda(&self, alpha: f64, n: i64) -> f64 {
        (-self.ln_shifted(alpha, n - 1)).exp()
    }

    /// w_n² = β² (λ_n − λ_{n+1}) = β² c^{n−1} / ((α+[n−1]_c)(α+[n]_c)).
    pub fn weight_sq(&self, alpha: f64, beta: f64, n: i64) -> f64 {
        beta * beta * ((n - 1) as f64 * self.c.ln() - self.ln_shifted(alpha, n - 1) - self.ln_shifted(alpha, n)).exp()
    }

    /// lim λ_n.
    pub fn lambda_limit(&self, alpha: f64) -> f64 {
        if self.c >= 1.0 {
            0.0
        } else {
            1.0 / (alpha + 1.0 / (1.0 - self.c))
        }
    }

    /// The Jacobi matrix with λ_n = 1/(α+[n−1]_c), w_n = β√(λ_n − λ_{n+1}).
    ///
    /// The pair tail telescopes: for k ≥ n every λ_k lies in `[L, λ_n]`, so
    /// `Σ_{k≥n} |pair_k| ≤ β²(λ_n − L)/dist(z, [L, λ_n])²`.
    pub fn descriptor(&self, alpha: f64, beta: f64) -> Result<JacobiDescriptor> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::BadParams("need alpha > 0 and beta > 0".into()));
        }
        let me = *self;
        let limit = self.lambda_limit(alpha);
        let lambda = SequenceSpec::real(move |n| me.lambda(alpha, n));
        let weight = SequenceSpec::real(move |n| me.weight_sq(alpha, beta, n).sqrt());
        let desc = JacobiDescriptor::custom(lambda, weight, DerLambda::Points(vec![limit]), true)?;
        let bound = move |z: C64, n: i64| {
            let top = me.lambda(alpha, n.max(1));
            let d = if z.re < limit {
                (z - limit).norm()
            } else if z.re > top {
                (z - top).norm()
            } else {
                z.im.abs()
            };
            if d == 0.0 {
                f64::INFINITY
            } else {
                beta * beta * (top - limit) / (d * d)
            }
        };
        Ok(desc.with_tail_bound(bound, self.c == 1.0, 1))
    }

    /// The multi-sum over `r ≤ k_1, k_{i+1} ≥ k_i + 2` of
    /// `Π w_{k_i}² / ((λ_{k_i} − z)(λ_{k_i+1} − z))`, brute force with all
    /// indices at most `k_max`.
    pub fn multisum_brute(&self, alpha: f64, beta: f64, r: usize, s: usize, z: C64, k_max: usize) -> C64 {
        let a: Vec<C64> = (0..=k_max + 2)
            .map(|k| {
                if k == 0 {
                    return C64::new(0.0, 0.0);
                }
                let k = k as i64;
                self.weight_sq(alpha, beta, k) / ((self.lambda(alpha, k) - z) * (self.lambda(alpha, k + 1) - z))
            })
            .collect();
        // level[k] = sum over chains whose first index is at least k
        let mut level = vec![C64::new(1.0, 0.0); k_max + 3];
        for _ in 0..s {
            let mut next = vec![C64::new(0.0, 0.0); k_max + 3];
            for k in (1..=k_max).rev() {
                next[k] = next[k + 1] + a[k] * level[k + 2];
            }
            next[k_max + 1] = C64::new(0.0, 0.0);
            next[k_max + 2] = C64::new(0.0, 0.0);
            level = next;
        }
        level[r]
    }

    /// `(−1)^s β^{2s} z^{−s} Π_{i=1}^{s} ([i]_c (1 − z/λ_{r+i−1}))^{−1}`.
    pub fn multisum_closed(&self, alpha: f64, beta: f64, r: usize, s: usize, z: C64) -> C64 {
        let mut v = C64::new(1.0, 0.0);
        for i in 1..=s {
            let lam = self.lambda(alpha, (r + i - 1) as i64);
            v *= -(beta * beta) / (z * self.number(i as i64) * (1.0 - z / lam));
        }
        v
    }
}

// ---------------------------------------------------------------------------
// λ_s(w) for λ_n = n, w_n = w

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    FZero,
    TruncationOracle,
}

/// Samples of the s-th eigenvalue as a function of w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricCurve {
    pub s: usize,
    pub samples: Vec<(f64, f64)>,
    pub source: CurveSource,
}

impl ParametricCurve {
    /// Non-increasing in w. Strict decrease is not resolvable in double
    /// precision where s − λ_s(w) is below one ulp of s.
    pub fn is_nonincreasing(&self) -> bool {
        self.samples.windows(2).all(|p| p[1].1 <= p[0].1)
    }
}

fn linear_desc(w: f64) -> Result<JacobiDescriptor> {
    JacobiDescriptor::from_family(Family::LinearDiag { alpha: 1.0, w })
}

/// δ·F(s − δ) for λ_n = n, w_n = w, with the vanishing factor of the
/// Pochhammer symbol cancelled. Analytic for |δ| < 1; its zero is s − λ_s(w).
pub fn local_charfn(s: usize, w: f64, delta: f64) -> f64 {
    let x = -w * w;
    let mut sum = KahanSum::default();
    let mut term = 1.0;
    let mut scale = 0.0f64;
    let sf = s as f64;
    for m in 0..(s + 500) {
        if m > 0 {
            let j = m as f64;
            let f = if m == s { 1.0 } else { j - sf + delta };
            term *= x / (j * f);
        }
        let contrib = if m < s { delta * term } else { term };
        sum.add(contrib);
        scale = scale.max(contrib.abs());
        if m > s && term.abs() <= 1e-18 * scale && (m * m) as f64 > x.abs() {
            break;
        }
    }
    sum.value()
}

/// Bracketed Illinois iteration to an absolute width `xtol`, or until the
/// bracket no longer shrinks.
fn illinois<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    let mut side = 0;
    for it in 0..400 {
        if hi - lo <= xtol {
            break;
        }
        let mut x = if it % 8 == 7 { 0.5 * (lo + hi) } else { (lo * fhi - hi * flo) / (fhi - flo) };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
            if !(x > lo && x < hi) {
                break;
            }
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (lo + hi)
}

/// s − λ_s(w) to full relative precision, polished from an estimate.
pub fn integer_gap(s: usize, w: f64, estimate: f64) -> Result<f64> {
    if w == 0.0 {
        return Ok(0.0);
    }
    let g = |d: f64| local_charfn(s, w, d);
    let mut e = 1e-10 * (1.0 + s as f64);
    for _ in 0..8 {
        let (lo, hi) = ((estimate - e).max(-0.99), (estimate + e).min(0.99));
        if g(lo) * g(hi) <= 0.0 {
            return Ok(illinois(g, lo, hi, 0.0));
        }
        e *= 10.0;
    }
    Err(Error::LostTrack { s, w })
}

/// Σ_k (−w²)^k / (k! Γ(1 − z + k)): the characteristic function of λ_n = n,
/// w_n = w with its poles cleared by 1/Γ(1 − z). Entire in z.
pub fn linear_charfn_entire(z: f64, w: f64) -> f64 {
    let x = -w * w;
    let mut sum = KahanSum::default();
    let mut pow = 1.0;
    let mut scale = 0.0f64;
    for k in 0..400 {
        if k > 0 {
            pow *= x / k as f64;
        }
        let t = pow * specfun::rgamma(1.0 - z + k as f64);
        sum.add(t);
        scale = scale.max(t.abs());
        if (k as f64) > 1.0 - z + x.abs() && t.abs() <= 1e-18 * scale {
            break;
        }
    }
    sum.value()
}

/// One continuation step: the unique zero in a window of width 0.9 around
/// the prediction. Gaps are at least 1, so at most one zero fits.
fn continuation_step(s: usize, w: f64, pred: f64, z_prev: f64, tol: f64) -> Result<Option<f64>> {
    let g = |z: f64| linear_charfn_entire(z, w);
    let (lo, hi) = (pred - 0.45, pred + 0.45);
    if g(lo) * g(hi) > 0.0 {
        return Ok(None);
    }
    let mut z = illinois(g, lo, hi, tol * (1.0 + pred.abs()));
    if (z - z_prev).abs() > 0.5 || z > z_prev + 10.0 * tol * (1.0 + z.abs()) {
        return Ok(None);
    }
    let sf = s as f64;
    if (sf - z).abs() < 0.5 {
        z = sf - integer_gap(s, w, sf - z)?;
    }
    Ok(Some(z.min(z_prev)))
}

/// λ_s(w) on a nondecreasing grid of w ≥ 0, by continuation from λ_s(0) = s
/// with step halving when the tracked zero cannot be bracketed.
pub fn lambda_curve(s: usize, w_grid: &[f64], tol: f64) -> Result<ParametricCurve> {
    if s == 0 {
        return Err(Error::BadParams("eigenvalue index starts at 1".into()));
    }
    if w_grid.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || w_grid.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::BadParams("w grid must be finite, nonnegative and nondecreasing".into()));
    }
    let (mut wc, mut zc, mut slope) = (0.0, s as f64, 0.0);
    let mut samples = Vec::with_capacity(w_grid.len());
    for &w in w_grid {
        let mut target = w;
        while wc < w {
            let h = target - wc;
            match continuation_step(s, target, zc + slope * h, zc, tol)? {
                Some(z) => {
                    slope = (z - zc) / h;
                    wc = target;
                    zc = z;
                    target = w;
                }
                None => {
                    if h < 1e-9 {
                        return Err(Error::LostTrack { s, w: target });
                    }
                    target = wc + 0.5 * h;
                }
            }
        }
        samples.push((w, zc));
    }
    Ok(ParametricCurve { s, samples, source: CurveSource::FZero })
}

/// λ_s(w) at a single point.
pub fn lambda_at(s: usize, w: f64, tol: f64) -> Result<f64> {
    Ok(lambda_curve(s, &[w], tol)?.samples[0].1)
}

/// The same curve from Sturm bisection on the truncation J_n.
pub fn lambda_curve_oracle(s: usize, w_grid: &[f64], n: usize) -> Result<ParametricCurve> {
    if s == 0 || s > n {
        return Err(Error::BadParams(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    let mut samples = Vec::with_capacity(w_grid.len());
    for &w in w_grid {
        if w == 0.0 {
            samples.push((w, s as f64));
            continue;
        }
        let t = Tridiag::from_desc(&linear_desc(w)?, n)?;
        let ev = t.eigenvalues_between(1.0 - 2.0 * w.abs() - 1.0, s as f64 + 0.5, 1e-14);
        let z = *ev.get(s - 1).ok_or(Error::LostTrack { s, w })?;
        samples.push((w, z));
    }
    Ok(ParametricCurve { s, samples, source: CurveSource::TruncationOracle })
}

/// dλ_s/dw from the integral representation
/// `−(2w ∫₀^∞ K₀(4w sinh t) e^{2λ_s t} dt)^{−1}`.
pub fn coulomb_derivative(s: usize, w: f64, tol: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::BadParams(format!("need w > 0, got {w}")));
    }
    let lam = lambda_at(s, w, tol)?;
    coulomb_derivative_at(w, lam)
}

/// The integral formula evaluated at a given eigenvalue `lam`.
pub fn coulomb_derivative_at(w: f64, lam: f64) -> Result<f64> {
    let f = |t: f64| match specfun::bessel_k0(4.0 * w * t.sinh()) {
        Ok(k) => k * (2.0 * lam * t).exp(),
        Err(_) => f64::NAN,
    };
    // K₀(x) ≤ √(π/2x) e^{−x}
    let log_major = |t: f64| {
        let x = 4.0 * w * t.sinh();
        0.5 * (PI / (2.0 * x)).ln() - x + 2.0 * lam * t
    };
    let head = specfun::integrate(f, 0.0, 1.0, 1e-13, 0.0)?;
    let mut t_end = 1.0;
    while !(log_major(t_end) < (1e-16 * head).ln() && 4.0 * w * t_end.cosh() > 2.0 * lam + 1.0) {
        t_end += 0.5;
        if t_end > 500.0 {
            return Err(Error::QuadratureFailure("no cutoff found for the K0 integral".into()));
        }
    }
    let body = specfun::integrate(f, 1.0, t_end, 1e-13, 1e-18 * head)?;
    Ok(-1.0 / (2.0 * w * (head + body)))
}

/// λ_1..λ_{s_max} on the grid `0, step, 2·step, …, w_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub w: Vec<f64>,
    /// `lambdas[s-1][i]` is λ_s(w[i]).
    pub lambdas: Vec<Vec<f64>>,
    pub w_max: f64,
    pub step: f64,
}

pub fn uniform_grid(w_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(w_max >= 0.0 && w_max.is_finite() && step > 0.0) {
        return Err(Error::BadParams("need w_max >= 0 and step > 0".into()));
    }
    let n = (w_max / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if w_max - g[n] > 1e-9 * step {
        g.push(w_max);
    } else {
        g[n] = w_max;
    }
    Ok(g)
}

/// Curves for s = 1..s_max; columns are computed on up to `threads` threads.
pub fn curve_table(s_max: usize, w_max: f64, step: f64, tol: f64, threads: usize) -> Result<CurveTable> {
    if s_max == 0 {
        return Err(Error::BadParams("s_max must be at least 1".into()));
    }
    let grid = uniform_grid(w_max, step)?;
    let threads = threads.clamp(1, s_max);
    let mut cols: Vec<Option<Result<Vec<f64>>>> = (0..s_max).map(|_| None).collect();
    std::thread::scope(|scope| {
        let grid = &grid;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (1..=s_max)
                        .filter(|s| (s - 1) % threads == t)
                        .map(|s| (s, lambda_curve(s, grid, tol).map(|c| c.samples.into_iter().map(|p| p.1).collect())))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (s, col) in h.join().expect("curve worker panicked") {
                cols[s - 1] = Some(col);
            }
        }
    });
    let lambdas = cols.into_iter().map(|c| c.expect("every column computed")).collect::<Result<Vec<_>>>()?;
    Ok(CurveTable { w: grid, lambdas, w_max, step })
}

impl CurveTable {
    /// Header `w,lambda_1,…` and one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w");
        for s in 1..=self.lambdas.len() {
            out.push_str(&format!(",lambda_{s}"));
        }
        out.push('\n');
        for (i, w) in self.w.iter().enumerate() {
            out.push_str(&format!("{w:.16e}"));
            for col in &self.lambdas {
                out.push_str(&format!(",{:.16e}", col[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Columns non-increasing in w and neighbouring gaps at least 1.
    pub fn check_monotone_gaps(&self) -> std::result::Result<(), String> {
        for (s, col) in self.lambdas.iter().enumerate() {
            if let Some(i) = (1..col.len()).find(|&i| col[i] > col[i - 1]) {
                return Err(format!("lambda_{} increases at w = {}", s + 1, self.w[i]));
            }
        }
        for s in 1..self.lambdas.len() {
            for i in 0..self.w.len() {
                let gap = self.lambdas[s][i] - self.lambdas[s - 1][i];
                if gap < 1.0 - 1e-12 {
                    return Err(format!("gap lambda_{} - lambda_{} = {gap} at w = {}", s + 1, s, self.w[i]));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// closeness of λ_s(w) to s for small w

/// β_s = ((s−1)! s!/π)^{1/(2s)}.
pub fn beta_s(s: usize) -> f64 {
    let sf = s as f64;
    ((specfun::lgamma(sf).unwrap_or(0.0) + specfun::lgamma(sf + 1.0).unwrap_or(0.0) - PI.ln()) / (2.0 * sf)).exp()
}

/// (1/π) arcsin(π w^{2s}/((s−1)! s!)), for 0 ≤ w ≤ β_s.
pub fn prop45_bound(s: usize, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let sf = s as f64;
    let x =
        (2.0 * sf * w.ln() + PI.ln() - specfun::lgamma(sf).unwrap_or(0.0) - specfun::lgamma(sf + 1.0).unwrap_or(0.0))
            .exp();
    x.min(1.0).asin() / PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop45Row {
    pub w: f64,
    pub gap: f64,
    pub bound: f64,
}

/// Checks 0 ≤ s − λ_s(w) ≤ bound on a grid inside [0, β_s].
pub fn prop45_bound_check(s: usize, w_grid: &[f64], tol: f64) -> Result<Vec<Prop45Row>> {
    let b = beta_s(s);
    if w_grid.iter().any(|&w| w > b * (1.0 + 1e-12)) {
        return Err(Error::BadParams(format!("grid must lie in [0, beta_{s}] = [0, {b}]")));
    }
    let curve = lambda_curve(s, w_grid, tol)?;
    let mut rows = Vec::with_capacity(w_grid.len());
    for &(w, z) in &curve.samples {
        let gap = integer_gap(s, w, s as f64 - z)?;
        let bound = prop45_bound(s, w);
        if !(gap >= 0.0 && gap <= bound) {
            return Err(Error::BoundViolated { s, w, detail: format!("s - lambda_s = {gap:e}, bound = {bound:e}") });
        }
        rows.push(Prop45Row { w, gap, bound });
    }
    Ok(rows)
}

/// First positive zero of Y_ν, ν ≥ 0.
pub fn bessel_y_first_zero(nu: f64) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::DomainError(format!("need nu >= 0, got {nu}")));
    }
    let y = |x: f64| specfun::bessel_y(nu, x).unwrap_or(f64::NAN);
    let step = 0.05;
    let mut x = step;
    let mut fx = y(x);
    while x < 4.0 * nu + 20.0 {
        let xn = x + step;
        let fn_ = y(xn);
        if fx < 0.0 && fn_ >= 0.0 {
            return Ok(illinois(y, x, xn, 1e-14 * xn));
        }
        x = xn;
        fx = fn_;
    }
    Err(Error::SeriesLimit((x / step) as usize))
}

/// `(β_s, y_1(s − 1/2)/2)` for s = 1..=s_max.
pub fn beta_vs_y1(s_max: usize) -> Result<Vec<(usize, f64, f64)>> {
    (1..=s_max).map(|s| Ok((s, beta_s(s), 0.5 * bessel_y_first_zero(s as f64 - 0.5)?))).collect()
}

/// At z = λ_s(w): `χ_{2s−1}(z) − (w J_{2s−z}(2w)/J_{2s−1−z}(2w)) χ_{2s−2}(z)`
/// with χ_n(z) = det(J_n − z). Returns (|residual|, scale), the scale being the
/// sum of the magnitudes of the two terms.
pub fn curve_identity_residual(s: usize, w: f64, tol: f64) -> Result<(f64, f64)> {
    if !(w > 0.0) || s == 0 {
        return Err(Error::BadParams("need s >= 1 and w > 0".into()));
    }
    let z = lambda_at(s, w, tol)?;
    let desc = linear_desc(w)?;
    let sf = s as f64;
    let ratio = w * specfun::bessel_j(2.0 * sf - z, 2.0 * w)? / specfun::bessel_j(2.0 * sf - 1.0 - z, 2.0 * w)?;
    let zc = C64::new(z, 0.0);
    let a = charpoly(&desc, 2 * s - 1, zc).re;
    let b = ratio * charpoly(&desc, 2 * s - 2, zc).re;
    Ok(((a - b).abs(), a.abs() + b.abs()))
}

// ---------------------------------------------------------------------------
// norm identities for the five examples

/// The five series identities obtained from ‖ξ(z)‖² = ξ′₀(z)ξ₁(z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum Identity42 {
    /// Σ_k J_{ν+k}(x)², x > 0.
    Bessel { nu: f64, x: f64 },
    /// Σ_k k J_{−αz+k}(z)², α > 0, z > 0.
    Harmonic { alpha: f64, z: f64 },
    /// Σ_k (α+k) J_{α+k}(z)², α > −1, z > 0.
    ZeroDiagHarm { alpha: f64, z: f64 },
    /// The q-geometric case, 0 < q < 1, β > 0.
    Qgeom { q: f64, beta: f64, z: f64 },
    /// The zero-diagonal q case, 0 < q < 1.
    ZeroDiagQ { q: f64, z: f64 },
}

impl Identity42 {
    pub fn which(&self) -> u8 {
        match self {
            Identity42::Bessel { .. } => 1,
            Identity42::Harmonic { .. } => 2,
            Identity42::ZeroDiagHarm { .. } => 3,
            Identity42::Qgeom { .. } => 4,
            Identity42::ZeroDiagQ { .. } => 5,
        }
    }

    /// Item `which` with positional parameters: (ν, x), (α, z), (α, z),
    /// (q, β, z), (q, z).
    pub fn from_params(which: u8, p: &[f64]) -> Result<Self> {
        let need = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::BadParams(format!("item {which} takes {n} parameters, got {}", p.len())))
            }
        };
        match which {
            1 => need(2).map(|_| Identity42::Bessel { nu: p[0], x: p[1] }),
            2 => need(2).map(|_| Identity42::Harmonic { alpha: p[0], z: p[1] }),
            3 => need(2).map(|_| Identity42::ZeroDiagHarm { alpha: p[0], z: p[1] }),
            4 => need(3).map(|_| Identity42::Qgeom { q: p[0], beta: p[1], z: p[2] }),
            5 => need(2).map(|_| Identity42::ZeroDiagQ { q: p[0], z: p[1] }),
            _ => Err(Error::BadParams(format!("identity item must be 1..5, got {which}"))),
        }
    }

    /// A representative parameter point for each item.
    pub fn sample(which: u8) -> Result<Self> {
        match which {
            1 => Self::from_params(1, &[0.3, 1.4]),
            2 => Self::from_params(2, &[0.5, 1.2]),
            3 => Self::from_params(3, &[0.5, 2.0]),
            4 => Self::from_params(4, &[0.5, 1.0, 0.3]),
            5 => Self::from_params(5, &[0.5, 1.3]),
            _ => Err(Error::BadParams(format!("identity item must be 1..5, got {which}"))),
        }
    }

    /// (lhs, rhs): the series summed to a certified remainder, the right
    /// side with derivatives from central differences (h = 1e−5, one
    /// Richardson step).
    pub fn evaluate(&self) -> Result<(f64, f64)> {
        match *self {
            Identity42::Bessel { nu, x } => {
                if !(x > 0.0) {
                    return Err(Error::DomainError("need x > 0".into()));
                }
                let lhs = bessel_square_sum(|k| nu + k as f64, x, |_| 1.0)?;
                let j = |n: f64| specfun::bessel_j(n, x);
                let rhs = 0.5 * x * (j(nu + 1.0)? * derivative(j, nu)? - j(nu)? * derivative(|n| j(n + 1.0), nu)?);
                Ok((lhs, rhs))
            }
            Identity42::Harmonic { alpha, z } => {
                if !(alpha > 0.0 && z > 0.0) {
                    return Err(Error::DomainError("need alpha > 0 and z > 0".into()));
                }
                let lhs = bessel_square_sum(|k| -alpha * z + k as f64, z, |k| k as f64)?;
                let a = |t: f64| specfun::bessel_j(-alpha * t, t);
                let b = |t: f64| specfun::bessel_j(-alpha * t + 1.0, t);
                let rhs = 0.5 * z * z * (a(z)? * derivative(b, z)? - b(z)? * derivative(a, z)?);
                Ok((lhs, rhs))
            }
            Identity42::ZeroDiagHarm { alpha, z } => {
                if !(alpha > -1.0 && z > 0.0) {
                    return Err(Error::DomainError("need alpha > -1 and z > 0".into()));
                }
                let lhs = bessel_square_sum(|k| alpha + k as f64, z, |k| alpha + k as f64)?;
                let a = |t: f64| specfun::bessel_j(alpha, t);
                let b = |t: f64| specfun::bessel_j(alpha + 1.0, t);
                let rhs = 0.5 * z * z * (a(z)? * derivative(b, z)? - b(z)? * derivative(a, z)?);
                Ok((lhs, rhs))
            }
            Identity42::Qgeom { q, beta, z } => qgeom_identity(q, beta, z),
            Identity42::ZeroDiagQ { q, z } => zero_diag_q_identity(q, z),
        }
    }
}

/// Both sides of identity item `which` at the positional parameters `params`.
pub fn identities_42(which: u8, params: &[f64]) -> Result<(f64, f64)> {
    Identity42::from_params(which, params)?.evaluate()
}

fn derivative<F: Fn(f64) -> Result<f64>>(f: F, x: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let (d1, d2) = (d(FD_STEP)?, d(0.5 * FD_STEP)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Σ_{k≥1} t_k, stopping at the first k where `remainder(k)` (a bound on
/// Σ_{j≥k} |t_j|, or None while no bound is available) is negligible.
fn certified_sum<T, R>(term: T, remainder: R) -> Result<f64>
where
    T: Fn(usize) -> Result<f64>,
    R: Fn(usize) -> Option<f64>,
{
    let mut sum = KahanSum::default();
    for k in 1..SUM_LIMIT {
        if let Some(r) = remainder(k) {
            if r <= SUM_EPS * sum.value().abs() || r < 1e-300 {
                return Ok(sum.value());
            }
        }
        sum.add(term(k)?);
    }
    Err(Error::SeriesLimit(SUM_LIMIT))
}

/// Σ_k c_k J_{μ_k}(x)² with μ_k = μ_1 + k − 1 and |c_{k+1}| ≤ 2|c_k| past
/// the head. Remainder from |J_μ(x)| ≤ (x/2)^μ/Γ(μ+1), μ > −1/2.
fn bessel_square_sum<M, C>(order: M, x: f64, weight: C) -> Result<f64>
where
    M: Fn(usize) -> f64,
    C: Fn(usize) -> f64,
{
    let half = 0.5 * x;
    certified_sum(
        |k| Ok(weight(k) * specfun::bessel_j(order(k), x)?.powi(2)),
        |k| {
            let mu = order(k);
            let c = weight(k).abs();
            if mu > -0.5 && half / (mu + 1.0) <= 0.5 && c >= 1.0 {
                let b = half.powf(mu) * specfun::rgamma(mu + 1.0);
                Some(2.0 * c * b * b)
            } else {
                None
            }
        },
    )
}

fn qpoch_inf_re(a: f64, q: f64) -> Result<f64> {
    Ok(specfun::qpochhammer_inf(C64::new(a, 0.0), q)?.re)
}

fn phi01_re(b: f64, q: f64, x: f64) -> Result<f64> {
    Ok(specfun::phi01(C64::new(b, 0.0), q, C64::new(x, 0.0))?.re)
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("need 0 < q < 1, got {q}")))
    }
}

fn qgeom_identity(q: f64, beta: f64, z: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    if !(beta > 0.0) {
        return Err(Error::DomainError("need beta > 0".into()));
    }
    let bz2 = (beta * z).powi(2);
    // |(b;q)_∞ ₀φ₁(;b;q,x)| ≤ 2(−1/2;q)_∞/((q;q)_∞(1/2;q)_∞) once |b|, |x| ≤ 1/2
    let m = 2.0 * qpoch_inf_re(-0.5, q)? / (qpoch_inf_re(q, q)? * qpoch_inf_re(0.5, q)?);
    let pre = |k: usize| {
        let kf = k as f64;
        q.powf((kf - 1.0) * (kf - 2.0) / 2.0) * bz2.powf(kf - 1.0)
    };
    let lhs = certified_sum(
        |k| {
            let b = q.powi(k as i32) * z;
            let v = qpoch_inf_re(b, q)? * phi01_re(b, q, -q.powi(k as i32) * bz2)?;
            Ok(pre(k) * v * v)
        },
        |k| {
            let qk = q.powi(k as i32);
            if (qk * z).abs() <= 0.5 && qk * bz2 <= 0.5 && q.powi(k as i32 - 1) * bz2 <= 0.5 {
                Some(2.0 * pre(k) * m * m)
            } else {
                None
            }
        },
    )?;
    let p = |t: f64| phi01_re(t, q, -(beta * t).powi(2));
    let r = |t: f64| phi01_re(q * t, q, -q * (beta * t).powi(2));
    let rhs = qpoch_inf_re(q * z, q)?.powi(2)
        * (p(z)? * r(z)? + z * (z - 1.0) * (r(z)? * derivative(p, z)? - p(z)? * derivative(r, z)?));
    Ok((lhs, rhs))
}

fn zero_diag_q_identity(q: f64, z: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    // |₀φ₁(;0;q,−y)| ≤ 2/(q;q)_∞ once |y| ≤ 1/2
    let m = 2.0 / qpoch_inf_re(q, q)?;
    let pre = |k: usize| {
        let kf = k as f64;
        q.powf((kf - 1.0) * (kf - 2.0) / 2.0) * z.abs().powf(kf - 1.0)
    };
    let lhs = certified_sum(
        |k| {
            let kf = k as f64;
            let v = phi01_re(0.0, q, -q.powi(k as i32) * z)?;
            Ok(q.powf((kf - 1.0) * (kf - 2.0) / 2.0) * z.powi(k as i32 - 1) * v * v)
        },
        |k| {
            if (q.powi(k as i32) * z).abs() <= 0.5 && q.powi(k as i32 - 1) * z.abs() <= 0.5 {
                Some(2.0 * pre(k) * m * m)
            } else {
                None
            }
        },
    )?;
    let p = |t: f64| phi01_re(0.0, q, -t);
    let r = |t: f64| phi01_re(0.0, q, -q * t);
    let rhs = p(z)? * r(z)? + 2.0 * z * (p(z)? * derivative(r, z)? - r(z)? * derivative(p, z)?);
    Ok((lhs, rhs))
}
