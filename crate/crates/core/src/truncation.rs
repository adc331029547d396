//! Finite truncations J_n: Sturm-count eigenvalues, characteristic and
//! orthogonal polynomials, and tracking of spec(J_n) against zeros of F_J.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::jacobi::JacobiDescriptor;
use crate::spectral::find_real_zeros;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const TINY: f64 = 1e-300;

pub const DEFAULT_N_LIST: [usize; 5] = [25, 50, 100, 200, 400];

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSpectrum {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub method: &'static str,
}

/// Real symmetric tridiagonal data of J_n.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    /// `off[k]` couples rows k and k+1 (0-based), i.e. w_{k+1}.
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn from_desc(desc: &JacobiDescriptor, n: usize) -> Result<Self> {
        if !desc.is_real() {
            return Err(Error::BadParams("Sturm counting needs a real descriptor".into()));
        }
        Ok(Tridiag {
            diag: (1..=n as i64).map(|k| desc.lambda_re(k)).collect(),
            off: (1..n as i64).map(|k| desc.w_re(k)).collect(),
        })
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for k in 0..self.diag.len() {
            let coupling = if k == 0 { 0.0 } else { self.off[k - 1] * self.off[k - 1] / d };
            d = self.diag[k] - x - coupling;
            if d == 0.0 {
                // as if x were a hair smaller
                d = TINY;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let r = if k > 0 { self.off[k - 1].abs() } else { 0.0 } + if k + 1 < n { self.off[k].abs() } else { 0.0 };
            lo = lo.min(self.diag[k] - r);
            hi = hi.max(self.diag[k] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) inside `(lo, hi)` by bisection.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn eigenvalues(&self, tol: f64) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        self.eigenvalues_between(lo - pad, hi + pad, tol)
    }

    /// Eigenvalues in `[a, b)`.
    pub fn eigenvalues_between(&self, a: f64, b: f64, tol: f64) -> Vec<f64> {
        let (c0, c1) = (self.sturm_count(a), self.sturm_count(b));
        (c0..c1).map(|k| self.bisect(k, a, b, tol)).collect()
    }
}

/// All eigenvalues of J_n, increasing, to absolute tolerance `tol`.
pub fn truncated_spectrum(desc: &JacobiDescriptor, n: usize, tol: f64) -> Result<TruncationSpectrum> {
    let t = Tridiag::from_desc(desc, n)?;
    Ok(TruncationSpectrum { n, eigenvalues: t.eigenvalues(tol), method: "sturm-bisection" })
}

/// Eigenvalues of J_n lying in `[a, b)`.
pub fn truncated_spectrum_in(desc: &JacobiDescriptor, n: usize, a: f64, b: f64, tol: f64) -> Result<Vec<f64>> {
    Ok(Tridiag::from_desc(desc, n)?.eigenvalues_between(a, b, tol))
}

/// `det(J_n − z)` by the three-term recurrence.
pub fn charpoly(desc: &JacobiDescriptor, n: usize, z: C64) -> C64 {
    let (mut prev, mut cur) = (ZERO, ONE);
    for k in 1..=n as i64 {
        let coupling = if k == 1 { ZERO } else { desc.w(k - 1) * desc.w(k - 1) };
        let next = (desc.lambda(k) - z) * cur - coupling * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `det(J_n − z) = m · e^{s}` with `|m|` kept near 1.
pub fn charpoly_scaled(desc: &JacobiDescriptor, n: usize, z: C64) -> (C64, f64) {
    let (mut prev, mut cur) = (ZERO, ONE);
    let mut log_scale = 0.0;
    for k in 1..=n as i64 {
        let coupling = if k == 1 { ZERO } else { desc.w(k - 1) * desc.w(k - 1) };
        let next = (desc.lambda(k) - z) * cur - coupling * prev;
        prev = cur;
        cur = next;
        let m = cur.norm().max(prev.norm());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    (cur, log_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyKind {
    First,
    Second,
}

/// `p_n(z)` or `q_n(z)` by the three-term recurrence
/// `w_{n−1}p_{n−2} + λ_n p_{n−1} + w_n p_n = z p_{n−1}` (n ≥ 2),
/// started from `p_0 = 1, p_1 = (z − λ_1)/w_1` or `q_0 = 0, q_1 = 1/w_1`.
pub fn orthopoly(desc: &JacobiDescriptor, kind: PolyKind, n: usize, z: C64) -> C64 {
    let w1 = desc.w(1);
    let (mut prev, mut cur) = match kind {
        PolyKind::First => (ONE, (z - desc.lambda(1)) / w1),
        PolyKind::Second => (ZERO, ONE / w1),
    };
    if n == 0 {
        return prev;
    }
    for k in 2..=n as i64 {
        let next = ((z - desc.lambda(k)) * cur - desc.w(k - 1) * prev) / desc.w(k);
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed 𝔉-product form of `p_n` / `q_n`.
pub fn orthopoly_f_form(desc: &JacobiDescriptor, kind: PolyKind, n: usize, z: C64) -> C64 {
    let first = match kind {
        PolyKind::First => 1,
        PolyKind::Second => {
            if n == 0 {
                return ZERO;
            }
            2
        }
    };
    let mut pref = match kind {
        PolyKind::First => ONE,
        PolyKind::Second => ONE / desc.w(1),
    };
    for k in first..=n as i64 {
        pref *= (z - desc.lambda(k)) / desc.w(k);
    }
    let pairs: Vec<C64> = (first..n as i64).map(|k| desc.pair(z, k)).collect();
    pref * crate::ffun::f_from_pairs(&pairs)
}

/// One row of a Λ(J) tracking table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRow {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// Largest distance from an eigenvalue of J_n in the window to the nearest zero of F_J.
    pub max_distance: f64,
}

/// Which convergence hypothesis of spec(J_n) → spec(J) the descriptor meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    WeightsVanish,
    DiagonalDominates,
}

/// Probe-window check of (i) `w_n → 0` or (ii) `|λ_n| → ∞` with
/// `limsup |w_n|/|λ_n| + limsup |w_n|/|λ_{n+1}| < 1`.
pub fn check_hypothesis(desc: &JacobiDescriptor) -> Result<Hypothesis> {
    let (a, b) = (500i64, 1000i64);
    let w_head = (1..=10).map(|k| desc.w(k).norm()).fold(0.0, f64::max);
    let w_tail = (a..=b).map(|k| desc.w(k).norm()).fold(0.0, f64::max);
    let w_late = (b - 50..=b).map(|k| desc.w(k).norm()).fold(0.0, f64::max);
    let w_mid = (a..a + 50).map(|k| desc.w(k).norm()).fold(0.0, f64::max);
    if w_tail <= 1e-2 * w_head.max(1e-300) && w_late <= w_mid {
        return Ok(Hypothesis::WeightsVanish);
    }
    let lam_grows = desc.lambda(b).norm() > 1.5 * desc.lambda(a).norm().max(1.0);
    if !lam_grows {
        return Err(Error::HypothesisFailed(
            "neither w_n -> 0 nor |lambda_n| -> infinity holds on the probe window".into(),
        ));
    }
    let ratio = |off: i64| (a..=b).map(|k| desc.w(k).norm() / desc.lambda(k + off).norm()).fold(0.0, f64::max);
    let s = ratio(0) + ratio(1);
    if s < 1.0 {
        Ok(Hypothesis::DiagonalDominates)
    } else {
        Err(Error::HypothesisFailed(format!(
            "|lambda_n| -> infinity but limsup |w_n|/|lambda_n| + limsup |w_n|/|lambda_(n+1)| ~ {s:.3} >= 1"
        )))
    }
}

/// spec(J_n) ∩ window for each n, with the distance to the zeros of F_J.
pub fn lambda_tracking(
    desc: &JacobiDescriptor,
    window: (f64, f64),
    n_list: &[usize],
    tol: f64,
) -> Result<(Vec<f64>, Vec<TrackingRow>)> {
    check_hypothesis(desc)?;
    let zeros: Vec<f64> = find_real_zeros(desc, window, tol)?.into_iter().map(|z| z.z).collect();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let eig = truncated_spectrum_in(desc, n, window.0, window.1, tol.max(1e-15))?;
        let max_distance =
            eig.iter().map(|e| zeros.iter().map(|z| (e - z).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        rows.push(TrackingRow { n, eigenvalues: eig, max_distance });
    }
    Ok((zeros, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffun::SequenceSpec;
    use crate::jacobi::{DerLambda, Family};
    use crate::linalg::{det, Dense};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lin(alpha: f64, w: f64) -> JacobiDescriptor {
        JacobiDescriptor::from_family(Family::LinearDiag { alpha, w }).unwrap()
    }

    fn random_desc(rng: &mut ChaCha8Rng, n: usize) -> JacobiDescriptor {
        let lam: Vec<f64> = (0..=n + 2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..=n + 2).map(|_| rng.gen_range(0.2..1.5)).collect();
        JacobiDescriptor::custom(
            SequenceSpec::real(move |k| lam.get(k as usize).copied().unwrap_or(k as f64)),
            SequenceSpec::real(move |k| w.get(k as usize).copied().unwrap_or(1.0)),
            DerLambda::AllReal,
            true,
        )
        .unwrap()
    }

    #[test]
    fn small_orders() {
        let d = lin(1.0, 0.3);
        let e = truncated_spectrum(&d, 1, 1e-14).unwrap().eigenvalues;
        assert!(e.len() == 1 && (e[0] - 1.0).abs() < 1e-13);
        let e = truncated_spectrum(&d, 2, 1e-14).unwrap().eigenvalues;
        // (1−z)(2−z) − 0.09 = 0
        let disc = (1.0f64 + 4.0 * 0.09).sqrt();
        assert!((e[0] - (3.0 - disc) / 2.0).abs() < 1e-13);
        assert!((e[1] - (3.0 + disc) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn charpoly_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let d = random_desc(&mut rng, 5);
            let z = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
            let n = 3;
            let diag: Vec<C64> = (1..=n as i64).map(|k| d.lambda(k) - z).collect();
            let off: Vec<C64> = (1..n as i64).map(|k| d.w(k)).collect();
            let lu = det(&Dense::tridiagonal(&diag, &off, &off));
            assert!((charpoly(&d, n, z) - lu).norm() <= 1e-11 * lu.norm().max(1.0));
        }
        assert_eq!(charpoly(&lin(1.0, 1.0), 0, C64::new(0.3, 0.0)), ONE);
        let (m, s) = charpoly_scaled(&lin(1.0, 1.0), 300, C64::new(0.5, 0.0));
        let direct = charpoly(&lin(1.0, 1.0), 120, C64::new(0.5, 0.0));
        let (m2, s2) = charpoly_scaled(&lin(1.0, 1.0), 120, C64::new(0.5, 0.0));
        assert!(m.norm().is_finite() && s > 0.0);
        assert!(((m2 * s2.exp()) - direct).norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn eigenvalues_are_charpoly_roots_and_interlace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let d = random_desc(&mut rng, 12);
            let e12 = truncated_spectrum(&d, 12, 1e-14).unwrap().eigenvalues;
            let e11 = truncated_spectrum(&d, 11, 1e-14).unwrap().eigenvalues;
            for w in e12.windows(2) {
                assert!(w[0] < w[1]);
            }
            for (k, &e) in e11.iter().enumerate() {
                assert!(e12[k] <= e && e <= e12[k + 1]);
            }
            for &e in &e12 {
                let (m, s) = charpoly_scaled(&d, 12, C64::new(e, 0.0));
                let scale = (1..=12).map(|k| 1.0 + d.lambda_re(k).abs() + 2.0 * d.w_re(k).abs()).product::<f64>();
                assert!(m.norm() * s.exp() < 1e-8 * scale);
            }
            let t = Tridiag::from_desc(&d, 12).unwrap();
            assert_eq!(
                t.sturm_count(0.0) - t.sturm_count(-0.5),
                e12.iter().filter(|&&e| (-0.5..0.0).contains(&e)).count()
            );
        }
    }

    #[test]
    fn exact_diagonal_hit_is_guarded() {
        let d = JacobiDescriptor::from_family(Family::ZeroDiagQ { q: 0.5 }).unwrap();
        let t = Tridiag::from_desc(&d, 7).unwrap();
        assert_eq!(t.sturm_count(0.0), 3);
        let e = t.eigenvalues(1e-14);
        assert_eq!(e.len(), 7);
        assert!(e[3].abs() < 1e-13);
    }

    #[test]
    fn orthopoly_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = random_desc(&mut rng, 40);
        assert_eq!(orthopoly(&d, PolyKind::First, 0, ONE), ONE);
        assert_eq!(orthopoly(&d, PolyKind::Second, 0, ONE), ZERO);
        let z = C64::new(0.3, 0.7);
        assert!((orthopoly(&d, PolyKind::Second, 1, z) - ONE / d.w(1)).norm() < 1e-15);
        assert!((orthopoly(&d, PolyKind::First, 1, z) - (z - d.lambda(1)) / d.w(1)).norm() < 1e-15);
        for n in 0..=30 {
            for kind in [PolyKind::First, PolyKind::Second] {
                let a = orthopoly(&d, kind, n, z);
                let b = orthopoly_f_form(&d, kind, n, z);
                assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "{kind:?} n={n}: {a} vs {b}");
            }
            // p_n = (−1)^n χ_n / Π w_k
            let w_prod: C64 = (1..=n as i64).map(|k| d.w(k)).product();
            let chi = charpoly(&d, n, z) * if n % 2 == 0 { 1.0 } else { -1.0 };
            let p = orthopoly(&d, PolyKind::First, n, z);
            assert!((p - chi / w_prod).norm() <= 1e-10 * p.norm().max(1.0));
        }
        // three-term relation at interior n
        for n in 2..20i64 {
            let p = |m: i64| orthopoly(&d, PolyKind::First, m as usize, z);
            let lhs = d.w(n - 1) * p(n - 2) + d.lambda(n) * p(n - 1) + d.w(n) * p(n);
            assert!((lhs - z * p(n - 1)).norm() <= 1e-10 * p(n - 1).norm().max(1.0));
        }
    }

    #[test]
    fn hypothesis_checks() {
        assert_eq!(check_hypothesis(&lin(1.0, 0.5)).unwrap(), Hypothesis::DiagonalDominates);
        let q = JacobiDescriptor::from_family(Family::Qgeom { q: 0.5, beta: 1.0 }).unwrap();
        assert_eq!(check_hypothesis(&q).unwrap(), Hypothesis::WeightsVanish);
        // w_n = λ_n = n
        let bad = JacobiDescriptor::custom(
            SequenceSpec::real(|n| n as f64),
            SequenceSpec::real(|n| n as f64),
            DerLambda::Empty,
            true,
        )
        .unwrap();
        assert!(matches!(check_hypothesis(&bad), Err(Error::HypothesisFailed(_))));
    }
}
