//! Jacobi matrix descriptors, γ-sequences and the characteristic function
//! `F_J(z) = 𝔉({γ_n² / (λ_n − z)})`.
//!
//! Evaluation never forms γ_n: 𝔉 only needs the adjacent products
//! `γ_k²γ_{k+1}² / ((λ_k − z)(λ_{k+1} − z)) = w_k² / ((λ_k − z)(λ_{k+1} − z))`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ffun::{self, f_finite, f_tail_profile, SequenceSpec, TailBound};
use crate::linalg::{det, Dense};

/// Number of leading indices scanned for pole hits and multiplicities.
pub const PROBE_LEN: i64 = 1000;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Declared accumulation points of the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum DerLambda {
    Empty,
    Points(Vec<f64>),
    AllReal,
}

impl DerLambda {
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        match self {
            DerLambda::Empty => false,
            DerLambda::Points(p) => p.iter().any(|&c| (z - c).norm() <= tol),
            DerLambda::AllReal => z.im.abs() <= tol,
        }
    }

    /// Does the real interval `[lo, hi]` meet the set?
    pub fn meets_interval(&self, lo: f64, hi: f64) -> bool {
        match self {
            DerLambda::Empty => false,
            DerLambda::Points(p) => p.iter().any(|&c| c >= lo && c <= hi),
            DerLambda::AllReal => true,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            DerLambda::Empty => json!([]),
            DerLambda::Points(p) => json!(p),
            DerLambda::AllReal => json!("all"),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(a) if a.is_empty() => Ok(DerLambda::Empty),
            Value::Array(a) => a
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::Descriptor(format!("der_lambda entry {x} is not a number"))))
                .collect::<Result<Vec<_>>>()
                .map(DerLambda::Points),
            Value::String(s) if s == "all" || s == "R" => Ok(DerLambda::AllReal),
            Value::String(s) if s == "empty" => Ok(DerLambda::Empty),
            other => Err(Error::Descriptor(format!("unrecognised der_lambda {other}"))),
        }
    }
}

/// Built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// λ_n = αn, w_n = w.
    LinearDiag { alpha: f64, w: f64 },
    /// λ_n = 1/n, w_n = β/√(n(n+1)).
    Harmonic { beta: f64 },
    /// λ_n = q^{n−1}, w_n = β q^{(n−1)/2}.
    Qgeom { q: f64, beta: f64 },
    /// λ_n = 0, w_n = 1/√((n+α)(n+α+1)).
    ZeroDiagHarm { alpha: f64 },
    /// λ_n = 0, w_n = q^{n−1}.
    ZeroDiagQ { q: f64 },
    /// λ_n = P(n)/Q(n), w_n = R(n)/S(n); coefficients in ascending powers of n.
    CustomRational { lambda_num: Vec<f64>, lambda_den: Vec<f64>, w_num: Vec<f64>, w_den: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::LinearDiag { .. } => "linear_diag",
            Family::Harmonic { .. } => "harmonic",
            Family::Qgeom { .. } => "qgeom",
            Family::ZeroDiagHarm { .. } => "zero_diag_harm",
            Family::ZeroDiagQ { .. } => "zero_diag_q",
            Family::CustomRational { .. } => "custom_rational",
        }
    }

    pub fn default_der_lambda(&self) -> DerLambda {
        match self {
            Family::LinearDiag { .. } => DerLambda::Empty,
            Family::CustomRational { lambda_num, lambda_den, .. } => {
                let (p, q) = (trim_real(lambda_num), trim_real(lambda_den));
                if p.len() > q.len() {
                    DerLambda::Empty
                } else if p.len() == q.len() {
                    DerLambda::Points(vec![p[p.len() - 1] / q[q.len() - 1]])
                } else {
                    DerLambda::Points(vec![0.0])
                }
            }
            _ => DerLambda::Points(vec![0.0]),
        }
    }
}

fn trim_real(c: &[f64]) -> Vec<f64> {
    let mut v = c.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

// ---------------------------------------------------------------------------
// polynomials in n with complex coefficients, ascending order

#[derive(Debug, Clone)]
struct Poly(Vec<C64>);

impl Poly {
    fn real(c: &[f64]) -> Poly {
        Poly(c.iter().map(|&x| C64::new(x, 0.0)).collect()).trimmed()
    }

    fn trimmed(mut self) -> Poly {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while self.0.len() > 1 && self.0.last().unwrap().norm() <= 1e-15 * scale {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(ZERO);
        }
        self
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn lead(&self) -> C64 {
        *self.0.last().unwrap()
    }

    fn eval(&self, x: f64) -> C64 {
        self.0.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut r = vec![ZERO; self.0.len() + o.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in o.0.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        Poly(r).trimmed()
    }

    fn scale_sub(&self, z: C64, o: &Poly) -> Poly {
        // self − z·o
        let n = self.0.len().max(o.0.len());
        let r =
            (0..n).map(|i| self.0.get(i).copied().unwrap_or(ZERO) - z * o.0.get(i).copied().unwrap_or(ZERO)).collect();
        Poly(r).trimmed()
    }

    /// p(n + 1)
    fn shifted(&self) -> Poly {
        let d = self.0.len();
        let mut r = vec![ZERO; d];
        for (i, &c) in self.0.iter().enumerate() {
            // (n+1)^i = Σ_j C(i,j) n^j
            let mut binom = 1.0;
            for (j, rj) in r.iter_mut().enumerate().take(i + 1) {
                *rj += c * binom;
                binom = binom * (i - j) as f64 / (j + 1) as f64;
            }
        }
        Poly(r).trimmed()
    }

    /// η(K) = Σ_{i<d} |c_i / c_d| K^{i−d}; then for n ≥ K,
    /// |p(n)| lies within |c_d| n^d (1 ± η(K)).
    fn eta(&self, k: f64) -> f64 {
        let d = self.degree();
        let lead = self.lead().norm();
        (0..d).map(|i| self.0[i].norm() / lead * k.powi(i as i32 - d as i32)).sum()
    }
}

/// λ_n = P/Q and w_n² = R/S as rational functions of n.
#[derive(Debug, Clone)]
struct RationalModel {
    p: Poly,
    q: Poly,
    r: Poly,
    s: Poly,
}

impl RationalModel {
    /// Rigorous bound for Σ_{k≥n} |w_k² / ((λ_k − z)(λ_{k+1} − z))| plus the
    /// index past which the bound's asymptotic form holds.
    fn tail_bound(&self, z: C64) -> Result<(ffun::BoundFn, i64)> {
        let num = self.r.mul(&self.q).mul(&self.q.shifted());
        let lz = self.p.scale_sub(z, &self.q);
        let den = self.s.mul(&lz).mul(&lz.shifted());
        if num.lead().norm() == 0.0 {
            return Ok((Arc::new(|_| 0.0), 1));
        }
        if den.degree() < num.degree() + 2 {
            return Err(Error::Diverges(format!(
                "products decay like n^-{}; need at least n^-2",
                den.degree() as i64 - num.degree() as i64
            )));
        }
        let p = (den.degree() - num.degree()) as i32;
        let mut k0: i64 = 2;
        while den.eta(k0 as f64) > 0.5 {
            k0 *= 2;
            if k0 > 1 << 40 {
                return Err(Error::Diverges("root bound overflow".into()));
            }
        }
        let lead_ratio = num.lead().norm() / den.lead().norm();
        let cap = {
            let (num, den) = (num.clone(), den.clone());
            move |k: f64| lead_ratio * (1.0 + num.eta(k)) / (1.0 - den.eta(k))
        };
        let head: Vec<f64> = (1..k0).map(|k| (num.eval(k as f64) / den.eval(k as f64)).norm()).collect();
        let bound = move |n: i64| -> f64 {
            let n = n.max(1);
            let m = n.max(k0);
            let head_part: f64 = if n < k0 { head[(n - 1) as usize..].iter().sum() } else { 0.0 };
            let tail = cap(m as f64) * ((m - 1) as f64).powi(1 - p) / (p - 1) as f64;
            head_part + tail
        };
        Ok((Arc::new(bound), k0))
    }
}

#[derive(Clone)]
enum Model {
    Rational(RationalModel),
    Qgeom { q: f64, beta: f64 },
    ZeroDiagQ { q: f64 },
    Supplied { bound: PairTailFn, algebraic: bool, regular_from: i64 },
    Opaque,
}

/// `(z, n) ↦` bound on `Σ_{k≥n} |w_k² / ((λ_k − z)(λ_{k+1} − z))|`.
pub type PairTailFn = Arc<dyn Fn(C64, i64) -> f64 + Send + Sync>;

/// A symmetric Jacobi matrix: diagonal λ_n, off-diagonal w_n (n ≥ 1).
#[derive(Clone)]
pub struct JacobiDescriptor {
    lambda: SequenceSpec,
    weight: SequenceSpec,
    der_lambda: DerLambda,
    is_real: bool,
    family: Option<Family>,
    model: Model,
}

impl std::fmt::Debug for JacobiDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JacobiDescriptor")
            .field("family", &self.family)
            .field("der_lambda", &self.der_lambda)
            .field("is_real", &self.is_real)
            .finish()
    }
}

impl JacobiDescriptor {
    pub fn from_family(family: Family) -> Result<Self> {
        Self::from_family_with_der(family.clone(), family.default_der_lambda())
    }

    pub fn from_family_with_der(family: Family, der_lambda: DerLambda) -> Result<Self> {
        let bad = |m: &str| Err(Error::BadParams(format!("{}: {m}", family.name())));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let (lambda, weight, model) = match family.clone() {
            Family::LinearDiag { alpha, w } => {
                if !finite(&[alpha, w]) || alpha == 0.0 || w == 0.0 {
                    return bad("need alpha != 0 and w != 0");
                }
                (
                    SequenceSpec::real(move |n| alpha * n as f64),
                    SequenceSpec::real(move |_| w),
                    Model::Rational(RationalModel {
                        p: Poly::real(&[0.0, alpha]),
                        q: Poly::real(&[1.0]),
                        r: Poly::real(&[w * w]),
                        s: Poly::real(&[1.0]),
                    }),
                )
            }
            Family::Harmonic { beta } => {
                if !finite(&[beta]) || beta <= 0.0 {
                    return bad("need beta > 0");
                }
                (
                    SequenceSpec::real(|n| 1.0 / n as f64),
                    SequenceSpec::real(move |n| beta / ((n * (n + 1)) as f64).sqrt()),
                    Model::Rational(RationalModel {
                        p: Poly::real(&[1.0]),
                        q: Poly::real(&[0.0, 1.0]),
                        r: Poly::real(&[beta * beta]),
                        s: Poly::real(&[0.0, 1.0, 1.0]),
                    }),
                )
            }
            Family::Qgeom { q, beta } => {
                if !finite(&[q, beta]) || !(q > 0.0 && q < 1.0) || beta <= 0.0 {
                    return bad("need 0 < q < 1 and beta > 0");
                }
                (
                    SequenceSpec::real(move |n| q.powi(n as i32 - 1)),
                    SequenceSpec::real(move |n| beta * q.powf((n - 1) as f64 / 2.0)),
                    Model::Qgeom { q, beta },
                )
            }
            Family::ZeroDiagHarm { alpha } => {
                if !finite(&[alpha]) || alpha <= -1.0 {
                    return bad("need alpha > -1");
                }
                (
                    SequenceSpec::real(|_| 0.0),
                    SequenceSpec::real(move |n| 1.0 / ((n as f64 + alpha) * (n as f64 + alpha + 1.0)).sqrt()),
                    Model::Rational(RationalModel {
                        p: Poly::real(&[0.0]),
                        q: Poly::real(&[1.0]),
                        r: Poly::real(&[1.0]),
                        s: Poly::real(&[alpha * (alpha + 1.0), 2.0 * alpha + 1.0, 1.0]),
                    }),
                )
            }
            Family::ZeroDiagQ { q } => {
                if !finite(&[q]) || !(q > 0.0 && q < 1.0) {
                    return bad("need 0 < q < 1");
                }
                (SequenceSpec::real(|_| 0.0), SequenceSpec::real(move |n| q.powi(n as i32 - 1)), Model::ZeroDiagQ { q })
            }
            Family::CustomRational { lambda_num, lambda_den, w_num, w_den } => {
                let all: Vec<f64> = lambda_num.iter().chain(&lambda_den).chain(&w_num).chain(&w_den).copied().collect();
                if !finite(&all)
                    || lambda_num.is_empty()
                    || lambda_den.is_empty()
                    || w_num.is_empty()
                    || w_den.is_empty()
                {
                    return bad("coefficient lists must be nonempty and finite");
                }
                let (p, q, r, s) =
                    (Poly::real(&lambda_num), Poly::real(&lambda_den), Poly::real(&w_num), Poly::real(&w_den));
                if q.lead().norm() == 0.0 || s.lead().norm() == 0.0 || r.lead().norm() == 0.0 {
                    return bad("zero denominator or zero weight polynomial");
                }
                let (p2, q2, r2, s2) = (p.clone(), q.clone(), r.clone(), s.clone());
                let model = RationalModel { p, q, r: r.mul(&r), s: s.mul(&s) };
                (
                    SequenceSpec::new(move |n| p2.eval(n as f64) / q2.eval(n as f64)),
                    SequenceSpec::new(move |n| r2.eval(n as f64) / s2.eval(n as f64)),
                    Model::Rational(model),
                )
            }
        };
        let desc = JacobiDescriptor { lambda, weight, der_lambda, is_real: true, family: Some(family), model };
        desc.validate()?;
        Ok(desc)
    }

    /// A descriptor from arbitrary term functions. Without a closed-form
    /// model, convergence is certified by the geometric decay test.
    pub fn custom(lambda: SequenceSpec, weight: SequenceSpec, der_lambda: DerLambda, is_real: bool) -> Result<Self> {
        let desc = JacobiDescriptor { lambda, weight, der_lambda, is_real, family: None, model: Model::Opaque };
        desc.validate()?;
        Ok(desc)
    }

    /// Attach a caller-supplied tail bound for the pair products.
    pub fn with_tail_bound<F>(mut self, bound: F, algebraic: bool, regular_from: i64) -> Self
    where
        F: Fn(C64, i64) -> f64 + Send + Sync + 'static,
    {
        self.model = Model::Supplied { bound: Arc::new(bound), algebraic, regular_from };
        self
    }

    /// Probe-window checks: nonzero weights, realness, der(λ) consistency.
    pub fn validate(&self) -> Result<()> {
        for k in 1..=PROBE_LEN {
            let (l, w) = (self.lambda(k), self.w(k));
            if (k <= 50 && w.norm() == 0.0) || !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Descriptor(format!("w_{k} vanishes or is not finite")));
            }
            if !l.re.is_finite() || !l.im.is_finite() {
                return Err(Error::Descriptor(format!("lambda_{k} is not finite")));
            }
            if self.is_real && (l.im != 0.0 || w.im != 0.0) {
                return Err(Error::Descriptor(format!("descriptor marked real but entry {k} is complex")));
            }
        }
        // der(λ): the tail of the probe window must drift toward the declared set
        let (a, b) = (PROBE_LEN / 2, PROBE_LEN);
        let tail: Vec<C64> = (a..=b).map(|k| self.lambda(k)).collect();
        match &self.der_lambda {
            DerLambda::AllReal => {}
            DerLambda::Empty => {
                let grows = tail.last().unwrap().norm() > tail[0].norm() + 1.0;
                if !grows {
                    return Err(Error::Descriptor(
                        "der_lambda declared empty but the diagonal does not diverge".into(),
                    ));
                }
            }
            DerLambda::Points(p) => {
                let dist = |z: C64| p.iter().map(|&c| (z - c).norm()).fold(f64::INFINITY, f64::min);
                let worst = tail.iter().map(|&z| dist(z)).fold(0.0, f64::max);
                let scale = 1.0 + p.iter().map(|c| c.abs()).fold(0.0, f64::max);
                if worst > 0.05 * scale {
                    return Err(Error::Descriptor(format!(
                        "diagonal stays {worst:.3e} away from the declared accumulation points"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    pub fn der_lambda(&self) -> &DerLambda {
        &self.der_lambda
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn lambda(&self, n: i64) -> C64 {
        self.lambda.term(n)
    }

    pub fn w(&self, n: i64) -> C64 {
        self.weight.term(n)
    }

    /// Real diagonal entry (real descriptors).
    pub fn lambda_re(&self, n: i64) -> f64 {
        self.lambda(n).re
    }

    pub fn w_re(&self, n: i64) -> f64 {
        self.w(n).re
    }

    /// `w_k² / ((λ_k − z)(λ_{k+1} − z))`.
    pub fn pair(&self, z: C64, k: i64) -> C64 {
        let w = self.w(k);
        w * w / ((self.lambda(k) - z) * (self.lambda(k + 1) - z))
    }

    /// Tail-sum bound `n ↦ Σ_{k≥n} |pair(z, k)|` and the index past which it is
    /// in its asymptotic regime. `None` for descriptors without a model.
    fn tail_model(&self, z: C64) -> Result<Option<(ffun::BoundFn, i64, bool)>> {
        match &self.model {
            Model::Opaque => Ok(None),
            Model::Supplied { bound, algebraic, regular_from } => {
                let b = bound.clone();
                Ok(Some((Arc::new(move |n| b(z, n)), *regular_from, *algebraic)))
            }
            Model::Rational(m) => {
                let (b, k0) = m.tail_bound(z)?;
                Ok(Some((b, k0, true)))
            }
            Model::Qgeom { q, beta } => {
                let (q, b2, az) = (*q, beta * beta, z.norm());
                // beyond n1, q^{k-1} ≤ |z|/2, so |λ_k − z| ≥ |z| − q^{k-1}
                let n1 = if az >= 2.0 { 1 } else { 1 + ((az / 2.0).ln() / q.ln()).ceil().max(0.0) as i64 };
                let desc = self.clone();
                Ok(Some((
                    Arc::new(move |n: i64| {
                        let n = n.max(1);
                        let m = n.max(n1);
                        let head: f64 = (n..m).map(|k| desc.pair(z, k).norm()).sum();
                        let qm = q.powi(m as i32 - 1);
                        head + b2 * qm / ((az - qm) * (az - qm * q) * (1.0 - q))
                    }),
                    n1,
                    false,
                )))
            }
            Model::ZeroDiagQ { q } => {
                let (q, az2) = (*q, z.norm_sqr());
                Ok(Some((Arc::new(move |n: i64| q.powi(2 * (n.max(1) as i32 - 1)) / (az2 * (1.0 - q * q))), 1, false)))
            }
        }
    }

    /// The sequence `{γ_n² / (λ_n − z)}` with its pair products and tail bound.
    pub fn sequence_at(&self, z: C64) -> Result<SequenceSpec> {
        let d1 = self.clone();
        let d2 = self.clone();
        let mut seq = SequenceSpec::new(move |k| {
            let g = d1.gamma(k);
            g * g / (d1.lambda(k) - z)
        })
        .with_pair(move |k| d2.pair(z, k));
        if let Some((bound, k0, algebraic)) = self.tail_model(z)? {
            seq = seq.with_tail_bound(move |n| bound(n)).algebraic(algebraic).regular_from(k0);
        }
        Ok(seq)
    }

    /// γ_k from the closed products; γ_1 = 1 and γ_kγ_{k+1} = w_k.
    pub fn gamma(&self, k: i64) -> C64 {
        assert!(k >= 1, "gamma index starts at 1");
        let m = (k + 1) / 2;
        if k % 2 == 1 {
            (1..m).fold(ONE, |g, j| g * self.w(2 * j) / self.w(2 * j - 1))
        } else {
            (1..m).fold(self.w(1), |g, j| g * self.w(2 * j + 1) / self.w(2 * j))
        }
    }

    fn pole_tol(l: C64) -> f64 {
        1e-12 * (1.0 + l.norm())
    }

    /// First diagonal index within pole tolerance of z, over the probe window.
    pub fn pole_hit(&self, z: C64) -> Option<i64> {
        (1..=PROBE_LEN).find(|&k| {
            let l = self.lambda(k);
            (z - l).norm() < Self::pole_tol(l)
        })
    }

    /// `(r(z), M)`: multiplicity of z on the diagonal and the largest index
    /// with λ_M = z, over a probe window of `max(4·index_hint, 1000)`.
    pub fn multiplicity(&self, z: C64, index_hint: i64) -> (usize, i64) {
        let len = (4 * index_hint).max(PROBE_LEN);
        let tol = 1e-12 * (1.0 + z.norm());
        let mut r = 0;
        let mut m = 0;
        for k in 1..=len {
            if (self.lambda(k) - z).norm() <= tol {
                r += 1;
                m = k;
            }
        }
        (r, m)
    }
}

// ---------------------------------------------------------------------------
// JSON descriptor

/// Parse `{ "family": …, "params": {…}, "der_lambda": … }`.
pub fn descriptor_from_json(text: &str) -> Result<JacobiDescriptor> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Descriptor(format!("invalid JSON: {e}")))?;
    descriptor_from_value(&v)
}

pub fn descriptor_from_value(v: &Value) -> Result<JacobiDescriptor> {
    let obj = v.as_object().ok_or_else(|| Error::Descriptor("descriptor must be a JSON object".into()))?;
    let fam_only = json!({
        "family": obj.get("family").cloned().unwrap_or(Value::Null),
        "params": obj.get("params").cloned().unwrap_or_else(|| json!({})),
    });
    let family: Family = serde_json::from_value(fam_only).map_err(|e| Error::Descriptor(format!("{e}")))?;
    let der = match obj.get("der_lambda") {
        Some(d) => DerLambda::from_json(d)?,
        None => family.default_der_lambda(),
    };
    JacobiDescriptor::from_family_with_der(family, der)
}

/// Serialize a family descriptor. Opaque descriptors have no JSON form.
pub fn descriptor_to_json(desc: &JacobiDescriptor) -> Result<Value> {
    let fam = desc.family().ok_or_else(|| Error::Descriptor("descriptor has no family form".into()))?;
    let mut v = serde_json::to_value(fam).map_err(|e| Error::Descriptor(e.to_string()))?;
    v["der_lambda"] = desc.der_lambda().to_json();
    Ok(v)
}

// ---------------------------------------------------------------------------
// convergence and the characteristic function

fn neville_last(h: &[f64], vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    let mut t = vals.to_vec();
    let mut diag = vec![t[0]];
    for m in 1..n {
        for j in (m..n).rev() {
            t[j] = t[j] + (t[j] - t[j - 1]) * h[j] / (h[j - m] - h[j]);
        }
        diag.push(t[m]);
    }
    let k = diag.len();
    (diag[k - 1], (diag[k - 1] - diag[k - 2]).abs())
}

/// Certified `Σ_n |w_n² / ((λ_n − z0)(λ_{n+1} − z0))|`, returned with the
/// truncation index and the remainder bound.
pub fn check_convergence(desc: &JacobiDescriptor, z0: C64, tol: f64) -> Result<(f64, TailBound)> {
    if desc.der_lambda.contains(z0, tol) {
        return Err(Error::InvalidZ0 { index: 0, z0 });
    }
    if let Some(k) = (1..=PROBE_LEN).find(|&k| (desc.lambda(k) - z0).norm() < tol) {
        return Err(Error::InvalidZ0 { index: k as usize, z0 });
    }
    let seq = desc.sequence_at(z0)?;
    let model = desc.tail_model(z0).map_err(|e| Error::Diverges(e.to_string()))?;
    let (bound, algebraic): (ffun::BoundFn, bool) = match model {
        Some((b, _, alg)) => (b, alg),
        None => {
            // certify via the geometric decay test through f_tail
            ffun::f_tail(&seq, 1, 1.0).map_err(|e| Error::Diverges(e.to_string()))?;
            return geometric_partial(&seq, tol);
        }
    };
    let term = |k: i64| seq.pair(k).norm();
    // smallest N with bound(N) ≤ tol, if practical
    let mut n: i64 = 1;
    while bound(n) > tol && n < (1 << 22) {
        n *= 2;
    }
    if bound(n) <= tol {
        let s: f64 = (1..n).map(term).sum();
        return Ok((s, TailBound { index: n - 1, residual: bound(n), certified: true }));
    }
    if !algebraic {
        return Err(Error::TolUnreachable { tol, best: bound(n), index: n as usize });
    }
    // algebraic decay: extrapolate partial sums in 1/N
    let mut partial = 0.0;
    let mut k = 1;
    let mut h = Vec::new();
    let mut vals = Vec::new();
    let n0 = 64;
    let mut best = (f64::NAN, f64::INFINITY, 0);
    for j in 0..14 {
        let nj = n0 << j;
        while k < nj {
            partial += term(k);
            k += 1;
        }
        h.push(1.0 / nj as f64);
        vals.push(partial);
        if vals.len() >= 2 {
            let (v, e) = neville_last(&h, &vals);
            if e < best.1 {
                best = (v, e, nj);
            }
            if vals.len() >= 4 && e <= tol * v.abs().max(1.0) {
                break;
            }
        }
    }
    Ok((best.0, TailBound { index: best.2, residual: best.1, certified: false }))
}

fn geometric_partial(seq: &SequenceSpec, tol: f64) -> Result<(f64, TailBound)> {
    let mut s = 0.0;
    let mut last_small = 0;
    for k in 1..(1i64 << 20) {
        let t = seq.pair(k).norm();
        s += t;
        if t <= tol * 1e-3 * s.max(1e-300) {
            last_small += 1;
            if last_small >= 8 {
                return Ok((s, TailBound { index: k, residual: t * 8.0, certified: false }));
            }
        } else {
            last_small = 0;
        }
    }
    Err(Error::Diverges("partial sums did not stagnate".into()))
}

/// F_J(z) within `tol`.
pub fn charfn(desc: &JacobiDescriptor, z: C64, tol: f64) -> Result<(C64, TailBound)> {
    if desc.der_lambda.contains(z, 0.0) {
        return Err(Error::AccumulationPoint(z));
    }
    if let Some(k) = desc.pole_hit(z) {
        return Err(Error::PoleAt { index: k as usize, z });
    }
    let seq = desc.sequence_at(z)?;
    ffun::f_tail(&seq, 1, tol)
}

/// Scaled pole-free form on a window: with `s_k = (1 + |λ_k|² + |u|²)^{1/2}`,
/// returns `Π_{k≤m} (λ_k − u)/s_k · F_J(u)`, computed from the splitting at `m`
/// so that no λ_k with k ≤ m enters a denominator. λ_{m+1} must differ from u.
pub fn charfn_cleared(desc: &JacobiDescriptor, u: C64, m: i64, tol: f64) -> Result<C64> {
    if m == 0 {
        return charfn(desc, u, tol).map(|r| r.0);
    }
    let (d_m, d_m1, s_m) = scaled_charpoly(desc, u, m);
    let seq = desc.sequence_at(u)?;
    let (t, _) = f_tail_profile(&seq, m + 1, 2, tol)?;
    let w = desc.w(m);
    let corr = w * w / (s_m * (desc.lambda(m + 1) - u));
    Ok(d_m * t[0] - d_m1 * corr * t[1])
}

/// `(d_m, d_{m−1}, s_m)` where `d_k = det(J_k − u) / Π_{j≤k} s_j`.
pub fn scaled_charpoly(desc: &JacobiDescriptor, u: C64, m: i64) -> (C64, C64, f64) {
    let un = u.norm_sqr();
    let s = |k: i64| (1.0 + desc.lambda(k).norm_sqr() + un).sqrt();
    let mut d_prev = ONE; // d_0
    let mut s_cur = s(1);
    let mut d = (desc.lambda(1) - u) / s_cur;
    for k in 2..=m {
        let sk = s(k);
        let w = desc.w(k - 1);
        let next = (desc.lambda(k) - u) / sk * d - w * w / (sk * s_cur) * d_prev;
        d_prev = d;
        d = next;
        s_cur = sk;
    }
    (d, d_prev, s_cur)
}

/// `lim_{u→z} (u − z)^{r(z)} F_J(u)` by exact extraction of the pole factor.
pub fn charfn_regularized(desc: &JacobiDescriptor, z: C64, tol: f64) -> Result<C64> {
    if desc.der_lambda.contains(z, 0.0) {
        return Err(Error::AccumulationPoint(z));
    }
    let (r, m) = desc.multiplicity(z, 1);
    if r == 0 {
        return charfn(desc, z, tol).map(|v| v.0);
    }
    let ptol = 1e-12 * (1.0 + z.norm());
    // D_m(z) / Π_{k≤m} s_k
    let cleared = charfn_cleared(desc, z, m, tol)?;
    let un = z.norm_sqr();
    let mut denom = ONE;
    for k in 1..=m {
        let l = desc.lambda(k);
        let sk = (1.0 + l.norm_sqr() + un).sqrt();
        if (l - z).norm() <= ptol {
            denom *= C64::new(-1.0 / sk, 0.0);
        } else {
            denom *= (l - z) / sk;
        }
    }
    Ok(cleared / denom)
}

// ---------------------------------------------------------------------------
// general (non-symmetric) finite matrices

/// Diagonal λ, superdiagonal w and subdiagonal v.
#[derive(Clone, Debug)]
pub struct GeneralJacobiDescriptor {
    pub lambda: SequenceSpec,
    pub w: SequenceSpec,
    pub v: SequenceSpec,
}

impl GeneralJacobiDescriptor {
    pub fn new(lambda: SequenceSpec, w: SequenceSpec, v: SequenceSpec) -> Self {
        GeneralJacobiDescriptor { lambda, w, v }
    }

    pub fn from_symmetric(desc: &JacobiDescriptor) -> Self {
        GeneralJacobiDescriptor { lambda: desc.lambda.clone(), w: desc.weight.clone(), v: desc.weight.clone() }
    }

    /// `(γ⁻_k, γ⁺_k)` for k = 1..n.
    pub fn gamma_pm(&self, n: usize) -> Vec<(C64, C64)> {
        let mut out = Vec::with_capacity(n);
        let (mut gm, mut gp) = (ONE, ONE);
        for k in 1..=n as i64 {
            out.push((gm, gp));
            let (nm, np) = (self.v.term(k) / gp, self.w.term(k) / gm);
            gm = nm;
            gp = np;
        }
        out
    }

    /// Dense `J_n − z`.
    pub fn shifted_matrix(&self, n: usize, z: C64) -> Dense {
        let diag: Vec<C64> = (1..=n as i64).map(|k| self.lambda.term(k) - z).collect();
        let sup: Vec<C64> = (1..n as i64).map(|k| self.w.term(k)).collect();
        let sub: Vec<C64> = (1..n as i64).map(|k| self.v.term(k)).collect();
        Dense::tridiagonal(&diag, &sup, &sub)
    }

    /// The products `γ⁻_kγ⁺_k / (λ_k − z)` for k = 1..n.
    pub fn f_arguments(&self, n: usize, z: C64) -> Vec<C64> {
        self.gamma_pm(n)
            .iter()
            .enumerate()
            .map(|(i, (gm, gp))| gm * gp / (self.lambda.term(i as i64 + 1) - z))
            .collect()
    }
}

/// `det(J_n − z)` by LU (left) and `Π(λ_k − z) · 𝔉({γ⁻_kγ⁺_k/(λ_k − z)})` (right).
pub fn det_truncation_identity(g: &GeneralJacobiDescriptor, n: usize, z: C64) -> (C64, C64) {
    let lhs = det(&g.shifted_matrix(n, z));
    let prod = (1..=n as i64).fold(ONE, |p, k| p * (g.lambda.term(k) - z));
    let rhs = prod * f_finite(&g.f_arguments(n, z));
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_j_normalized, gamma as gamma_fn};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn lin(alpha: f64, w: f64) -> JacobiDescriptor {
        JacobiDescriptor::from_family(Family::LinearDiag { alpha, w }).unwrap()
    }

    #[test]
    fn gamma_products() {
        let d = lin(1.0, 0.7);
        assert_eq!(d.gamma(1), ONE);
        for k in 1..20 {
            let g = d.gamma(k);
            let expect = if k % 2 == 1 { 1.0 } else { 0.7 };
            assert_relative_eq!(g.re, expect, max_relative = 1e-15);
        }
        let q = JacobiDescriptor::from_family(Family::ZeroDiagQ { q: 0.6 }).unwrap();
        for k in 1..30 {
            let p = q.gamma(k) * q.gamma(k + 1);
            assert_relative_eq!(p.re, 0.6f64.powi(k as i32 - 1), max_relative = 1e-13);
        }
    }

    #[test]
    fn charfn_linear_closed_form() {
        // α=1, w=0.5, z=−1: F = Φ_{1}(0.5) = Γ(2) 0.5^{-1} J_1(1)
        let d = lin(1.0, 0.5);
        let (f, b) = charfn(&d, r(-1.0), 1e-13).unwrap();
        let oracle = bessel_j_normalized(1.0, r(0.5)).unwrap();
        assert!((f - oracle).norm() < 1e-12, "{f} vs {oracle}");
        assert!(b.residual <= 1e-13 * f.norm().max(1.0));
        let j1 = crate::specfun::bessel_j(1.0, 1.0).unwrap();
        assert_relative_eq!(f.re, gamma_fn(2.0).unwrap() * 2.0 * j1, max_relative = 1e-12);
    }

    #[test]
    fn charfn_tends_to_one() {
        let d = lin(1.0, 0.5);
        let f = charfn(&d, r(-1e3), 1e-12).unwrap().0;
        let oracle = bessel_j_normalized(1000.0, r(0.5)).unwrap();
        assert!((f - oracle).norm() < 1e-12);
        assert!((f - ONE).norm() < 0.25 / 1000.0);
        let tiny = lin(1.0, 1e-8);
        let f = charfn(&tiny, r(0.5), 1e-13).unwrap().0;
        assert!((f - ONE).norm() < 1e-14);
    }

    #[test]
    fn pole_detection() {
        let d = lin(1.0, 0.5);
        assert!(matches!(charfn(&d, r(3.0), 1e-10), Err(Error::PoleAt { index: 3, .. })));
        let h = JacobiDescriptor::from_family(Family::Harmonic { beta: 1.0 }).unwrap();
        assert!(matches!(charfn(&h, r(0.0), 1e-10), Err(Error::AccumulationPoint(_))));
    }

    #[test]
    fn regularized_matches_extrapolation() {
        let d = lin(1.0, 0.4);
        let reg = charfn_regularized(&d, r(1.0), 1e-13).unwrap();
        // oracle: (u−1)F(u) sampled on both sides, Richardson in h
        let g = |h: f64| {
            let a = r(h) * charfn(&d, r(1.0 + h), 1e-13).unwrap().0;
            let b = r(-h) * charfn(&d, r(1.0 - h), 1e-13).unwrap().0;
            0.5 * (a + b)
        };
        let (g1, g2) = (g(1e-4), g(1e-5));
        let ext = (100.0 * g2 - g1) / 99.0;
        assert!((reg - ext).norm() < 1e-8 * ext.norm().max(1.0), "{reg} vs {ext}");
        // no pole: equals charfn
        let plain = charfn(&d, r(0.3), 1e-13).unwrap().0;
        assert!((charfn_regularized(&d, r(0.3), 1e-13).unwrap() - plain).norm() < 1e-13);
    }

    #[test]
    fn regularized_double_pole() {
        // λ_n = (n − 3.5)²: λ_2 = λ_5 = 2.25
        let d = JacobiDescriptor::from_family(Family::CustomRational {
            lambda_num: vec![12.25, -7.0, 1.0],
            lambda_den: vec![1.0],
            w_num: vec![0.3],
            w_den: vec![1.0],
        })
        .unwrap();
        let z0 = 2.25;
        assert_eq!(d.multiplicity(r(z0), 1), (2, 5));
        let reg = charfn_regularized(&d, r(z0), 1e-13).unwrap();
        let g = |h: f64| {
            let a = r(h * h) * charfn(&d, r(z0 + h), 1e-13).unwrap().0;
            let b = r(h * h) * charfn(&d, r(z0 - h), 1e-13).unwrap().0;
            0.5 * (a + b)
        };
        let (g1, g2) = (g(1e-3), g(1e-4));
        let ext = (100.0 * g2 - g1) / 99.0;
        assert!((reg - ext).norm() < 1e-7 * ext.norm().max(1.0), "{reg} vs {ext}");
    }

    #[test]
    fn det_identity_small() {
        let g = GeneralJacobiDescriptor::new(
            SequenceSpec::real(|n| n as f64 * 0.7),
            SequenceSpec::real(|n| 1.0 + 0.1 * n as f64),
            SequenceSpec::real(|n| 0.5 - 0.2 * n as f64),
        );
        let z = r(0.37);
        let (l, rr) = det_truncation_identity(&g, 2, z);
        let hand = (r(0.7) - z) * (r(1.4) - z) - r(1.1) * r(0.3);
        assert!((l - hand).norm() < 1e-14);
        assert!((rr - hand).norm() < 1e-14);
        for n in 1..=12 {
            let (l, rr) = det_truncation_identity(&g, n, z);
            assert!((l - rr).norm() <= 1e-11 * l.norm().max(1e-300));
        }
    }

    #[test]
    fn check_convergence_examples() {
        // λ_n = n, w = 1, z0 = i; oracle: direct partial sums
        let d = lin(1.0, 1.0);
        let z0 = C64::new(0.0, 1.0);
        let (s, b) = check_convergence(&d, z0, 1e-12).unwrap();
        let mut direct = 0.0;
        for n in 1..2_000_000i64 {
            direct += 1.0 / ((r(n as f64) - z0).norm() * (r(n as f64 + 1.0) - z0).norm());
        }
        // remaining tail after 2e6 terms ≈ 1/2e6
        direct += 1.0 / 2e6;
        assert!((s - direct).abs() < 1e-11, "{s} vs {direct} ({b:?})");

        let h = JacobiDescriptor::from_family(Family::Harmonic { beta: 1.0 }).unwrap();
        assert!(check_convergence(&h, z0, 1e-10).is_ok());
        assert!(matches!(check_convergence(&d, r(2.0), 1e-10), Err(Error::InvalidZ0 { index: 2, .. })));

        // geometric weights, bounded diagonal, no closed model
        let g = JacobiDescriptor::custom(
            SequenceSpec::real(|n| (n as f64).sin()),
            SequenceSpec::real(|n| 0.5f64.powi(n as i32)),
            DerLambda::AllReal,
            true,
        )
        .unwrap();
        assert!(check_convergence(&g, C64::new(0.0, 5.0), 1e-12).is_ok());
        assert!(matches!(check_convergence(&g, r(5.0), 1e-12), Err(Error::InvalidZ0 { .. })));
    }

    #[test]
    fn json_round_trip() {
        let fams = vec![
            Family::LinearDiag { alpha: 1.0, w: 0.1 + 0.2 },
            Family::Harmonic { beta: std::f64::consts::PI },
            Family::Qgeom { q: 0.5, beta: 1.0 / 3.0 },
            Family::ZeroDiagHarm { alpha: 0.5 },
            Family::ZeroDiagQ { q: 0.3 },
            Family::CustomRational {
                lambda_num: vec![0.0, 2.0],
                lambda_den: vec![1.0],
                w_num: vec![1.5],
                w_den: vec![1.0],
            },
        ];
        for f in fams {
            let d = JacobiDescriptor::from_family(f.clone()).unwrap();
            let text = serde_json::to_string(&descriptor_to_json(&d).unwrap()).unwrap();
            let back = descriptor_from_json(&text).unwrap();
            assert_eq!(back.family(), Some(&f));
            assert_eq!(back.der_lambda(), d.der_lambda());
        }
        let d =
            descriptor_from_json(r#"{"family":"linear_diag","params":{"alpha":1,"w":0.5},"der_lambda":[]}"#).unwrap();
        assert_eq!(d.lambda_re(3), 3.0);
        assert!(matches!(descriptor_from_json("{nope"), Err(Error::Descriptor(_))));
        assert!(matches!(
            descriptor_from_json(r#"{"family":"linear_diag","params":{"alpha":1,"w":0.5},"der_lambda":[0]}"#),
            Err(Error::Descriptor(_))
        ));
        assert!(matches!(
            descriptor_from_json(r#"{"family":"qgeom","params":{"q":1.5,"beta":1}}"#),
            Err(Error::BadParams(_))
        ));
    }

    #[test]
    fn rational_tail_bound_is_rigorous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let z = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.1..2.0));
            for d in [
                lin(rng.gen_range(0.5..2.0), rng.gen_range(0.1..2.0)),
                JacobiDescriptor::from_family(Family::Harmonic { beta: rng.gen_range(0.1..2.0) }).unwrap(),
                JacobiDescriptor::from_family(Family::ZeroDiagHarm { alpha: rng.gen_range(-0.9..2.0) }).unwrap(),
            ] {
                let (b, _, _) = d.tail_model(z).unwrap().unwrap();
                for n in [1i64, 3, 10, 50] {
                    let direct: f64 = (n..n + 200_000).map(|k| d.pair(z, k).norm()).sum();
                    assert!(b(n) >= direct, "bound {} < partial sum {direct} at n={n}", b(n));
                }
            }
        }
    }
}
