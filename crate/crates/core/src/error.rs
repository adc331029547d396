use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Membership of the sequence in the domain of 𝔉 could not be certified.
    #[error("no tail bound: {0}")]
    NoTailBound(String),

    #[error("tolerance {tol:e} unreachable; best residual {best:e} at index {index}")]
    TolUnreachable { tol: f64, best: f64, index: usize },

    #[error("z = {z} coincides with diagonal entry lambda_{index}")]
    PoleAt { index: usize, z: Complex64 },

    #[error("z = {0} is a declared accumulation point of the diagonal")]
    AccumulationPoint(Complex64),

    #[error("convergence condition fails: {0}")]
    Diverges(String),

    #[error("z0 = {z0} is within tolerance of lambda_{index}")]
    InvalidZ0 { index: usize, z0: Complex64 },

    #[error("|F_J(z)| = {value:e} is below tolerance; Green function unreliable")]
    NearSpectrum { value: f64 },

    #[error("J_n - z is singular at z = {0}")]
    SingularAtZ(Complex64),

    #[error("window [{lo}, {hi}] touches an accumulation point of the diagonal")]
    WindowTouchesAccumulation { lo: f64, hi: f64 },

    #[error("no convergence certificate: {0}")]
    NoConvergenceCertificate(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("Gamma has a pole at {0}")]
    PoleOfGamma(f64),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("q-Pochhammer symbol vanishes at k = {0}")]
    PochhammerZero(usize),

    #[error("series did not converge within {0} terms")]
    SeriesLimit(usize),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("lost track of eigenvalue {s} at w = {w}")]
    LostTrack { s: usize, w: f64 },

    #[error("bound violated for s = {s} at w = {w}: {detail}")]
    BoundViolated { s: usize, w: f64, detail: String },

    #[error("descriptor: {0}")]
    Descriptor(String),
}
