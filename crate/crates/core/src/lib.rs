#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Characteristic functions, point spectra and Green functions of infinite
//! Jacobi matrices, built on the functional 𝔉.

pub mod error;
pub mod examples;
pub mod ffun;
pub mod jacobi;
pub mod linalg;
pub mod specfun;
pub mod spectral;
pub mod truncation;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
