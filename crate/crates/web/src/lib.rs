//! Browser bindings for the demo page in `www/`. Each export has a plain
//! Rust counterpart returning `Result<String, String>`, which the native
//! tests call directly.

use charspec::examples::{lambda_curve, uniform_grid, CurveTable, CURVE_TOL};
use charspec::jacobi::{charfn, descriptor_from_json};
use charspec::spectral::find_real_zeros;
use charspec::truncation::truncated_spectrum_in;
use charspec::C64;
use serde_json::json;
use wasm_bindgen::prelude::*;

const ZERO_TOL: f64 = 1e-10;
const EVAL_TOL: f64 = 1e-12;
const MAX_POINTS: usize = 20_000;

/// CSV of λ_1..λ_{s_max} for the linear-diagonal family on `[0, w_max]`.
pub fn curves_csv(s_max: usize, w_max: f64, step: f64) -> Result<String, String> {
    if s_max == 0 || s_max > 12 {
        return Err("s_max must be between 1 and 12".into());
    }
    let grid = uniform_grid(w_max, step).map_err(|e| e.to_string())?;
    if grid.len() * s_max > MAX_POINTS {
        return Err(format!("grid too fine: {} points", grid.len() * s_max));
    }
    let lambdas = (1..=s_max)
        .map(|s| lambda_curve(s, &grid, CURVE_TOL).map(|c| c.samples.into_iter().map(|p| p.1).collect()))
        .collect::<charspec::Result<Vec<Vec<f64>>>>()
        .map_err(|e| e.to_string())?;
    Ok(CurveTable { w: grid, lambdas, w_max, step }.to_csv())
}

/// Zeros of F_J in `[a, b]` next to the eigenvalues of J_n there.
pub fn spectrum_json(descriptor: &str, a: f64, b: f64, n: usize) -> Result<String, String> {
    if !(1..=2000).contains(&n) {
        return Err("truncation order must be between 1 and 2000".into());
    }
    let desc = descriptor_from_json(descriptor).map_err(|e| e.to_string())?;
    let zeros = find_real_zeros(&desc, (a, b), ZERO_TOL).map_err(|e| e.to_string())?;
    let eig = truncated_spectrum_in(&desc, n, a, b, 1e-13).map_err(|e| e.to_string())?;
    let zs: Vec<f64> = zeros.iter().map(|z| z.z).collect();
    Ok(json!({ "zeros": zs, "truncation": { "n": n, "eigenvalues": eig } }).to_string())
}

/// F_J(z) with its truncation residual.
pub fn charfn_json(descriptor: &str, re: f64, im: f64) -> Result<String, String> {
    let desc = descriptor_from_json(descriptor).map_err(|e| e.to_string())?;
    let (v, tb) = charfn(&desc, C64::new(re, im), EVAL_TOL).map_err(|e| e.to_string())?;
    Ok(json!({ "re": v.re, "im": v.im, "residual": tb.residual, "certified": tb.certified }).to_string())
}

#[wasm_bindgen]
pub fn curves(s_max: usize, w_max: f64, step: f64) -> Result<String, JsError> {
    curves_csv(s_max, w_max, step).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(descriptor: &str, a: f64, b: f64, n: usize) -> Result<String, JsError> {
    spectrum_json(descriptor, a, b, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn characteristic(descriptor: &str, re: f64, im: f64) -> Result<String, JsError> {
    charfn_json(descriptor, re, im).map_err(|e| JsError::new(&e))
}
