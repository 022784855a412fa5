//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array` of interleaved columns so the
//! page can plot without any JSON round trip. The plain-Rust versions are
//! public too, which keeps them testable off the browser.

use num_complex::Complex64 as C64;
use sld_core::continuum::{continuum_q, ContinuumModel};
use sld_core::discrete::{regular_positions, sweep_dispersion};
use sld_core::numerics::{linspace, logspace};
use sld_core::scattering::{spectrum, PlacementSpec, SpectrumSpec};
use sld_core::schemes::{Scheme, SchemeParams};
use wasm_bindgen::prelude::*;

fn params(omega0: f64, delta_c: f64) -> Result<SchemeParams, String> {
    let p = SchemeParams { omega0, delta_c, ..SchemeParams::default() };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err("need 0 < min < max and at least two points".into());
    }
    Ok(logspace(lo, hi, points))
}

/// `[δ, Re q/n₀, …]` for `model` in eit | dualv | lambda.
pub fn continuum(model: &str, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let (m, scheme) = match model {
        "eit" => (ContinuumModel::Eit, Scheme::Lambda),
        "dualv" => (ContinuumModel::DualVQuadratic, Scheme::DualV),
        "lambda" => (ContinuumModel::LambdaInfinite, Scheme::Lambda),
        other => return Err(format!("unknown model '{other}'")),
    };
    let p = SchemeParams { scheme, ..params(omega0, delta_c)? };
    let mut out = Vec::with_capacity(2 * points);
    for d in log_grid(lo, hi, points)? {
        let pair = continuum_q(&p, m, C64::new(d, 0.0), 25).map_err(|e| e.to_string())?;
        out.extend([d, pair[0].q_over_n0.re.abs()]);
    }
    Ok(out)
}

/// `[δ, Re q/n₀, …]` for a regular Λ lattice of `n_u` atoms per period.
pub fn lattice(n_u: usize, shifted: bool, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let mut p = params(omega0, delta_c)?;
    if shifted {
        p.phi = std::f64::consts::PI / (2.0 * n_u as f64);
    }
    let cell = regular_positions(n_u).map_err(|e| e.to_string())?;
    let curve = sweep_dispersion(&p, &cell, &log_grid(lo, hi, points)?).map_err(|e| e.to_string())?;
    Ok(curve.band(0).iter().flat_map(|pt| [pt.delta.re, pt.q_over_n0.re.abs()]).collect())
}

/// `[δ, |t|², |r|², …]` for a regular N_u = 2 Λ ensemble of `n_total` atoms.
pub fn mirror(n_total: usize, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(hi > lo && points >= 2) {
        return Err("need min < max and at least two points".into());
    }
    let spec = SpectrumSpec {
        placement: PlacementSpec::Regular { atoms_per_cell: 2 },
        n_total: n_total - n_total % 2,
        realizations: 1,
        ..SpectrumSpec::default()
    };
    let stats = spectrum(&params(omega0, delta_c)?, &spec, &linspace(lo, hi, points)).map_err(|e| e.to_string())?;
    Ok(stats.iter().flat_map(|s| [s.delta, s.t_mean, s.r_mean]).collect())
}

#[wasm_bindgen]
pub fn continuum_curve(model: &str, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    continuum(model, omega0, delta_c, lo, hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lattice_curve(n_u: usize, shifted: bool, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    lattice(n_u, shifted, omega0, delta_c, lo, hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mirror_spectrum(n_total: usize, omega0: f64, delta_c: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    mirror(n_total, omega0, delta_c, lo, hi, points).map_err(|e| JsError::new(&e))
}
