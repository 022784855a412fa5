//! Randomized invariant checks shared by the proptest suite and the
//! acceptance runner. A draw maps eight unit-interval numbers onto physical
//! parameters, so both front ends sample the same space.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use sld_core::discrete::{bloch_q, cell_t, random_positions, Placement};
use sld_core::numerics::{reciprocal_log_eigenvalues, ScaledMatrix};
use sld_core::scattering::{placement_s, Response};
use sld_core::schemes::{dualv_scattering, lambda_beta, Scheme, SchemeParams};

#[derive(Clone, Debug)]
pub struct Draw {
    pub params: SchemeParams,
    pub placement: Placement,
    pub delta: f64,
    pub z: f64,
}

impl Draw {
    pub fn from_unit(u: [f64; 8], scheme: Scheme) -> Draw {
        let gamma_1d = 0.01 + 0.49 * u[0];
        let params = SchemeParams {
            gamma_1d,
            gamma_prime: 1.0 - gamma_1d,
            delta_c: -100.0 + 200.0 * u[1],
            omega0: 0.1 + 2.9 * u[2],
            phi: PI * u[3],
            scheme,
            ..SchemeParams::default()
        };
        let n_atoms = 1 + (u[4] * 40.0) as usize;
        let n_periods = 1 + (u[5] * 20.0) as u64;
        let placement = random_positions(n_atoms, n_periods, (u[6] * 1e6) as u64).expect("valid placement");
        Draw { params, placement, delta: -0.05 + 0.1 * u[7], z: 2.0 * PI * u[6] }
    }

    pub fn delta_c(&self) -> C64 {
        C64::new(self.delta, 0.0)
    }
}

fn dense(m: &ScaledMatrix) -> DMatrix<C64> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m.matrix[(i, j)])
}

/// det T = 1, evaluated by an LU factorization independent of the library's own determinant.
pub fn check_determinant(d: &Draw) -> Result<(), String> {
    let cell = cell_t(&d.params, &d.placement, d.delta_c()).map_err(|e| e.to_string())?;
    let log_det = dense(&cell).determinant().ln() + cell.dim() as f64 * cell.log_scale;
    let res = (log_det.exp() - 1.0).norm();
    let floor = 64.0 * f64::EPSILON * (cell.dim() as f64 * cell.log_scale).exp();
    if res <= 1e-6 + floor {
        Ok(())
    } else {
        Err(format!("det residual {res:e}"))
    }
}

/// Every reported λ and its reciprocal are roots of det(T − λI).
pub fn check_reciprocal_pairs(d: &Draw) -> Result<(), String> {
    let cell = cell_t(&d.params, &d.placement, d.delta_c()).map_err(|e| e.to_string())?;
    let logs = reciprocal_log_eigenvalues(&cell).map_err(|e| e.to_string())?;
    let m = dense(&cell);
    let dim = cell.dim();
    let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for l in logs {
        for log_lambda in [l, -l] {
            // Eigenvalue of the stored (scaled) matrix.
            let mu = (log_lambda - cell.log_scale).exp();
            let shifted = &m - DMatrix::<C64>::identity(dim, dim) * mu;
            let res = shifted.determinant().norm();
            let scale = (norm + mu.norm()).powi(dim as i32);
            if !(res <= 1e-9 * scale) {
                return Err(format!("det(T - lambda I) = {res:e} for log lambda = {log_lambda}"));
            }
        }
    }
    let q = bloch_q(&cell, d.placement.atom_count(), d.placement.n_periods, d.delta_c()).map_err(|e| e.to_string())?;
    for pair in q {
        if pair[0].q_over_n0.im < -1e-12 {
            return Err(format!("first Bloch vector is not decaying: {}", pair[0].q_over_n0));
        }
    }
    Ok(())
}

/// Σ|t|² + Σ|r|² ≤ 1 per input mode for a lossy (Γ′ ≥ 0) ensemble.
pub fn check_passivity(d: &Draw) -> Result<(), String> {
    let resp = placement_s(&d.params, &d.placement, d.delta_c()).map_err(|e| e.to_string())?;
    for input in 0..resp.modes() {
        let p = resp.out_power(input);
        if !(p <= 1.0 + 1e-9) {
            return Err(format!("output power {p} for input mode {input}"));
        }
    }
    Ok(())
}

/// Single-mode ensembles transmit equally in both directions.
pub fn check_reciprocity(d: &Draw) -> Result<(), String> {
    let params = SchemeParams { scheme: Scheme::Lambda, ..d.params };
    let Response::Scalar(s) = placement_s(&params, &d.placement, d.delta_c()).map_err(|e| e.to_string())? else {
        return Err("lambda ensemble gave a two-mode response".into());
    };
    let res = (s.t_lr - s.t_rl).norm();
    if res <= 1e-9 * s.t_lr.norm().max(f64::MIN_POSITIVE) {
        Ok(())
    } else {
        Err(format!("t_lr = {} but t_rl = {}", s.t_lr, s.t_rl))
    }
}

/// Single-atom response is unchanged by z → z + π/k₀.
pub fn check_shift_invariance(d: &Draw) -> Result<(), String> {
    let (z, delta) = (d.z, d.delta_c());
    match d.params.scheme {
        Scheme::DualV => {
            let a = dualv_scattering(&d.params, z, delta).map_err(|e| e.to_string())?;
            let b = dualv_scattering(&d.params, z + PI, delta).map_err(|e| e.to_string())?;
            let diff = (a.s_r - b.s_r).max_abs().max((a.beta - b.beta).max_abs());
            if diff <= 1e-12 * (1.0 + a.beta.max_abs()) {
                Ok(())
            } else {
                Err(format!("dual-V blocks moved by {diff:e}"))
            }
        }
        _ => {
            let a = lambda_beta(&d.params, z, delta).map_err(|e| e.to_string())?;
            let b = lambda_beta(&d.params, z + PI, delta).map_err(|e| e.to_string())?;
            if (a - b).norm() <= 1e-12 * (1.0 + a.norm()) {
                Ok(())
            } else {
                Err(format!("beta moved from {a} to {b}"))
            }
        }
    }
}
