//! Scheme parameters and the exact single-atom response.
//!
//! Rates and detunings are in units of Γ = Γ′ + Γ_1D, positions in units of
//! 1/k₀, and the drive wavevector equals the probe wavevector.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Block, Mat2, I};

/// Below this |cos(k₀z + φ)| an atom is treated as sitting exactly on a node.
/// Floating-point positions like π/2 never hit cos = 0, and a residual drive of
/// 1e-17 would otherwise open a spurious EIT window of width ~1e-34 around δ = 0.
pub const NODE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Lambda,
    DualV,
    DualColor,
}

impl Scheme {
    /// Guided modes per propagation direction in the discrete model.
    pub fn modes(self) -> usize {
        match self {
            Scheme::DualV => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lambda => "lambda",
            Scheme::DualV => "dual_v",
            Scheme::DualColor => "dual_color",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lambda" => Ok(Scheme::Lambda),
            "dual_v" | "dualv" => Ok(Scheme::DualV),
            "dual_color" | "dualcolor" => Ok(Scheme::DualColor),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeParams {
    pub gamma_1d: f64,
    pub gamma_prime: f64,
    pub delta_c: f64,
    pub omega0: f64,
    pub delta_d: f64,
    pub phi: f64,
    pub k0_over_n0: f64,
    pub scheme: Scheme,
}

impl Default for SchemeParams {
    /// The parameter set shared by all figures.
    fn default() -> Self {
        SchemeParams {
            gamma_1d: 0.1,
            gamma_prime: 0.9,
            delta_c: -90.0,
            omega0: 1.0,
            delta_d: 0.0,
            phi: 0.0,
            k0_over_n0: std::f64::consts::FRAC_PI_2,
            scheme: Scheme::Lambda,
        }
    }
}

impl SchemeParams {
    pub fn with_scheme(scheme: Scheme) -> Self {
        SchemeParams { scheme, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_1d,
            self.gamma_prime,
            self.delta_c,
            self.omega0,
            self.delta_d,
            self.phi,
            self.k0_over_n0,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("scheme parameters must be finite".into()));
        }
        if !(self.gamma_1d > 0.0) {
            return Err(Error::Config(format!("gamma_1d must be > 0, got {}", self.gamma_1d)));
        }
        if self.gamma_prime < 0.0 || self.omega0 < 0.0 || self.delta_d < 0.0 {
            return Err(Error::Config("gamma_prime, omega0 and delta_d must be >= 0".into()));
        }
        if !(self.k0_over_n0 > 0.0) {
            return Err(Error::Config(format!("k0_over_n0 must be > 0, got {}", self.k0_over_n0)));
        }
        Ok(())
    }

    /// Δ̃ = Δ_c + δ + iΓ′/2.
    pub fn delta_tilde(&self, delta: C64) -> C64 {
        C64::new(self.delta_c, self.gamma_prime / 2.0) + delta
    }

    /// |Ω(z)|² for the standing-wave drive Ω₀cos(k₀z + φ), exactly zero at nodes.
    pub fn drive_intensity(&self, z: f64) -> f64 {
        let c = (z + self.phi).cos();
        if c.abs() < NODE_TOL {
            0.0
        } else {
            (self.omega0 * c).powi(2)
        }
    }
}

/// δ, Δ̃ and δ_S evaluated together so they can never disagree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detunings {
    pub delta: C64,
    pub delta_tilde: C64,
    pub delta_s: C64,
}

impl Detunings {
    pub fn new(params: &SchemeParams, delta: C64) -> Result<Self> {
        Ok(Detunings {
            delta,
            delta_tilde: params.delta_tilde(delta),
            delta_s: stark_shift(params, delta)?,
        })
    }
}

/// AC Stark shift δ_S = |Ω₀|²/(2Δ̃).
pub fn stark_shift(params: &SchemeParams, delta: C64) -> Result<C64> {
    let dt = params.delta_tilde(delta);
    if dt == C64::new(0.0, 0.0) {
        return Err(Error::singular("delta_tilde vanishes", delta));
    }
    Ok(params.omega0 * params.omega0 / (2.0 * dt))
}

/// Single-atom scattering data: reflection and transmission blocks and β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterBlocks<B> {
    pub s_r: B,
    pub s_t: B,
    pub beta: B,
}

/// β = i(Γ_1D/2)δ / (Δ̃δ − |Ω(z)|²) for a Λ atom at position z.
///
/// On a node the atom is a plain two-level scatterer and the δ cancels, which
/// matters at δ = 0 where the general expression would read 0/0.
pub fn lambda_beta(params: &SchemeParams, z: f64, delta: C64) -> Result<C64> {
    let dt = params.delta_tilde(delta);
    let half_g = params.gamma_1d / 2.0;
    let intensity = params.drive_intensity(z);
    if intensity == 0.0 {
        if dt == C64::new(0.0, 0.0) {
            return Err(Error::singular(format!("two-level pole for atom at k0*z = {z}"), delta));
        }
        return Ok(I * half_g / dt);
    }
    let den = dt * delta - intensity;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::singular(format!("dark-state pole for atom at k0*z = {z}"), delta));
    }
    Ok(I * half_g * delta / den)
}

pub fn lambda_scattering(params: &SchemeParams, z: f64, delta: C64) -> Result<ScatterBlocks<C64>> {
    let beta = lambda_beta(params, z, delta)?;
    let (s_r, s_t) = beta_to_rt(beta)?;
    Ok(ScatterBlocks { s_r, s_t, beta })
}

/// (r, t) from β: t = (1 + β)⁻¹, r = −(1 + β)⁻¹β.
pub fn beta_to_rt<B: Block>(beta: B) -> Result<(B, B)> {
    let t = (B::IDENTITY + beta)
        .inverse()
        .ok_or_else(|| Error::Singularity { what: "identity + beta is singular".into(), delta: None })?;
    Ok((-(t * beta), t))
}

/// Dual-V atom with equal drives Ω₊ = Ω₋ = Ω₀/2 and equal excited-state
/// splittings. Blocks are indexed (output mode, input mode) with σ₊ first.
pub fn dualv_scattering(params: &SchemeParams, z: f64, delta: C64) -> Result<ScatterBlocks<Mat2>> {
    let om_p = C64::new(params.omega0 / 2.0, 0.0);
    let om_m = om_p;
    let (ip, im) = (om_p.norm_sqr(), om_m.norm_sqr());
    // Total detunings include the decay into the guided modes.
    let d_tot = C64::new(params.delta_c, (params.gamma_prime + params.gamma_1d) / 2.0) + delta;
    let (d_p, d_m) = (d_tot, d_tot);
    let den = d_p * d_m * delta - d_p * im - d_m * ip;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::singular(format!("dual-V pole for atom at k0*z = {z}"), delta));
    }
    let g = -I * (params.gamma_1d / 2.0) / den;
    let phase = C64::from_polar(1.0, -2.0 * (z + params.phi));
    let r_pp = g * (d_m * delta - im);
    let r_mm = g * (d_p * delta - ip);
    let r_pm = g * om_m * om_p.conj() * phase;
    let r_mp = g * om_p * om_m.conj() * phase.conj();
    let s_r = Mat2::new(r_pp, r_mp, r_pm, r_mm);
    let s_t = Mat2::IDENTITY + s_r;
    let beta = dualv_beta(&s_r, &s_t)?;
    Ok(ScatterBlocks { s_r, s_t, beta })
}

/// β = −S_t⁻¹S_r.
pub fn dualv_beta(s_r: &Mat2, s_t: &Mat2) -> Result<Mat2> {
    let inv = s_t
        .inverse()
        .ok_or_else(|| Error::Singularity { what: "transmission block is singular".into(), delta: None })?;
    Ok(-(inv * *s_r))
}

/// Two-level β = Γ_1D/(Γ′ − 2iΔ) with Δ = Δ_c + δ.
pub fn two_level_beta(params: &SchemeParams, delta: C64) -> C64 {
    let big_delta = params.delta_c + delta;
    params.gamma_1d / (params.gamma_prime - 2.0 * I * big_delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fig() -> SchemeParams {
        SchemeParams::default()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn stark_shift_at_figure_parameters() {
        let ds = stark_shift(&fig(), re(0.0)).unwrap();
        // 1/(2(−90 + 0.45i)) evaluated by hand.
        let expect = C64::new(-90.0, -0.45) / (2.0 * (8100.0 + 0.2025));
        assert!((ds - expect).norm() < 1e-15);
        assert!((ds.re + 5.5554e-3).abs() < 1e-7 && (ds.im + 2.778e-5).abs() < 1e-8);
    }

    #[test]
    fn stark_shift_limits() {
        let p = SchemeParams { omega0: 0.0, ..fig() };
        assert_eq!(stark_shift(&p, re(0.0)).unwrap(), re(0.0));
        let far = SchemeParams { delta_c: -1e12, ..fig() };
        assert!(stark_shift(&far, re(0.0)).unwrap().norm() < 1e-12);
        let pole = SchemeParams { delta_c: 0.0, gamma_prime: 0.0, ..fig() };
        assert!(matches!(stark_shift(&pole, re(0.0)), Err(Error::Singularity { .. })));
    }

    #[test]
    fn driven_atom_is_transparent_at_two_photon_resonance() {
        assert_eq!(lambda_beta(&fig(), 0.0, re(0.0)).unwrap(), re(0.0));
    }

    #[test]
    fn node_atom_is_two_level() {
        let b = lambda_beta(&fig(), FRAC_PI_2, re(0.0)).unwrap();
        assert!((b - C64::new(2.78e-6, -5.5554e-4)).norm() < 1e-8);
        assert!((b - two_level_beta(&fig(), re(0.0))).norm() < 1e-18);
    }

    #[test]
    fn antinode_beta_matches_reflection_ratio() {
        // r and t of a Λ atom, written independently of β.
        let p = fig();
        let d = re(1e-3);
        let dt = p.delta_tilde(d);
        let om2 = p.omega0 * p.omega0;
        let den = (dt + I * p.gamma_1d / 2.0) * d - om2;
        let r = -I * (p.gamma_1d / 2.0) * d / den;
        let t = (dt * d - om2) / den;
        let b = lambda_beta(&p, 0.0, d).unwrap();
        assert!((b + r / t).norm() < 1e-15 * b.norm().max(1e-3));
        let (r2, t2) = beta_to_rt(b).unwrap();
        assert!((r2 - r).norm() < 1e-14 && (t2 - t).norm() < 1e-14);
    }

    #[test]
    fn beta_to_rt_examples() {
        assert_eq!(beta_to_rt(re(0.0)).unwrap(), (re(0.0), re(1.0)));
        let (r, t) = beta_to_rt(re(1.0)).unwrap();
        assert!((r + 0.5).norm() < 1e-15 && (t - 0.5).norm() < 1e-15);
        let b = lambda_beta(&fig(), FRAC_PI_2, re(0.0)).unwrap();
        let (r, _) = beta_to_rt(b).unwrap();
        assert!((r.norm_sqr() - 3.09e-7).abs() < 0.01e-7);
        assert!(beta_to_rt(re(-1.0)).is_err());
    }

    #[test]
    fn dark_state_pole_is_reported() {
        let p = SchemeParams { gamma_prime: 0.0, delta_c: 0.0, omega0: 1.0, ..fig() };
        // Δ̃δ = δ² = |Ω|² at δ = 1 for an antinode atom.
        assert!(matches!(lambda_beta(&p, 0.0, re(1.0)), Err(Error::Singularity { .. })));
    }

    #[test]
    fn dualv_without_drive_decouples() {
        let p = SchemeParams { omega0: 0.0, ..SchemeParams::with_scheme(Scheme::DualV) };
        let d = re(1e-3);
        let s = dualv_scattering(&p, 0.3, d).unwrap();
        assert_eq!(s.s_r.0[0][1], re(0.0));
        assert_eq!(s.s_r.0[1][0], re(0.0));
        // Two-level reflection with the full Γ_1D + Γ′ linewidth.
        let two = -I * (p.gamma_1d / 2.0) / C64::new(p.delta_c + 1e-3, 0.5);
        assert!((s.s_r.0[0][0] - two).norm() < 1e-15);
        assert!((s.s_r.0[1][1] - two).norm() < 1e-15);
    }

    #[test]
    fn dualv_reflects_at_two_photon_resonance() {
        let p = SchemeParams::with_scheme(Scheme::DualV);
        let s = dualv_scattering(&p, 0.0, re(0.0)).unwrap();
        let (ip, im) = (0.25, 0.25);
        let d = C64::new(p.delta_c, 0.5);
        let expect = -I * 0.05 * (-im) / (-d * im - d * ip);
        assert!((s.s_r.0[0][0] - expect).norm() < 1e-15);
        assert!(s.s_r.0[0][0].norm() > 1e-4);
    }

    #[test]
    fn dualv_blocks_symmetric_where_phase_is_real() {
        let p = SchemeParams::with_scheme(Scheme::DualV);
        let s = dualv_scattering(&p, 0.0, re(1e-3)).unwrap();
        assert_eq!(s.s_r.0[0][1], s.s_r.0[1][0]);
        assert!((s.beta.0[0][1] - s.beta.0[1][0]).norm() < 1e-12);
        let s = dualv_scattering(&p, FRAC_PI_2, re(1e-3)).unwrap();
        assert!((s.beta.0[0][1] - s.beta.0[1][0]).norm() < 1e-12);
        // At a generic position the cross terms carry opposite phases.
        let s = dualv_scattering(&p, 0.3, re(1e-3)).unwrap();
        assert!((s.s_r.0[0][1] - s.s_r.0[1][0]).norm() > 1e-6);
        let shifted = dualv_scattering(&p, 0.3 + PI, re(1e-3)).unwrap();
        assert!((shifted.s_r - s.s_r).max_abs() < 1e-12);
    }

    #[test]
    fn dualv_beta_examples() {
        assert_eq!(dualv_beta(&Mat2::ZERO, &Mat2::IDENTITY).unwrap(), Mat2::ZERO);
        let rho = C64::new(0.2, -0.1);
        let sr = Mat2::diag(rho, rho);
        let b = dualv_beta(&sr, &(Mat2::IDENTITY + sr)).unwrap();
        let expect = -rho / (1.0 + rho);
        assert!((b - Mat2::diag(expect, expect)).max_abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(fig().validate().is_ok());
        assert!(SchemeParams { gamma_1d: 0.0, ..fig() }.validate().is_err());
        assert!(SchemeParams { omega0: -1.0, ..fig() }.validate().is_err());
        assert!(SchemeParams { k0_over_n0: 0.0, ..fig() }.validate().is_err());
        assert!(SchemeParams { delta_c: f64::NAN, ..fig() }.validate().is_err());
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("dual-v".parse::<Scheme>().unwrap(), Scheme::DualV);
        assert_eq!("lambda".parse::<Scheme>().unwrap(), Scheme::Lambda);
        assert!("sigma".parse::<Scheme>().is_err());
    }
}
