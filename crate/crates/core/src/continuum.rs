//! Continuum-model dispersion relations.
//!
//! Closed forms return both roots ±q; the first element of every pair is the
//! root with Re q ≥ 0. The Fourier-truncation solver handles Λ-type at any
//! order and the dual-color scheme (shifted diagonals).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fourier_coefficient_quadrature, ONE, ZERO};
use crate::schemes::{stark_shift, Scheme, SchemeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
    /// Band index for multi-band discrete cells.
    Band(usize),
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Plus => write!(f, "plus"),
            Branch::Minus => write!(f, "minus"),
            Branch::Band(b) => write!(f, "band{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionPoint {
    pub delta: C64,
    pub q_over_n0: C64,
    pub branch: Branch,
}

/// Order ±q so the root with non-negative real part (then imaginary part) is first.
pub fn signed_pair(delta: C64, q: C64) -> [DispersionPoint; 2] {
    let flip = q.re < 0.0 || (q.re == 0.0 && q.im < 0.0);
    let q = if flip { -q } else { q };
    [
        DispersionPoint { delta, q_over_n0: q, branch: Branch::Plus },
        DispersionPoint { delta, q_over_n0: -q, branch: Branch::Minus },
    ]
}

/// Γ_1D/(2Δ̃), the common prefactor of every continuum relation.
fn coupling(params: &SchemeParams, delta: C64) -> Result<C64> {
    let dt = params.delta_tilde(delta);
    if dt == ZERO {
        return Err(Error::singular("delta_tilde vanishes", delta));
    }
    Ok(params.gamma_1d / (2.0 * dt))
}

fn nonzero(den: C64, what: &str, delta: C64) -> Result<C64> {
    if den == ZERO {
        Err(Error::singular(what, delta))
    } else {
        Ok(den)
    }
}

/// Coefficients of the generic 2×2 coupled-field matrix [[α₁ + q, α₂], [α₂, α₁ − q]].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaPair {
    pub alpha1: C64,
    pub alpha2: C64,
}

impl AlphaPair {
    pub fn q_pair(&self, delta: C64) -> [DispersionPoint; 2] {
        signed_pair(delta, (self.alpha1 * self.alpha1 - self.alpha2 * self.alpha2).sqrt())
    }

    /// det [[α₁ + q, α₂], [α₂, α₁ − q]].
    pub fn residual(&self, q: C64) -> C64 {
        (self.alpha1 + q) * (self.alpha1 - q) - self.alpha2 * self.alpha2
    }
}

/// Secular (dual-V) coefficients.
pub fn secular_alpha(params: &SchemeParams, delta: C64) -> Result<AlphaPair> {
    let k = coupling(params, delta)?;
    let ds = stark_shift(params, delta)?;
    let den = nonzero(delta - ds, "delta equals the Stark shift", delta)?;
    Ok(AlphaPair { alpha1: k * (delta - ds / 2.0) / den, alpha2: k * (ds / 2.0) / den })
}

/// Infinite-order Λ coefficients α₁ = κγ⁽⁰⁾, α₂ = κγ⁽¹⁾.
pub fn infinite_alpha(params: &SchemeParams, delta: C64) -> Result<AlphaPair> {
    let k = coupling(params, delta)?;
    let x = 2.0 * stark_shift(params, delta)? / nonzero(delta, "delta = 0", delta)?;
    let (g0, g1) = lambda_gamma_coeffs(x)?;
    Ok(AlphaPair { alpha1: k * g0, alpha2: k * g1 })
}

/// EIT: q/n₀ = ±(Γ_1D/2Δ̃)·δ/(δ − 2δ_S).
pub fn eit_q(params: &SchemeParams, delta: C64) -> Result<[DispersionPoint; 2]> {
    let k = coupling(params, delta)?;
    let ds = stark_shift(params, delta)?;
    let den = nonzero(delta - 2.0 * ds, "EIT pole at delta = 2 delta_S", delta)?;
    Ok(signed_pair(delta, k * delta / den))
}

/// Dual-V quadratic band: (q/n₀)² = (Γ_1D/2Δ̃)²·δ/(δ − δ_S).
pub fn dualv_q_quadratic(params: &SchemeParams, delta: C64) -> Result<[DispersionPoint; 2]> {
    let k = coupling(params, delta)?;
    let ds = stark_shift(params, delta)?;
    let den = nonzero(delta - ds, "dual-V pole at delta = delta_S", delta)?;
    Ok(signed_pair(delta, k * (delta / den).sqrt()))
}

/// Dual-V linear band: q/n₀ = ±(Γ_1D/2Δ̃)(δ − δ_S/2)/(δ − δ_S).
pub fn dualv_q_linear(params: &SchemeParams, delta: C64) -> Result<[DispersionPoint; 2]> {
    let k = coupling(params, delta)?;
    let ds = stark_shift(params, delta)?;
    let den = nonzero(delta - ds, "dual-V pole at delta = delta_S", delta)?;
    Ok(signed_pair(delta, k * (delta - ds / 2.0) / den))
}

/// Effective mass of the quadratic dual-V band, δ ≈ (q/n₀)²/(2m).
pub fn dualv_mass(params: &SchemeParams) -> Result<C64> {
    if params.omega0 == 0.0 {
        return Err(Error::Domain("effective mass needs a nonzero drive".into()));
    }
    let g = params.gamma_1d;
    Ok(-g * g / (4.0 * C64::new(params.delta_c, params.gamma_prime / 2.0) * params.omega0.powi(2)))
}

/// γ⁽⁰⁾ and γ⁽±1⁾, the zeroth and first Fourier coefficients of
/// 1/(1 − x cos²k₀z), with x = 2δ_S/δ.
///
/// γ⁽¹⁾ is evaluated as x/(s(1+s)²), s = √(1−x), which is algebraically the
/// same as the textbook ratio but has no cancellation as x → 0.
pub fn lambda_gamma_coeffs(x: C64) -> Result<(C64, C64)> {
    if !x.is_finite() {
        return Err(Error::Pole(format!("non-finite argument x = {x}")));
    }
    if x.im == 0.0 && x.re >= 1.0 {
        return Err(Error::Pole(format!("x = {} lies on the branch cut [1, inf)", x.re)));
    }
    let s = (ONE - x).sqrt();
    Ok((s.inv(), x / (s * (ONE + s) * (ONE + s))))
}

/// The integrand whose Fourier coefficients are γ⁽ℓ⁾.
pub fn gamma_profile(x: C64) -> impl Fn(f64) -> C64 {
    move |z: f64| ONE / (ONE - x * z.cos().powi(2))
}

/// γ⁽ℓ⁾ by quadrature, for any ℓ.
pub fn lambda_gamma_quadrature(x: C64, l: i64) -> Result<C64> {
    fourier_coefficient_quadrature(gamma_profile(x), l)
}

/// Infinite-order Λ band:
/// (q/n₀)² = (Γ_1D/2Δ̃)²·4(√(1−x) − 1)²/(√(1−x)·x²), written as 4κ²/(s(1+s)²).
pub fn lambda_infinite_q(params: &SchemeParams, delta: C64) -> Result<[DispersionPoint; 2]> {
    let k = coupling(params, delta)?;
    if delta == ZERO {
        return Ok(signed_pair(delta, ZERO));
    }
    let x = 2.0 * stark_shift(params, delta)? / delta;
    lambda_gamma_coeffs(x)?;
    let s = (ONE - x).sqrt();
    let q2 = 4.0 * k * k / (s * (ONE + s) * (ONE + s));
    Ok(signed_pair(delta, q2.sqrt()))
}

/// Small-q inversion δ ≈ c^{1/3}|Ω₀|²|q/n₀|^{4/3}/Γ_1D^{4/3}, c = −Δ_c − iΓ′/2.
/// Of the three cube roots, the one whose real part has the sign of −Δ_c and
/// which lies closest to the real axis is used.
pub fn lambda_43_delta(params: &SchemeParams, q_over_n0: f64) -> Result<C64> {
    if params.delta_c == 0.0 {
        return Err(Error::Domain("the 4/3 law needs delta_c != 0".into()));
    }
    let c = C64::new(-params.delta_c, -params.gamma_prime / 2.0);
    let sign = (-params.delta_c).signum();
    let principal = c.cbrt();
    let root = (0..3)
        .map(|k| principal * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0))
        .filter(|r| r.re * sign > 0.0)
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .ok_or_else(|| Error::Domain("no cube root with the required sign".into()))?;
    Ok(root * params.omega0.powi(2) * q_over_n0.abs().powf(4.0 / 3.0) / params.gamma_1d.powf(4.0 / 3.0))
}

/// Tridiagonal Fourier-truncation system (rows k = n, n−1, …, −n).
///
/// Odd k are σ_ab^(k) rows with diagonal Δ̃ − kΔ_d; even k are σ_ac^(k) rows
/// with diagonal δ − kΔ_d. Neighbouring rows couple through Ω₀/2 (σ_ab rows)
/// or Ω₀*/2 (σ_ac rows).
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationSystem {
    pub order: usize,
    pub scheme: Scheme,
    pub delta_d: f64,
    pub delta: C64,
    pub gamma_1d: f64,
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
}

impl TruncationSystem {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Fourier index of row r.
    pub fn index_of_row(&self, r: usize) -> i64 {
        self.order as i64 - r as i64
    }

    pub fn row_of_index(&self, k: i64) -> usize {
        (self.order as i64 - k) as usize
    }

    /// Dense copy, for inspection and tests.
    pub fn dense(&self) -> Vec<Vec<C64>> {
        let n = self.size();
        let mut m = vec![vec![ZERO; n]; n];
        for r in 0..n {
            m[r][r] = self.diag[r];
            if r > 0 {
                m[r][r - 1] = self.sub[r - 1];
            }
            if r + 1 < n {
                m[r][r + 1] = self.sup[r];
            }
        }
        m
    }
}

pub fn build_truncation(params: &SchemeParams, delta: C64, order: usize, scheme: Scheme) -> Result<TruncationSystem> {
    if order == 0 {
        return Err(Error::Config("truncation order must be >= 1".into()));
    }
    if scheme == Scheme::DualV {
        return Err(Error::Config("the truncation solver covers lambda and dual_color only".into()));
    }
    let delta_d = if scheme == Scheme::DualColor { params.delta_d } else { 0.0 };
    let dt = params.delta_tilde(delta);
    let om = C64::new(params.omega0, 0.0);
    let size = 2 * order + 1;
    let mut diag = Vec::with_capacity(size);
    let mut sub = Vec::with_capacity(size - 1);
    let mut sup = Vec::with_capacity(size - 1);
    for r in 0..size {
        let k = order as i64 - r as i64;
        let odd = k.rem_euclid(2) == 1;
        diag.push(if odd { dt } else { delta } - k as f64 * delta_d);
        let off = if odd { om / 2.0 } else { om.conj() / 2.0 };
        if r > 0 {
            sub.push(off);
        }
        if r + 1 < size {
            sup.push(off);
        }
    }
    Ok(TruncationSystem { order, scheme, delta_d, delta, gamma_1d: params.gamma_1d, sub, diag, sup })
}

/// Solve a tridiagonal system with partial pivoting for two right-hand sides.
fn tridiagonal_solve(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &mut [[C64; 2]]) -> Option<()> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut dl = sub.to_vec(); // reused for the second superdiagonal fill-in
    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i] == ZERO {
                return None;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            for c in 0..2 {
                let v = rhs[i][c];
                rhs[i + 1][c] -= f * v;
            }
            dl[i] = ZERO;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -f * dl[i];
            } else {
                dl[i] = ZERO;
            }
            du[i] = tmp;
            rhs.swap(i, i + 1);
            for c in 0..2 {
                let v = rhs[i][c];
                rhs[i + 1][c] -= f * v;
            }
        }
    }
    if d[n - 1] == ZERO {
        return None;
    }
    for c in 0..2 {
        rhs[n - 1][c] /= d[n - 1];
        if n > 1 {
            rhs[n - 2][c] = (rhs[n - 2][c] - du[n - 2] * rhs[n - 1][c]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i][c] = (rhs[i][c] - du[i] * rhs[i + 1][c] - dl[i] * rhs[i + 2][c]) / d[i];
        }
    }
    Some(())
}

/// Effective 2×2 field matrix M_E = (Γ_1D/2)·Vᵀ·M⁻¹·V, V picking rows k = ±1.
pub fn effective_matrix(system: &TruncationSystem) -> Result<[[C64; 2]; 2]> {
    let n = system.size();
    let (rp, rm) = (system.row_of_index(1), system.row_of_index(-1));
    let mut x = vec![[ZERO; 2]; n];
    x[rp][0] = ONE;
    x[rm][1] = ONE;
    tridiagonal_solve(&system.sub, &system.diag, &system.sup, &mut x).ok_or_else(|| {
        Error::Pole(format!("truncated system of order {} is singular at delta = {}", system.order, system.delta))
    })?;
    let g = system.gamma_1d / 2.0;
    Ok([[g * x[rp][0], g * x[rp][1]], [g * x[rm][0], g * x[rm][1]]])
}

/// Roots of (q/n₀)² + (q/n₀)(M_E,11 − M_E,22) − det M_E = 0.
pub fn truncated_q(system: &TruncationSystem) -> Result<[DispersionPoint; 2]> {
    let me = effective_matrix(system)?;
    let b = me[0][0] - me[1][1];
    let det = me[0][0] * me[1][1] - me[0][1] * me[1][0];
    let disc = (b * b + 4.0 * det).sqrt();
    let (p, m) = (-b + disc, -b - disc);
    // Larger root directly, smaller from the product of roots = −det.
    let big = if p.norm() >= m.norm() { p } else { m } / 2.0;
    let small = if big == ZERO { ZERO } else { -det / big };
    let (q1, q2) = if p.norm() >= m.norm() { (big, small) } else { (small, big) };
    let (plus, minus) = if q1.re > q2.re || (q1.re == q2.re && q1.im >= q2.im) { (q1, q2) } else { (q2, q1) };
    let delta = system.delta;
    Ok([
        DispersionPoint { delta, q_over_n0: plus, branch: Branch::Plus },
        DispersionPoint { delta, q_over_n0: minus, branch: Branch::Minus },
    ])
}

/// Which continuum relation to trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuumModel {
    Eit,
    DualVQuadratic,
    DualVLinear,
    LambdaInfinite,
    Truncated,
}

/// Evaluate one continuum model at δ; `order` is used only by `Truncated`.
pub fn continuum_q(params: &SchemeParams, model: ContinuumModel, delta: C64, order: usize) -> Result<[DispersionPoint; 2]> {
    match model {
        ContinuumModel::Eit => eit_q(params, delta),
        ContinuumModel::DualVQuadratic => dualv_q_quadratic(params, delta),
        ContinuumModel::DualVLinear => dualv_q_linear(params, delta),
        ContinuumModel::LambdaInfinite => lambda_infinite_q(params, delta),
        ContinuumModel::Truncated => {
            let scheme = if params.scheme == Scheme::DualColor { Scheme::DualColor } else { Scheme::Lambda };
            truncated_q(&build_truncation(params, delta, order, scheme)?)
        }
    }
}
