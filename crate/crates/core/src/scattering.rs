//! Transmission and reflection of finite ensembles.
//!
//! Spectra are built from scattering matrices combined with the Redheffer
//! star product. Unlike long transfer-matrix products this never forms
//! exponentially large entries, so |t| deep inside a band gap is resolved down
//! to the underflow threshold instead of being lost to cancellation.
//! Transfer-matrix routes (direct power and the closed form) remain available
//! for single cells and cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::continuum::{AlphaPair, DispersionPoint};
use crate::discrete::{dualv_couplings, lambda_couplings, random_positions_stream, regular_positions, Placement};
use crate::error::{Error, Result};
use crate::numerics::{Block, CMatrix, Mat2, ScaledMatrix, I, ZERO};
use crate::schemes::{Scheme, SchemeParams};

/// Largest magnitude of ln|t| before t is reported as underflowed.
const LOG_UNDERFLOW: f64 = -700.0;

/// Two-port scattering matrix. `r_left` is the reflection seen from the left,
/// `t_lr` the transmission from left to right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SMatrix<B> {
    pub t_lr: B,
    pub t_rl: B,
    pub r_left: B,
    pub r_right: B,
}

fn degenerate(what: &str, residual: f64) -> Error {
    Error::Degeneracy { what: what.into(), residual }
}

impl<B: Block> SMatrix<B> {
    pub fn identity() -> Self {
        SMatrix { t_lr: B::IDENTITY, t_rl: B::IDENTITY, r_left: B::ZERO, r_right: B::ZERO }
    }

    /// Free propagation over k₀d.
    pub fn free(d: f64) -> Self {
        let p = B::scalar(C64::from_polar(1.0, d));
        SMatrix { t_lr: p, t_rl: p, r_left: B::ZERO, r_right: B::ZERO }
    }

    /// Point scatterer with coupling β: t = (I + β)⁻¹, r = −tβ (left), −βt (right).
    pub fn atom(beta: B) -> Result<Self> {
        let t = (B::IDENTITY + beta)
            .inverse()
            .ok_or_else(|| Error::Singularity { what: "identity + beta is singular".into(), delta: None })?;
        Ok(SMatrix { t_lr: t, t_rl: t, r_left: -(t * beta), r_right: -(beta * t) })
    }

    /// `self` followed (to the right) by `next`.
    pub fn star(&self, next: &SMatrix<B>) -> Result<Self> {
        let (a, b) = (self, next);
        let d1 = (B::IDENTITY - a.r_right * b.r_left)
            .inverse()
            .ok_or_else(|| degenerate("multiple-reflection factor is singular", (a.r_right * b.r_left).max_abs()))?;
        let d2 = (B::IDENTITY - b.r_left * a.r_right)
            .inverse()
            .ok_or_else(|| degenerate("multiple-reflection factor is singular", (b.r_left * a.r_right).max_abs()))?;
        Ok(SMatrix {
            t_lr: b.t_lr * d1 * a.t_lr,
            r_left: a.r_left + a.t_rl * b.r_left * d1 * a.t_lr,
            t_rl: a.t_rl * d2 * b.t_rl,
            r_right: b.r_right + b.t_lr * a.r_right * d2 * b.t_rl,
        })
    }

    /// `self` followed by free propagation over k₀d; cheaper than a full star.
    pub fn then_free(&self, d: f64) -> Self {
        if d == 0.0 {
            return *self;
        }
        let p = B::scalar(C64::from_polar(1.0, d));
        let p2 = B::scalar(C64::from_polar(1.0, 2.0 * d));
        SMatrix { t_lr: p * self.t_lr, t_rl: self.t_rl * p, r_left: self.r_left, r_right: p2 * self.r_right }
    }

    /// n copies in a row, by repeated squaring.
    pub fn star_pow(&self, mut n: u64) -> Result<Self> {
        let mut acc = Self::identity();
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.star(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.star(&base)?;
            }
        }
        Ok(acc)
    }
}

/// Atoms at `positions` (sorted, inside [0, length)) with couplings `betas`.
pub fn cascade<B: Block>(positions: &[f64], betas: &[B], length: f64) -> Result<SMatrix<B>> {
    if positions.len() != betas.len() {
        return Err(Error::Config(format!("{} positions but {} couplings", positions.len(), betas.len())));
    }
    let mut s = SMatrix::identity();
    let mut prev = 0.0;
    for (&z, &beta) in positions.iter().zip(betas) {
        s = s.then_free(z - prev).star(&SMatrix::atom(beta)?)?;
        prev = z;
    }
    Ok(s.then_free(length - prev))
}

/// S-matrix of one placement (one cell or a whole random ensemble).
pub fn placement_s(params: &SchemeParams, placement: &Placement, delta: C64) -> Result<Response> {
    let l = placement.cell_length();
    match params.scheme {
        Scheme::Lambda => {
            Ok(Response::Scalar(cascade(&placement.positions, &lambda_couplings(params, placement, delta)?, l)?))
        }
        Scheme::DualV => {
            Ok(Response::Block(cascade(&placement.positions, &dualv_couplings(params, placement, delta)?, l)?))
        }
        Scheme::DualColor => Err(Error::Config("spectra cover lambda and dual_v schemes".into())),
    }
}

/// Scattering matrix of either mode count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Response {
    Scalar(SMatrix<C64>),
    Block(SMatrix<Mat2>),
}

impl Response {
    pub fn modes(&self) -> usize {
        match self {
            Response::Scalar(_) => 1,
            Response::Block(_) => 2,
        }
    }

    pub fn star_pow(&self, n: u64) -> Result<Response> {
        Ok(match self {
            Response::Scalar(s) => Response::Scalar(s.star_pow(n)?),
            Response::Block(s) => Response::Block(s.star_pow(n)?),
        })
    }

    /// (t, r) for light entering from the left in mode `input`, leaving in `output`.
    pub fn left_incidence(&self, output: usize, input: usize) -> (C64, C64) {
        match self {
            Response::Scalar(s) => (s.t_lr, s.r_left),
            Response::Block(s) => (s.t_lr.elem(output, input), s.r_left.elem(output, input)),
        }
    }

    /// Total output power for unit input in mode `input` from the left.
    pub fn out_power(&self, input: usize) -> f64 {
        (0..self.modes())
            .map(|o| {
                let (t, r) = self.left_incidence(o, input);
                t.norm_sqr() + r.norm_sqr()
            })
            .sum()
    }
}

/// Ensemble transfer matrix and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleT {
    pub matrix: ScaledMatrix,
    /// False when the closed form hit a degeneracy and the direct power was used.
    pub closed_form: bool,
}

/// Reference path: the cell matrix raised to the n-th power.
pub fn ensemble_t_direct(cell: &ScaledMatrix, n_e: u64) -> Result<ScaledMatrix> {
    if n_e == 0 {
        return Err(Error::Domain("an ensemble needs at least one cell".into()));
    }
    cell.pow(n_e)
}

/// e^z − 1 without cancellation for small |z|.
fn expm1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let half = (z.im / 2.0).sin();
    C64::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

/// Closed form for a unimodular 2×2 cell: Tⁿ = a_n·T − a_{n−1}·I with
/// a_n = (λⁿ − λ⁻ⁿ)/(λ − λ⁻¹). Evaluated with the growth e^{(n−1)ln λ}
/// factored out, so it stays finite for any n. Near λ² = 1 (band edges) the
/// formula loses accuracy and the direct power is returned instead.
pub fn ensemble_t_closed(cell: &ScaledMatrix, n_e: u64) -> Result<EnsembleT> {
    if n_e == 0 {
        return Err(Error::Domain("an ensemble needs at least one cell".into()));
    }
    if cell.dim() != 2 {
        return Ok(EnsembleT { matrix: ensemble_t_direct(cell, n_e)?, closed_form: false });
    }
    let m = cell.matrix;
    let s = cell.log_scale;
    let nu = m.trace();
    let e2s = C64::new((-2.0 * s).exp(), 0.0);
    let root = (nu * nu - 4.0 * e2s).sqrt();
    let (mu_a, mu_b) = ((nu + root) / 2.0, (nu - root) / 2.0);
    let mu1 = if mu_a.norm() >= mu_b.norm() { mu_a } else { mu_b };
    if mu1 == ZERO {
        return Err(degenerate("cell has no dominant eigenvalue", 0.0));
    }
    let mu2 = e2s / mu1;
    let l = mu1.ln() + s;
    let denom = -expm1(-2.0 * l);
    if denom.norm() < 1e-8 {
        return Ok(EnsembleT { matrix: ensemble_t_direct(cell, n_e)?, closed_form: false });
    }
    let n = n_e as f64;
    let an = -expm1(-2.0 * n * l);
    let an1 = -expm1(-2.0 * (n - 1.0) * l);
    let id = CMatrix::identity(2)?;
    let g = (n - 1.0) * l + s;
    let body = (m.scale(an) - id.scale(mu2 * an1)).scale(C64::from_polar(1.0, g.im) / denom);
    let mut out = ScaledMatrix::new(body);
    out.log_scale += g.re;
    Ok(EnsembleT { matrix: out, closed_form: true })
}

/// Ensemble of `n_e` identical cells; closed form for one mode, direct power for two.
pub fn ensemble_t(params: &SchemeParams, placement: &Placement, n_e: u64, delta: C64) -> Result<EnsembleT> {
    let cell = crate::discrete::cell_t(params, placement, delta)?;
    ensemble_t_closed(&cell, n_e)
}

/// Continuum slab of `n_atoms` = n₀L atoms: T = cos(Q)I + i(sin Q/q)·A with
/// A = [[−α₁, −α₂], [α₂, α₁]], A² = q²I and Q = (q/n₀)·n₀L.
pub fn continuum_ensemble_t(alpha: &AlphaPair, n_atoms: f64) -> Result<ScaledMatrix> {
    let q = (alpha.alpha1 * alpha.alpha1 - alpha.alpha2 * alpha.alpha2).sqrt();
    let big_q = q * n_atoms;
    // Scale out e^{|Im Q|} so cos and sin stay finite.
    let s = big_q.im.abs();
    let (ep, em) = ((I * big_q - s).exp(), (-I * big_q - s).exp());
    let cos = (ep + em) / 2.0;
    let sinc = if q.norm() * n_atoms < 1e-8 {
        C64::new(n_atoms * (-s).exp(), 0.0)
    } else {
        (ep - em) / (2.0 * I) / q
    };
    let (a1, a2) = (alpha.alpha1, alpha.alpha2);
    let f = I * sinc;
    let m = CMatrix::scalar2(cos - f * a1, -f * a2, f * a2, cos + f * a1);
    let mut out = ScaledMatrix::new(m);
    out.log_scale += s;
    Ok(out)
}

/// Left-incidence amplitudes extracted from a transfer matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitudes {
    /// Row-major mode blocks; only [0] is used for one mode.
    pub t: Mat2,
    pub r: Mat2,
    /// |t| fell below the floating-point range and was set to 0.
    pub underflow: bool,
}

/// r = −T₂₂⁻¹T₂₁, t = T₁₁ − T₁₂T₂₂⁻¹T₂₁ (= 1/T₂₂ for a unimodular 2×2).
pub fn t_r_from_t(t_e: &ScaledMatrix) -> Result<Amplitudes> {
    let m = t_e.matrix;
    let s = t_e.log_scale;
    if m.dim() == 2 {
        let t22 = m[(1, 1)];
        if t22 == ZERO {
            return Err(degenerate("T22 vanishes", 0.0));
        }
        let log_t = -s - t22.ln();
        let (t, underflow) = if log_t.re < LOG_UNDERFLOW { (ZERO, true) } else { (log_t.exp(), false) };
        let r = -m[(1, 0)] / t22;
        return Ok(Amplitudes { t: Mat2::diag(t, ZERO), r: Mat2::diag(r, ZERO), underflow });
    }
    let (b11, b12, b21, b22) = (m.block(0, 0), m.block(0, 1), m.block(1, 0), m.block(1, 1));
    let inv = b22.inverse().ok_or_else(|| degenerate("T22 block is singular", b22.det().norm()))?;
    let r = -(inv * b21);
    let schur = b11 + b12 * r;
    // Cancellation leaves roundoff of size eps·|T| in the Schur complement.
    let floor = 64.0 * f64::EPSILON * m.max_abs();
    if schur.max_abs() <= floor || s + schur.max_abs().ln() < LOG_UNDERFLOW {
        return Ok(Amplitudes { t: Mat2::ZERO, r, underflow: true });
    }
    Ok(Amplitudes { t: schur.scale(C64::new(s.exp(), 0.0)), r, underflow: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlacementSpec {
    /// Regular cells of `atoms_per_cell` atoms per drive period, repeated.
    Regular { atoms_per_cell: usize },
    /// Uniformly random positions over `n_periods` half-wavelengths.
    Random { n_periods: u64 },
}

/// Everything that defines a spectrum besides the scheme parameters and δ grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    pub placement: PlacementSpec,
    pub n_total: usize,
    pub realizations: usize,
    pub seed: u64,
    /// Dual-V mode incident from the left (0 = σ₊, 1 = σ₋).
    pub input_mode: usize,
    /// Dual-V mode whose power is recorded.
    pub output_mode: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec {
            placement: PlacementSpec::Regular { atoms_per_cell: 2 },
            n_total: 40_000,
            realizations: 100,
            seed: 1,
            input_mode: 0,
            output_mode: 0,
        }
    }
}

impl SpectrumSpec {
    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        let modes = scheme.modes();
        if self.input_mode >= modes || self.output_mode >= modes {
            return Err(Error::Config(format!("mode indices must be below {modes} for {}", scheme.name())));
        }
        match self.placement {
            PlacementSpec::Regular { atoms_per_cell } => {
                if atoms_per_cell == 0 || self.n_total % atoms_per_cell != 0 {
                    return Err(Error::Config(format!(
                        "n_total = {} is not a multiple of atoms_per_cell = {atoms_per_cell}",
                        self.n_total
                    )));
                }
            }
            PlacementSpec::Random { n_periods } => {
                if n_periods == 0 {
                    return Err(Error::Config("n_periods must be positive".into()));
                }
                if self.realizations == 0 {
                    return Err(Error::Config("at least one realization is needed".into()));
                }
            }
        }
        Ok(())
    }
}

/// One realization at one δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub delta: f64,
    pub t: C64,
    pub r: C64,
    pub underflow: bool,
}

impl SpectrumPoint {
    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Realization statistics at one δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumStats {
    pub delta: f64,
    pub t_mean: f64,
    pub r_mean: f64,
    pub t_iqr: f64,
    pub r_iqr: f64,
    /// Any realization underflowed.
    pub underflow: bool,
}

/// Pairwise summation; the result does not depend on how work was split.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Interquartile range with linear interpolation between order statistics.
pub fn iqr(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let (lo, frac) = (h.floor() as usize, h.fract());
        if lo + 1 < v.len() {
            v[lo] + frac * (v[lo + 1] - v[lo])
        } else {
            v[lo]
        }
    };
    q(0.75) - q(0.25)
}

fn point_from(resp: &Response, spec: &SpectrumSpec, delta: f64) -> SpectrumPoint {
    let (t, r) = resp.left_incidence(spec.output_mode, spec.input_mode);
    let underflow = t == ZERO || !t.norm_sqr().is_normal();
    SpectrumPoint { delta, t: if underflow { ZERO } else { t }, r, underflow }
}

/// Per-realization spectra: `result[i][k]` is realization k at `deltas[i]`.
pub fn spectrum_points(params: &SchemeParams, spec: &SpectrumSpec, deltas: &[f64]) -> Result<Vec<Vec<SpectrumPoint>>> {
    params.validate()?;
    spec.validate(params.scheme)?;
    match spec.placement {
        PlacementSpec::Regular { atoms_per_cell } => {
            let cell = regular_positions(atoms_per_cell)?;
            let n_e = (spec.n_total / atoms_per_cell) as u64;
            crate::par_map(deltas, |&d| {
                let resp = placement_s(params, &cell, C64::new(d, 0.0)).and_then(|s| s.star_pow(n_e)).map_err(|e| e.at(d))?;
                Ok(vec![point_from(&resp, spec, d)])
            })
            .into_iter()
            .collect()
        }
        PlacementSpec::Random { n_periods } => {
            let ensembles: Vec<Placement> = (0..spec.realizations as u64)
                .map(|k| random_positions_stream(spec.n_total, n_periods, spec.seed, k))
                .collect::<Result<_>>()?;
            crate::par_map(deltas, |&d| {
                ensembles
                    .iter()
                    .map(|p| Ok(point_from(&placement_s(params, p, C64::new(d, 0.0)).map_err(|e| e.at(d))?, spec, d)))
                    .collect::<Result<Vec<_>>>()
            })
            .into_iter()
            .collect()
        }
    }
}

/// Mean and spread of |t|², |r|² over realizations at every δ.
pub fn spectrum(params: &SchemeParams, spec: &SpectrumSpec, deltas: &[f64]) -> Result<Vec<SpectrumStats>> {
    let raw = spectrum_points(params, spec, deltas)?;
    Ok(raw
        .iter()
        .zip(deltas)
        .map(|(pts, &delta)| {
            let t: Vec<f64> = pts.iter().map(SpectrumPoint::transmittance).collect();
            let r: Vec<f64> = pts.iter().map(SpectrumPoint::reflectance).collect();
            let n = pts.len() as f64;
            SpectrumStats {
                delta,
                t_mean: pairwise_sum(&t) / n,
                r_mean: pairwise_sum(&r) / n,
                t_iqr: iqr(&t),
                r_iqr: iqr(&r),
                underflow: pts.iter().any(|p| p.underflow),
            }
        })
        .collect())
}

/// δ where |Re q/n₀| first reaches mπ/N, for m = 1, 2, … in order, by linear
/// interpolation along the band. Stops at the first level never reached.
pub fn resonance_locations(band: &[DispersionPoint], n_total: usize) -> Vec<f64> {
    let step = PI / n_total as f64;
    let mut out = Vec::new();
    let mut m = 1.0;
    for w in band.windows(2) {
        let (a, b) = (w[0].q_over_n0.re.abs(), w[1].q_over_n0.re.abs());
        loop {
            let level = m * step;
            if (a - level) * (b - level) > 0.0 || a == b {
                break;
            }
            let f = (level - a) / (b - a);
            out.push(w[0].delta.re + f * (w[1].delta.re - w[0].delta.re));
            m += 1.0;
        }
    }
    out
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}
