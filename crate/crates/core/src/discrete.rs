//! Transfer-matrix model of a chain of point scatterers.
//!
//! A unit cell spans [0, L_u) with L_u = n_u·π/k₀ and holds N_u atoms. Its
//! transfer matrix maps (right-moving, left-moving) amplitudes at 0⁻ to L_u⁺.
//! Bloch vectors come from the reciprocal eigenvalue pairs of that matrix.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::continuum::{Branch, DispersionPoint};
use crate::error::{Error, Result};
use crate::numerics::{reciprocal_log_eigenvalues, Block, CMatrix, Mat2, ScaledMatrix, I, ZERO};
use crate::schemes::{dualv_scattering, lambda_beta, Scheme, SchemeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlacementKind {
    /// Evenly spaced, `d = n_u·π/(N_u k₀)`.
    Regular,
    Random { seed: u64 },
}

/// Atom positions of one unit cell. The drive phase φ lives in `SchemeParams`.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub positions: Vec<f64>,
    pub n_periods: u64,
    pub kind: PlacementKind,
}

impl Placement {
    pub fn cell_length(&self) -> f64 {
        self.n_periods as f64 * PI
    }

    pub fn atom_count(&self) -> usize {
        self.positions.len()
    }

    /// Same atoms translated by `shift` and wrapped back into the cell.
    pub fn translated(&self, shift: f64) -> Placement {
        let l = self.cell_length();
        let mut positions: Vec<f64> = self.positions.iter().map(|z| (z + shift).rem_euclid(l)).collect();
        positions.sort_by(f64::total_cmp);
        Placement { positions, ..self.clone() }
    }
}

/// Λ-lattice cell of one drive period: k₀z_j = jπ/N_u, j = 0…N_u−1.
///
/// With φ = 0 the atom j = N_u/2 sits on the drive node. Cyclic relabelling of
/// the atoms changes the cell's eigenvectors but not its eigenvalues.
pub fn regular_positions(n_atoms: usize) -> Result<Placement> {
    if n_atoms < 2 || n_atoms % 2 != 0 {
        return Err(Error::Domain(format!("regular cells need an even N_u >= 2, got {n_atoms}")));
    }
    lattice_positions(n_atoms, 1)
}

/// Evenly spaced atoms over `n_periods` half-wavelengths, without the parity rule.
pub fn lattice_positions(n_atoms: usize, n_periods: u64) -> Result<Placement> {
    if n_periods == 0 {
        return Err(Error::Domain("a cell needs at least one period".into()));
    }
    let d = n_periods as f64 * PI / n_atoms.max(1) as f64;
    Ok(Placement {
        positions: (0..n_atoms).map(|j| j as f64 * d).collect(),
        n_periods,
        kind: PlacementKind::Regular,
    })
}

/// N_u independent uniform positions on [0, n_u·π), sorted.
pub fn random_positions(n_atoms: usize, n_periods: u64, seed: u64) -> Result<Placement> {
    random_positions_stream(n_atoms, n_periods, seed, 0)
}

/// Like [`random_positions`] but drawn from an independent ChaCha stream, so
/// realization `r` of a run is the same no matter which thread computes it.
pub fn random_positions_stream(n_atoms: usize, n_periods: u64, seed: u64, stream: u64) -> Result<Placement> {
    if n_periods == 0 {
        return Err(Error::Domain("a cell needs at least one period".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let l = n_periods as f64 * PI;
    let mut positions: Vec<f64> = (0..n_atoms).map(|_| rng.gen::<f64>() * l).collect();
    positions.sort_by(f64::total_cmp);
    Ok(Placement { positions, n_periods, kind: PlacementKind::Random { seed } })
}

/// [I − β, −β; β, I + β].
pub fn atom_t<B: Block>(beta: B) -> CMatrix {
    let n = B::MODES;
    let mut m = CMatrix::identity(2 * n).expect("dimension 2 or 4");
    for i in 0..n {
        for j in 0..n {
            let b = beta.elem(i, j);
            m[(i, j)] -= b;
            m[(i, j + n)] = -b;
            m[(i + n, j)] = b;
            m[(i + n, j + n)] += b;
        }
    }
    m
}

/// diag(e^{ik₀d}·I, e^{−ik₀d}·I).
pub fn free_t(d: f64, dim: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(dim)?;
    let (p, q) = (C64::from_polar(1.0, d), C64::from_polar(1.0, -d));
    for i in 0..dim / 2 {
        m[(i, i)] = p;
        m[(i + dim / 2, i + dim / 2)] = q;
    }
    Ok(m)
}

/// Atom followed by free propagation up to it: T_a(β)·T_f(gap), fused.
fn atom_after_gap<B: Block>(beta: B, gap: f64) -> CMatrix {
    let n = B::MODES;
    let (p, q) = (C64::from_polar(1.0, gap), C64::from_polar(1.0, -gap));
    let mut m = atom_t(beta);
    for i in 0..2 * n {
        for j in 0..n {
            m[(i, j)] *= p;
            m[(i, j + n)] *= q;
        }
    }
    m
}

fn check_discrete_scheme(params: &SchemeParams) -> Result<()> {
    if params.scheme == Scheme::DualColor {
        return Err(Error::Config("the discrete model covers lambda and dual_v schemes".into()));
    }
    Ok(())
}

fn annotate(i: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Singularity { what, delta } => Error::Singularity { what: format!("{what} (atom {i})"), delta },
        other => other,
    }
}

/// Transfer matrix of the cell, as an overflow-free scaled product.
pub fn cell_t(params: &SchemeParams, placement: &Placement, delta: C64) -> Result<ScaledMatrix> {
    check_discrete_scheme(params)?;
    let dim = 2 * params.scheme.modes();
    let mut acc = ScaledMatrix::identity(dim)?;
    let mut prev = 0.0;
    for (i, &z) in placement.positions.iter().enumerate() {
        let gap = z - prev;
        let m = match params.scheme {
            Scheme::DualV => atom_after_gap(dualv_scattering(params, z, delta).map_err(annotate(i))?.beta, gap),
            _ => atom_after_gap(lambda_beta(params, z, delta).map_err(annotate(i))?, gap),
        };
        acc.apply(&m);
        prev = z;
    }
    acc.apply(&free_t(placement.cell_length() - prev, dim)?);
    Ok(acc)
}

/// Per-atom couplings, for callers that cascade the atoms themselves.
pub(crate) fn lambda_couplings(params: &SchemeParams, placement: &Placement, delta: C64) -> Result<Vec<C64>> {
    placement
        .positions
        .iter()
        .enumerate()
        .map(|(i, &z)| lambda_beta(params, z, delta).map_err(annotate(i)))
        .collect()
}

pub(crate) fn dualv_couplings(params: &SchemeParams, placement: &Placement, delta: C64) -> Result<Vec<Mat2>> {
    placement
        .positions
        .iter()
        .enumerate()
        .map(|(i, &z)| Ok(dualv_scattering(params, z, delta).map_err(annotate(i))?.beta))
        .collect()
}

/// Bloch vectors of a cell: q/n₀ = −(i/N_u)·Log((−1)^{n_u}λ), one pair per
/// reciprocal eigenvalue pair. The first member of each pair is the decaying
/// one (Im q ≥ 0), with Re q on the principal interval (−π/N_u, π/N_u].
pub fn bloch_q(cell: &ScaledMatrix, n_atoms: usize, n_periods: u64, delta: C64) -> Result<Vec<[DispersionPoint; 2]>> {
    if n_atoms == 0 {
        return Err(Error::Domain("Bloch vectors need at least one atom per cell".into()));
    }
    let n = n_atoms as f64;
    let logs = reciprocal_log_eigenvalues(cell)?;
    Ok(logs
        .into_iter()
        .enumerate()
        .map(|(b, l)| {
            // Principal Log of (−1)^{n_u}/λ_big, the decaying member.
            let im = (-l.im + PI * n_periods as f64 + PI).rem_euclid(2.0 * PI) - PI;
            let log_small = C64::new(-l.re, if im == -PI { PI } else { im });
            let q = -I * log_small / n;
            [
                DispersionPoint { delta, q_over_n0: q, branch: Branch::Band(b) },
                DispersionPoint { delta, q_over_n0: -q, branch: Branch::Band(b) },
            ]
        })
        .collect())
}

/// Continuity tracker for one band across a δ sweep.
///
/// Given the principal Bloch vector q at each new point, it picks among
/// ±q + 2πk/N_u the candidate closest to a linear extrapolation of the last
/// two accepted points.
#[derive(Clone, Debug, Default)]
pub struct BranchTracker {
    history: Vec<(f64, C64)>,
    /// Net number of 2π/N_u shifts applied at the most recent point.
    pub shift: i64,
}

impl BranchTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn previous(&self) -> Option<C64> {
        self.history.last().map(|h| h.1)
    }

    fn prediction(&self, delta: f64) -> Option<C64> {
        match self.history.as_slice() {
            [] => None,
            [(_, q)] => Some(*q),
            [.., (d0, q0), (d1, q1)] => {
                let span = d1 - d0;
                if span == 0.0 {
                    Some(*q1)
                } else {
                    Some(*q1 + (*q1 - *q0) * ((delta - d1) / span))
                }
            }
        }
    }

    /// Best continuation for `q` at `delta`: (value, distance, shift).
    pub fn candidate(&self, delta: f64, q: C64, n_atoms: usize) -> (C64, f64, i64) {
        let period = 2.0 * PI / n_atoms as f64;
        match self.prediction(delta) {
            None => {
                // Anchor: decaying branch, ties broken toward Re q > 0.
                let tie = q.im.abs() <= 1e-12 * q.norm();
                let v = if (tie && q.re < 0.0) || (!tie && q.im < 0.0) { -q } else { q };
                (v, 0.0, 0)
            }
            Some(pred) => {
                let mut best = (q, f64::INFINITY, 0);
                for s in [q, -q] {
                    let k = ((pred.re - s.re) / period).round() as i64;
                    for kk in [k - 1, k, k + 1] {
                        let v = s + kk as f64 * period;
                        let dist = (v - pred).norm();
                        if dist < best.1 {
                            best = (v, dist, kk);
                        }
                    }
                }
                best
            }
        }
    }

    /// Accept a point; fails when the step in Re q reaches π/N_u.
    pub fn push(&mut self, delta: f64, q: C64, n_atoms: usize) -> Result<C64> {
        let (v, _, k) = self.candidate(delta, q, n_atoms);
        if let Some(prev) = self.previous() {
            if (v.re - prev.re).abs() >= PI / n_atoms as f64 {
                return Err(Error::Unwrap { delta });
            }
        }
        self.history.push((delta, v));
        if self.history.len() > 2 {
            self.history.remove(0);
        }
        self.shift = k;
        Ok(v)
    }
}

/// Unwrapped bands over a δ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub bands: Vec<Vec<DispersionPoint>>,
    /// Grid points skipped because an atom sat exactly on a β pole.
    pub skipped: Vec<f64>,
}

impl Curve {
    pub fn band(&self, b: usize) -> &[DispersionPoint] {
        &self.bands[b]
    }
}

/// Principal Bloch vectors (decaying member of each pair) at every grid point;
/// `None` marks a β pole.
pub fn principal_bloch(params: &SchemeParams, placement: &Placement, deltas: &[f64]) -> Result<Vec<Option<Vec<C64>>>> {
    let eval = |&d: &f64| -> Result<Option<Vec<C64>>> {
        let delta = C64::new(d, 0.0);
        match cell_t(params, placement, delta) {
            Ok(cell) => bloch_q(&cell, placement.atom_count(), placement.n_periods, delta)
                .map(|pairs| Some(pairs.iter().map(|p| p[0].q_over_n0).collect())),
            Err(Error::Singularity { .. }) => Ok(None),
            Err(e) => Err(e),
        }
        .map_err(|e| e.at(d))
    };
    crate::par_map(deltas, eval).into_iter().collect()
}

/// Trace every band continuously across an increasing δ grid.
pub fn sweep_dispersion(params: &SchemeParams, placement: &Placement, deltas: &[f64]) -> Result<Curve> {
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("the delta grid must be strictly increasing".into()));
    }
    let raw = principal_bloch(params, placement, deltas)?;
    unwrap_bands(deltas, &raw, placement.atom_count())
}

/// Sequential branch unwinding with nearest-continuation band matching.
pub fn unwrap_bands(deltas: &[f64], raw: &[Option<Vec<C64>>], n_atoms: usize) -> Result<Curve> {
    let n_bands = raw.iter().flatten().map(|v| v.len()).next().unwrap_or(0);
    let mut trackers = vec![BranchTracker::new(); n_bands];
    let mut bands = vec![Vec::with_capacity(deltas.len()); n_bands];
    let mut skipped = Vec::new();
    for (&d, qs) in deltas.iter().zip(raw) {
        let Some(qs) = qs else {
            skipped.push(d);
            continue;
        };
        let order = best_assignment(&trackers, d, qs, n_atoms);
        for (b, &src) in order.iter().enumerate() {
            let v = trackers[b].push(d, qs[src], n_atoms)?;
            bands[b].push(DispersionPoint { delta: C64::new(d, 0.0), q_over_n0: v, branch: Branch::Band(b) });
        }
    }
    Ok(Curve { bands, skipped })
}

fn best_assignment(trackers: &[BranchTracker], d: f64, qs: &[C64], n_atoms: usize) -> Vec<usize> {
    let n = qs.len();
    if n < 2 || trackers.iter().all(|t| t.previous().is_none()) {
        // First point: order bands by Re q of the anchored branch.
        let mut idx: Vec<usize> = (0..n).collect();
        if n == 2 {
            let a = trackers[0].candidate(d, qs[0], n_atoms).0;
            let b = trackers[1].candidate(d, qs[1], n_atoms).0;
            if b.re < a.re {
                idx.swap(0, 1);
            }
        }
        return idx;
    }
    let cost = |perm: &[usize]| -> f64 {
        perm.iter().enumerate().map(|(b, &s)| trackers[b].candidate(d, qs[s], n_atoms).1).sum()
    };
    let (straight, swapped) = (vec![0, 1], vec![1, 0]);
    if cost(&swapped) < cost(&straight) {
        swapped
    } else {
        straight
    }
}

/// Effective mass of a regular Λ lattice with N_u atoms per drive period and
/// the largest δ for which the quadratic law is trusted.
pub fn lattice_mass(params: &SchemeParams, n_atoms: usize) -> Result<(C64, f64)> {
    if n_atoms < 2 || n_atoms % 2 != 0 {
        return Err(Error::Domain(format!("lattice mass needs an even N_u >= 2, got {n_atoms}")));
    }
    if params.omega0 == 0.0 {
        return Err(Error::Domain("lattice mass needs a nonzero drive".into()));
    }
    let n = n_atoms as f64;
    let g = params.gamma_1d;
    let c = C64::new(params.delta_c, params.gamma_prime / 2.0);
    let m = -(n - 1.0) * g * g / (2.0 * n * n * c * params.omega0.powi(2));
    let ds = crate::schemes::stark_shift(params, ZERO)?;
    let window = 0.1 * 2.0 * ds.norm() * (PI / n).powi(2);
    Ok((m, window))
}

/// Complex least-squares fit of (q/n₀)² = a·δ + b·δ²; since δ = (q/n₀)²/(2m), m = a/2.
pub fn fit_mass(curve_band: &[DispersionPoint]) -> Result<C64> {
    let rows: Vec<Vec<C64>> = curve_band.iter().map(|p| vec![p.delta, p.delta * p.delta]).collect();
    let y: Vec<C64> = curve_band.iter().map(|p| p.q_over_n0 * p.q_over_n0).collect();
    let coef = crate::numerics::complex_least_squares(&rows, &y)?;
    Ok(coef[0] / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ONE;
    use std::f64::consts::FRAC_PI_2;

    fn fig() -> SchemeParams {
        SchemeParams::default()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn atom_matrix_examples() {
        assert_eq!(atom_t(ZERO), CMatrix::identity(2).unwrap());
        let (a, b) = (C64::new(0.01, -0.2), C64::new(-0.3, 0.05));
        let prod = atom_t(a) * atom_t(b);
        let sum = atom_t(a + b);
        assert!((prod - sum).max_abs() < 1e-15);
    }

    #[test]
    fn free_matrix_examples() {
        assert!((free_t(0.0, 2).unwrap() - CMatrix::identity(2).unwrap()).max_abs() < 1e-16);
        let half = free_t(PI, 2).unwrap();
        assert!((half + CMatrix::identity(2).unwrap()).max_abs() < 1e-15);
        let q = free_t(FRAC_PI_2, 4).unwrap();
        for (i, v) in [I, I, -I, -I].into_iter().enumerate() {
            assert!((q[(i, i)] - v).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_cell_is_half_wave() {
        let p = Placement { positions: vec![], n_periods: 1, kind: PlacementKind::Regular };
        let t = cell_t(&fig(), &p, re(1e-3)).unwrap().unscaled();
        assert!((t + CMatrix::identity(2).unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn node_atom_cell_composes_by_hand() {
        let p = fig();
        let pl = regular_positions(2).unwrap();
        let cell = cell_t(&p, &pl, re(0.0)).unwrap().unscaled();
        let b2 = crate::schemes::two_level_beta(&p, re(0.0));
        let q = free_t(FRAC_PI_2, 2).unwrap();
        let expect = q * atom_t(b2) * q;
        assert!((cell - expect).max_abs() < 1e-14);
    }

    #[test]
    fn regular_placement_rules() {
        let p = regular_positions(2).unwrap();
        assert_eq!(p.positions, vec![0.0, FRAC_PI_2]);
        let p4 = regular_positions(4).unwrap();
        assert!((p4.positions[2] - FRAC_PI_2).abs() < 1e-15);
        assert!(fig().drive_intensity(p4.positions[2]) == 0.0);
        assert!(regular_positions(3).is_err());
        assert!(regular_positions(0).is_err());
    }

    #[test]
    fn random_placement_is_reproducible() {
        let a = random_positions(100, 50, 7).unwrap();
        let b = random_positions(100, 50, 7).unwrap();
        let c = random_positions(100, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions, c.positions);
        assert!(a.positions.windows(2).all(|w| w[0] < w[1]));
        assert!(a.positions.iter().all(|&z| (0.0..50.0 * PI).contains(&z)));
    }

    #[test]
    fn random_placement_is_uniform() {
        // Kolmogorov–Smirnov statistic against U(0, L); p > 0.01 ⇔ D·√n < 1.628.
        let n = 10_000;
        let p = random_positions(n, 3, 2024).unwrap();
        let l = p.cell_length();
        let d = p
            .positions
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let f = z / l;
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d * (n as f64).sqrt() < 1.628, "KS statistic {d}");
    }

    #[test]
    fn transparent_cell_has_zero_bloch_vector() {
        let cell = ScaledMatrix::new(CMatrix::identity(2).unwrap().scale(-ONE));
        let q = bloch_q(&cell, 1, 1, re(0.0)).unwrap();
        assert!(q[0][0].q_over_n0.norm() < 1e-15);
    }

    #[test]
    fn bragg_spaced_two_level_atoms_have_constant_bloch_vector() {
        // One node atom per half wavelength: the cell is −(I + βN) with N nilpotent.
        let p = SchemeParams { phi: FRAC_PI_2, ..fig() };
        let cell_p = lattice_positions(1, 1).unwrap();
        let qs: Vec<C64> = [-1e-2, -1e-3, 0.0, 1e-3, 1e-2]
            .iter()
            .map(|&d| bloch_q(&cell_t(&p, &cell_p, re(d)).unwrap(), 1, 1, re(d)).unwrap()[0][0].q_over_n0)
            .collect();
        let spread = qs.iter().map(|q| (q - qs[0]).norm()).fold(0.0, f64::max);
        assert!(spread < 1e-10, "{qs:?}");
    }

    #[test]
    fn decaying_member_first() {
        let p = fig();
        let pl = random_positions(200, 100, 1).unwrap();
        let cell = cell_t(&p, &pl, re(1e-3)).unwrap();
        for pair in bloch_q(&cell, 200, 100, re(1e-3)).unwrap() {
            assert!(pair[0].q_over_n0.im >= 0.0);
            assert_eq!(pair[1].q_over_n0, -pair[0].q_over_n0);
        }
    }

    #[test]
    fn tracker_applies_one_shift_across_the_zone_edge() {
        let n = 10;
        let c = 1.0;
        let deltas: Vec<f64> = (1..40).map(|k| k as f64 * 0.01).collect();
        let raw: Vec<Option<Vec<C64>>> = deltas
            .iter()
            .map(|&d| {
                let q = c * d;
                let wrapped = (q + PI / n as f64).rem_euclid(2.0 * PI / n as f64) - PI / n as f64;
                Some(vec![C64::new(wrapped, 1e-3)])
            })
            .collect();
        let curve = unwrap_bands(&deltas, &raw, n).unwrap();
        for (p, &d) in curve.band(0).iter().zip(&deltas) {
            assert!((p.q_over_n0.re - c * d).abs() < 1e-12);
        }
    }

    #[test]
    fn tracker_rejects_coarse_grids() {
        let n = 10;
        // Extrapolation predicts 0.5; the nearest image of 0.05 is 0.05 + 2π/10,
        // a step of more than π/10 from the last accepted 0.25.
        let deltas = vec![0.01, 0.02, 0.03];
        let raw = vec![Some(vec![C64::new(0.0, 1e-3)]), Some(vec![C64::new(0.25, 1e-3)]), Some(vec![C64::new(0.05, 1e-3)])];
        assert!(matches!(unwrap_bands(&deltas, &raw, n), Err(Error::Unwrap { .. })));
    }

    #[test]
    fn pole_points_are_skipped() {
        let deltas = vec![1e-3, 2e-3, 3e-3];
        let raw = vec![Some(vec![re(1e-4)]), None, Some(vec![re(3e-4)])];
        let curve = unwrap_bands(&deltas, &raw, 100).unwrap();
        assert_eq!(curve.skipped, vec![2e-3]);
        assert_eq!(curve.band(0).len(), 2);
    }

    #[test]
    fn lattice_mass_values() {
        let p = fig();
        let (m, w) = lattice_mass(&p, 2).unwrap();
        assert!((m - C64::new(1.3889e-5, 6.9e-8)).norm() < 1e-8);
        assert!(w > 0.0);
        let mv = crate::continuum::dualv_mass(&p).unwrap();
        for n in [2usize, 4, 8, 16] {
            let (m, _) = lattice_mass(&p, n).unwrap();
            let ratio = m / mv;
            let expect = 2.0 * (n as f64 - 1.0) / (n * n) as f64;
            assert!((ratio - expect).norm() < 1e-14);
        }
        let boosted = SchemeParams { omega0: 2f64.sqrt(), ..p };
        let mv2 = crate::continuum::dualv_mass(&boosted).unwrap();
        assert!((mv2 - m).norm() <= 1e-12 * m.norm());
        assert!(lattice_mass(&p, 3).is_err());
    }

    #[test]
    fn dual_color_is_not_discrete() {
        let p = SchemeParams::with_scheme(Scheme::DualColor);
        assert!(matches!(cell_t(&p, &regular_positions(2).unwrap(), re(0.0)), Err(Error::Config(_))));
    }
}
