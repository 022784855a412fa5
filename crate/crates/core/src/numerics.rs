//! Small complex-matrix kernel shared by every model.
//!
//! Transfer matrices here are 2×2 (one guided mode) or 4×4 (two polarization
//! modes). Long cascades are kept in range by factoring a power of two out of
//! the running product, so `ScaledMatrix` represents `matrix · exp(log_scale)`
//! without ever forming the (possibly overflowing) true matrix.

use std::f64::consts::{LN_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const RESCALE_BOUND: f64 = 1e8;
pub const QUADRATURE_NODES: usize = 2048;

const DET_TOL: f64 = 1e-6;
const PALINDROME_TOL: f64 = 1e-6;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// 2×2 complex matrix, used for polarization blocks and dual-V scattering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        let m = &self.0;
        let norm = self.max_abs();
        if d.norm() <= f64::EPSILON * norm * norm || !d.is_finite() {
            return None;
        }
        let inv = d.inv();
        Some(Mat2([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Per-mode coupling: a scalar for one guided mode, a 2×2 block for two.
pub trait Block:
    Copy + std::fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    const ZERO: Self;
    const IDENTITY: Self;
    const MODES: usize;
    fn inverse(&self) -> Option<Self>;
    fn max_abs(&self) -> f64;
    /// Element (out, in); scalars only have (0, 0).
    fn elem(&self, out: usize, inp: usize) -> C64;
    /// Block (i, j) of a 2·MODES transfer matrix.
    fn from_block(m: &CMatrix, i: usize, j: usize) -> Self;
    /// z times the identity.
    fn scalar(z: C64) -> Self;
}

impl Block for C64 {
    const ZERO: Self = ZERO;
    const IDENTITY: Self = ONE;
    const MODES: usize = 1;
    fn inverse(&self) -> Option<Self> {
        (self.norm() > 0.0 && self.is_finite()).then(|| self.inv())
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
    fn elem(&self, _: usize, _: usize) -> C64 {
        *self
    }
    fn from_block(m: &CMatrix, i: usize, j: usize) -> Self {
        m[(i, j)]
    }
    fn scalar(z: C64) -> Self {
        z
    }
}

impl Block for Mat2 {
    const ZERO: Self = Mat2::ZERO;
    const IDENTITY: Self = Mat2::IDENTITY;
    const MODES: usize = 2;
    fn inverse(&self) -> Option<Self> {
        Mat2::inverse(self)
    }
    fn max_abs(&self) -> f64 {
        Mat2::max_abs(self)
    }
    fn elem(&self, out: usize, inp: usize) -> C64 {
        self.0[out][inp]
    }
    fn from_block(m: &CMatrix, i: usize, j: usize) -> Self {
        m.block(i, j)
    }
    fn scalar(z: C64) -> Self {
        Mat2::diag(z, z)
    }
}

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    a: [C64; 16],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::Config(format!("matrix dimension must be 2 or 4, got {dim}")));
        }
        Ok(CMatrix { dim, a: [ZERO; 16] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.a[i * dim + i] = ONE;
        }
        Ok(m)
    }

    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::Config(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        m.a[..dim * dim].copy_from_slice(entries);
        Ok(m)
    }

    pub fn scalar2(t11: C64, t12: C64, t21: C64, t22: C64) -> Self {
        let mut a = [ZERO; 16];
        a[..4].copy_from_slice(&[t11, t12, t21, t22]);
        CMatrix { dim: 2, a }
    }

    pub fn from_blocks(b11: Mat2, b12: Mat2, b21: Mat2, b22: Mat2) -> Self {
        let mut m = CMatrix { dim: 4, a: [ZERO; 16] };
        for (bi, bj, b) in [(0, 0, b11), (0, 2, b12), (2, 0, b21), (2, 2, b22)] {
            for i in 0..2 {
                for j in 0..2 {
                    m.a[(bi + i) * 4 + bj + j] = b.0[i][j];
                }
            }
        }
        m
    }

    /// Block (i, j) of a 4×4 matrix split into 2×2 polarization blocks.
    pub fn block(&self, i: usize, j: usize) -> Mat2 {
        assert_eq!(self.dim, 4, "block access needs a 4x4 matrix");
        let (r, c) = (2 * i, 2 * j);
        Mat2([
            [self[(r, c)], self[(r, c + 1)]],
            [self[(r + 1, c)], self[(r + 1, c + 1)]],
        ])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.a[..self.dim * self.dim]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|z| *z *= s);
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i * self.dim + j] = self[(j, i)];
            }
        }
        m
    }

    pub fn det(&self) -> C64 {
        match self.dim {
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            _ => det4(self),
        }
    }

    /// Sums of principal minors of order 1..=dim (c1 = trace, c_dim = det).
    /// Entries past `dim` are zero.
    pub fn char_coeffs(&self) -> [C64; 4] {
        let m = |i: usize, j: usize| self[(i, j)];
        let minor2 = |i: usize, j: usize| m(i, i) * m(j, j) - m(i, j) * m(j, i);
        let minor3 = |i: usize, j: usize, k: usize| {
            m(i, i) * (m(j, j) * m(k, k) - m(j, k) * m(k, j))
                - m(i, j) * (m(j, i) * m(k, k) - m(j, k) * m(k, i))
                + m(i, k) * (m(j, i) * m(k, j) - m(j, j) * m(k, i))
        };
        match self.dim {
            2 => [self.trace(), minor2(0, 1), ZERO, ZERO],
            _ => {
                let c2 = minor2(0, 1) + minor2(0, 2) + minor2(0, 3) + minor2(1, 2) + minor2(1, 3) + minor2(2, 3);
                let c3 = minor3(0, 1, 2) + minor3(0, 1, 3) + minor3(0, 2, 3) + minor3(1, 2, 3);
                [self.trace(), c2, c3, det4(self)]
            }
        }
    }
}

fn det4(m: &CMatrix) -> C64 {
    // Laplace expansion over 2×2 minors of the top and bottom row pairs.
    let s = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    s(0, 1, 0, 1) * s(2, 3, 2, 3) - s(0, 1, 0, 2) * s(2, 3, 1, 3) + s(0, 1, 0, 3) * s(2, 3, 1, 2)
        + s(0, 1, 1, 2) * s(2, 3, 0, 3)
        - s(0, 1, 1, 3) * s(2, 3, 0, 2)
        + s(0, 1, 2, 3) * s(2, 3, 0, 1)
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.dim + j]
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, o: CMatrix) -> CMatrix {
        assert_eq!(self.dim, o.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = CMatrix { dim: n, a: [ZERO; 16] };
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                for j in 0..n {
                    out.a[i * n + j] += aik * o.a[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, o: CMatrix) -> CMatrix {
        assert_eq!(self.dim, o.dim, "dimension mismatch in matrix sum");
        let mut out = self;
        out.a.iter_mut().zip(o.a.iter()).for_each(|(x, y)| *x += y);
        out
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, o: CMatrix) -> CMatrix {
        self + o.scale(-ONE)
    }
}

/// `matrix · exp(log_scale)`; `matrix` stays within [1/R, R] in max-norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMatrix {
    pub matrix: CMatrix,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(ScaledMatrix { matrix: CMatrix::identity(dim)?, log_scale: 0.0 })
    }

    pub fn new(matrix: CMatrix) -> Self {
        let mut s = ScaledMatrix { matrix, log_scale: 0.0 };
        s.rescale();
        s
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Keep the stored matrix inside [1/R, R]. Scaling is by powers of two, so
    /// it introduces no rounding.
    fn rescale(&mut self) {
        let m = self.matrix.max_abs();
        if m == 0.0 || !m.is_finite() {
            return;
        }
        if m > RESCALE_BOUND || m < 1.0 / RESCALE_BOUND {
            let e = m.log2().round();
            self.matrix = self.matrix.scale(C64::new((-e).exp2(), 0.0));
            self.log_scale += e * LN_2;
        }
    }

    /// `self ← factor · self`.
    pub fn apply(&mut self, factor: &CMatrix) {
        self.matrix = *factor * self.matrix;
        self.rescale();
    }

    /// `self ← other · self`.
    pub fn apply_scaled(&mut self, other: &ScaledMatrix) {
        self.matrix = other.matrix * self.matrix;
        self.log_scale += other.log_scale;
        self.rescale();
    }

    pub fn pow(&self, mut n: u64) -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity(self.dim())?;
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc.apply_scaled(&base);
            }
            n >>= 1;
            if n > 0 {
                let b = base;
                base.apply_scaled(&b);
            }
        }
        Ok(acc)
    }

    /// The true matrix; overflows to inf when `log_scale` is large.
    pub fn unscaled(&self) -> CMatrix {
        self.matrix.scale(C64::new(self.log_scale.exp(), 0.0))
    }

    /// Complex log of the true determinant.
    pub fn log_det(&self) -> C64 {
        self.matrix.det().ln() + self.dim() as f64 * self.log_scale
    }
}

/// Left-applied product `factors[last] · … · factors[first]`.
pub fn scaled_product(factors: &[CMatrix]) -> Result<ScaledMatrix> {
    let dim = factors.first().map(|f| f.dim()).unwrap_or(2);
    if let Some(bad) = factors.iter().find(|f| f.dim() != dim) {
        return Err(Error::Config(format!(
            "all factors must share a dimension: found {} and {}",
            dim,
            bad.dim()
        )));
    }
    let mut acc = ScaledMatrix::identity(dim)?;
    for f in factors {
        acc.apply(f);
    }
    Ok(acc)
}

/// Logs of the larger-magnitude member of each reciprocal pair of a cell with
/// unit determinant, computed without leaving the scaled representation.
///
/// For dim 2 the pair follows from the trace. For dim 4 the characteristic
/// polynomial must be palindromic; the eigenvalues themselves come from a
/// Schur decomposition, because two bands can be degenerate (regular dual-V
/// lattices) and polynomial roots lose half their digits at a double root.
pub fn reciprocal_log_eigenvalues(t: &ScaledMatrix) -> Result<Vec<C64>> {
    let s = t.log_scale;
    let m = &t.matrix;
    let dim = m.dim();
    let c = m.char_coeffs();
    let eps = f64::EPSILON;

    // det(T) = det(M)·e^{dim·s}; rounding in det(M) is amplified by the same factor.
    let det_true = (c[dim - 1].ln() + dim as f64 * s).exp();
    let det_res = (det_true - ONE).norm();
    let det_floor = 64.0 * eps * (dim as f64 * s).exp();
    if !(det_res <= DET_TOL + det_floor) {
        return Err(Error::Degeneracy { what: "determinant differs from 1".into(), residual: det_res });
    }

    if dim == 2 {
        // λ = e^s (ν ± √(ν² − 4e^{−2s}))/2 with ν the trace; pick the larger root.
        let (nu, e2) = (c[0], (-2.0 * s).exp());
        let disc = (nu * nu - 4.0 * e2).sqrt();
        let (p, q) = (nu + disc, nu - disc);
        let big = if p.norm() >= q.norm() { p } else { q };
        return Ok(vec![(big * 0.5).ln() + s]);
    }

    let res = (c[2] * (2.0 * s).exp() - c[0]).norm();
    let tol = PALINDROME_TOL * (1.0 + c[0].norm()) + 64.0 * eps * (2.0 * s).exp();
    if !(res <= tol) {
        return Err(Error::Degeneracy { what: "characteristic polynomial is not palindromic".into(), residual: res });
    }
    let mut mu = eigenvalues4(m)?;
    mu.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let logs: Vec<C64> = mu.iter().map(|z| z.ln() + s).collect();

    // Moduli order the pairs as λ_A ≥ λ_B ≥ 1/λ_B ≥ 1/λ_A. When the smallest
    // eigenvalue is resolved, match pairs by λλ' = 1 instead, which also
    // handles lossless cells whose eigenvalues all sit on the unit circle.
    let mut pairing = [(0, 3), (1, 2)];
    if mu[3].norm() > 1e-6 * mu[0].norm() {
        let wrap = |z: C64| C64::new(z.re, (z.im + PI).rem_euclid(2.0 * PI) - PI).norm();
        let cost = |p: &[(usize, usize); 2]| p.iter().map(|&(i, j)| wrap(logs[i] + logs[j])).sum::<f64>();
        for cand in [[(0, 1), (2, 3)], [(0, 2), (1, 3)]] {
            if cost(&cand) < cost(&pairing) {
                pairing = cand;
            }
        }
    }
    Ok(pairing.iter().map(|&(i, j)| if logs[i].re >= logs[j].re { logs[i] } else { logs[j] }).collect())
}

fn eigenvalues4(m: &CMatrix) -> Result<[C64; 4]> {
    let a = nalgebra::Matrix4::<C64>::from_fn(|i, j| m[(i, j)]);
    let ev = nalgebra::Schur::try_new(a, f64::EPSILON, 10_000)
        .and_then(|sch| sch.eigenvalues())
        .ok_or_else(|| Error::Degeneracy { what: "Schur iteration did not converge".into(), residual: f64::NAN })?;
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Reciprocal eigenvalue pairs (λ, 1/λ) of a unit-determinant cell.
pub fn reciprocal_eigenvalues(t: &CMatrix) -> Result<Vec<(C64, C64)>> {
    let logs = reciprocal_log_eigenvalues(&ScaledMatrix::new(*t))?;
    Ok(logs.into_iter().map(|l| (l.exp(), (-l).exp())).collect())
}

/// (1/π)∫ f(z) e^{−2iℓz} dz over one period [−π/2, π/2], trapezoid rule.
pub fn fourier_coefficient_with(f: impl Fn(f64) -> C64, l: i64, nodes: usize) -> Result<C64> {
    if nodes == 0 {
        return Err(Error::Config("quadrature needs at least one node".into()));
    }
    let h = PI / nodes as f64;
    let mut sum = ZERO;
    for k in 0..nodes {
        let z = -PI / 2.0 + k as f64 * h;
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::Pole(format!("non-finite integrand at k0*z = {z}")));
        }
        sum += v * C64::from_polar(1.0, -2.0 * l as f64 * z);
    }
    Ok(sum / nodes as f64)
}

pub fn fourier_coefficient_quadrature(f: impl Fn(f64) -> C64, l: i64) -> Result<C64> {
    fourier_coefficient_with(f, l, QUADRATURE_NODES)
}

/// Least-squares slope of ln δ against ln(Re q).
///
/// Slope 1 is a linear band, 2 a quadratic band, 4/3 the infinite-order Λ law.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::Domain(format!("power-law fit needs >= 5 samples, got {}", samples.len())));
    }
    if let Some(&(d, q)) = samples.iter().find(|(d, q)| !(*d > 0.0 && *q > 0.0)) {
        return Err(Error::Domain(format!("power-law fit needs positive samples, got ({d:e}, {q:e})")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo < std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(Error::Domain("power-law fit needs samples spanning a decade in Re q".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    linspace(a, b, n).into_iter().map(|x| 10f64.powf(x)).collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Complex least squares for y ≈ Σ_k c_k·basis_k(x), via normal equations.
/// Used for mass fits where the basis is tiny (two columns).
pub fn complex_least_squares(rows: &[Vec<C64>], y: &[C64]) -> Result<Vec<C64>> {
    let p = rows.first().map(|r| r.len()).unwrap_or(0);
    if p == 0 || rows.len() < p || rows.len() != y.len() {
        return Err(Error::Domain("least squares needs at least as many rows as unknowns".into()));
    }
    // Column scaling keeps the normal matrix well conditioned.
    let scale: Vec<f64> = (0..p)
        .map(|k| rows.iter().map(|r| r[k].norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE))
        .collect();
    let mut a = vec![vec![ZERO; p + 1]; p];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..p {
            let ri = r[i] / scale[i];
            for j in 0..p {
                a[i][j] += ri.conj() * r[j] / scale[j];
            }
            a[i][p] += ri.conj() * yi;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..p {
        let piv = (col..p).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap_or(col);
        a.swap(col, piv);
        if a[col][col].norm() == 0.0 {
            return Err(Error::Domain("least-squares system is singular".into()));
        }
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for k in col..=p {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
        }
    }
    let mut x = vec![ZERO; p];
    for i in (0..p).rev() {
        let s: C64 = (i + 1..p).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][p] - s) / a[i][i];
    }
    Ok(x.into_iter().zip(scale).map(|(v, s)| v / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_product_has_zero_scale() {
        let id = CMatrix::identity(2).unwrap();
        let p = scaled_product(&[id, id, id]).unwrap();
        assert_eq!(p.matrix, id);
        assert_eq!(p.log_scale, 0.0);
    }

    #[test]
    fn scalar_factor_lands_in_log_scale() {
        let f = CMatrix::identity(2).unwrap().scale(c(1e6, 0.0));
        let p = scaled_product(&[f, f, f]).unwrap();
        let true_scale = p.log_scale + p.matrix[(0, 0)].re.ln();
        assert!((true_scale - 3.0 * 1e6f64.ln()).abs() < 1e-12);
        assert!(p.matrix.max_abs() <= RESCALE_BOUND && p.matrix.max_abs() >= 1.0 / RESCALE_BOUND);
        assert!((p.matrix[(0, 1)]).norm() == 0.0);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = CMatrix::identity(2).unwrap();
        let b = CMatrix::identity(4).unwrap();
        assert!(matches!(scaled_product(&[a, b]), Err(Error::Config(_))));
        assert!(CMatrix::zeros(3).is_err());
    }

    #[test]
    fn minus_identity_gives_degenerate_pair() {
        let m = CMatrix::identity(2).unwrap().scale(c(-1.0, 0.0));
        let pairs = reciprocal_eigenvalues(&m).unwrap();
        assert_eq!(pairs.len(), 1);
        let (l, r) = pairs[0];
        assert!((l - c(-1.0, 0.0)).norm() < 1e-12 && (r - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_pair() {
        let m = CMatrix::scalar2(c(2.0, 0.0), ZERO, ZERO, c(0.5, 0.0));
        let (l, r) = reciprocal_eigenvalues(&m).unwrap()[0];
        assert!((l - c(2.0, 0.0)).norm() < 1e-14);
        assert!((r - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn non_unimodular_matrix_is_flagged() {
        let m = CMatrix::scalar2(c(2.0, 0.0), ZERO, ZERO, c(2.0, 0.0));
        assert!(matches!(reciprocal_eigenvalues(&m), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn non_palindromic_4x4_is_flagged() {
        // Unit determinant but eigenvalues {2, 3, 1/6, 1} do not pair up.
        let mut m = CMatrix::zeros(4).unwrap();
        for (i, v) in [2.0, 3.0, 1.0 / 6.0, 1.0].into_iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        assert!(matches!(reciprocal_eigenvalues(&m), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn det4_matches_char_coeffs() {
        let mut m = CMatrix::zeros(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c((i * 4 + j) as f64 * 0.3 - 1.0, (i as f64 - j as f64) * 0.7);
            }
        }
        m[(0, 0)] += c(3.0, 0.0);
        // Gaussian elimination as an independent determinant.
        let mut a: Vec<Vec<C64>> = (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect();
        let mut det = ONE;
        for col in 0..4 {
            let piv = (col..4).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let f = a[r][col] / a[col][col];
                for k in col..4 {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
            }
        }
        assert!((m.det() - det).norm() < 1e-10 * det.norm().max(1.0));
    }

    #[test]
    fn constant_integrand_coefficients() {
        let one = |_: f64| ONE;
        assert!((fourier_coefficient_quadrature(one, 0).unwrap() - ONE).norm() < 1e-14);
        assert!(fourier_coefficient_quadrature(one, 1).unwrap().norm() < 1e-14);
    }

    #[test]
    fn pole_in_integrand_is_reported() {
        let f = |z: f64| ONE / C64::new(z.cos().powi(2) - 1.0, 0.0);
        // cos²z = 1 at z = 0, which is a node of the grid.
        assert!(matches!(fourier_coefficient_quadrature(f, 0), Err(Error::Pole(_))));
    }

    #[test]
    fn power_law_slopes() {
        let lin: Vec<_> = logspace(1e-4, 1e-2, 20).into_iter().map(|q| (q, q)).collect();
        let quad: Vec<_> = logspace(1e-4, 1e-2, 20).into_iter().map(|q| (q * q, q)).collect();
        assert!((fit_power_law(&lin).unwrap() - 1.0).abs() < 1e-6);
        assert!((fit_power_law(&quad).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn power_law_rejects_bad_samples() {
        let s = vec![(1.0, 1.0); 4];
        assert!(fit_power_law(&s).is_err());
        let mut s: Vec<_> = logspace(1e-4, 1e-2, 10).into_iter().map(|q| (q, q)).collect();
        s[3].1 = -1.0;
        assert!(matches!(fit_power_law(&s), Err(Error::Domain(_))));
        let narrow: Vec<_> = linspace(1.0, 2.0, 10).into_iter().map(|q| (q, q)).collect();
        assert!(fit_power_law(&narrow).is_err());
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let (a, b) = (c(2.0, -1.0), c(-0.5, 0.25));
        let xs = linspace(1e-6, 1e-4, 30);
        let rows: Vec<Vec<C64>> = xs.iter().map(|&x| vec![c(x, 0.0), c(x * x, 0.0)]).collect();
        let y: Vec<C64> = xs.iter().map(|&x| a * x + b * x * x).collect();
        let sol = complex_least_squares(&rows, &y).unwrap();
        assert!((sol[0] - a).norm() < 1e-9);
        assert!((sol[1] - b).norm() < 1e-6);
    }
}
