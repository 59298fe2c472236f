//! Truncated Karhunen-Loeve expansions of random fields with separable
//! exponential covariance `kappa^2 prod_n exp(-|x_n - y_n| / l_n)`.
//!
//! One-dimensional eigenpairs are analytic: with half-width `A` and
//! `c = 1/l`, the frequencies solve `c cos(wA) - w sin(wA) = 0` (even
//! eigenfunctions) or `w cos(wA) + c sin(wA) = 0` (odd ones), and
//! `lambda = 2 l / (1 + l^2 w^2)`. Two-dimensional pairs are products.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{arg, Error, Result};
use crate::mesh::Point;

/// Number of leading eigenvalues forming the reference sum in
/// [`select_truncation`].
pub const REFERENCE_MODES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Eigenpair of the 1D exponential kernel on an interval.
#[derive(Clone, Copy, Debug)]
pub struct Eigen1d {
    pub lambda: f64,
    pub omega: f64,
    pub parity: Parity,
    /// Factor making the eigenfunction unit-norm in `L^2`.
    pub normalization: f64,
    pub center: f64,
}

impl Eigen1d {
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.omega * (x - self.center);
        self.normalization
            * match self.parity {
                Parity::Even => t.cos(),
                Parity::Odd => t.sin(),
            }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Internal(format!("no sign change bracketing a root in [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `count` largest eigenpairs of `exp(-|x-y|/l)` on `[a, b]`, sorted by
/// decreasing eigenvalue.
pub fn solve_1d_eigenpairs(ell: f64, a: f64, b: f64, count: usize) -> Result<Vec<Eigen1d>> {
    if !(ell > 0.0) || !ell.is_finite() {
        return arg(format!("correlation length must be positive, got {ell}"));
    }
    if count == 0 {
        return arg("need at least one eigenpair");
    }
    if !(a < b) {
        return arg(format!("invalid interval [{a}, {b}]"));
    }
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let c = 1.0 / ell;
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let kf = k as f64;
        // Brackets alternate: even root in (k pi, (k+1/2) pi)/A, odd root in
        // ((k+1/2) pi, (k+1) pi)/A, so frequencies come out ascending.
        let even = bisect(|w| c * (w * half).cos() - w * (w * half).sin(), kf * PI / half, (kf + 0.5) * PI / half)?;
        out.push(pair(ell, half, center, even, Parity::Even));
        if out.len() == count {
            break;
        }
        let odd = bisect(|w| w * (w * half).cos() + c * (w * half).sin(), (kf + 0.5) * PI / half, (kf + 1.0) * PI / half)?;
        out.push(pair(ell, half, center, odd, Parity::Odd));
        k += 1;
    }
    Ok(out)
}

fn pair(ell: f64, half: f64, center: f64, omega: f64, parity: Parity) -> Eigen1d {
    let lambda = 2.0 * ell / (1.0 + ell * ell * omega * omega);
    let s = (2.0 * omega * half).sin() / (2.0 * omega);
    let norm2 = match parity {
        Parity::Even => half + s,
        Parity::Odd => half - s,
    };
    Eigen1d { lambda, omega, parity, normalization: 1.0 / norm2.sqrt(), center }
}

/// Covariance description: standard deviation, per-axis correlation lengths
/// and the rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceSpec {
    pub kappa: f64,
    pub lengths: [f64; 2],
    pub bounds: [f64; 4],
}

impl CovarianceSpec {
    pub fn isotropic(kappa: f64, ell: f64, bounds: [f64; 4]) -> Self {
        Self { kappa, lengths: [ell, ell], bounds }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return arg(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        if !(self.lengths[0] > 0.0 && self.lengths[1] > 0.0) {
            return arg(format!("correlation lengths must be positive, got {:?}", self.lengths));
        }
        let [x0, x1, y0, y1] = self.bounds;
        if !(x0 < x1 && y0 < y1) {
            return arg(format!("invalid rectangle {:?}", self.bounds));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        let [x0, x1, y0, y1] = self.bounds;
        (x1 - x0) * (y1 - y0)
    }

    fn pools(&self, m: usize) -> Result<(Vec<Eigen1d>, Vec<Eigen1d>)> {
        let [x0, x1, y0, y1] = self.bounds;
        Ok((solve_1d_eigenpairs(self.lengths[0], x0, x1, m)?, solve_1d_eigenpairs(self.lengths[1], y0, y1, m)?))
    }
}

/// Tensor-product eigenpair `lambda = lx * ly`, `phi(x, y) = phi_x(x) phi_y(y)`.
#[derive(Clone, Copy, Debug)]
pub struct Mode2d {
    pub lambda: f64,
    /// Zero-based positions in the 1D pools.
    pub index: (usize, usize),
    pub fx: Eigen1d,
    pub fy: Eigen1d,
}

impl Mode2d {
    pub fn eval(&self, p: Point) -> f64 {
        self.fx.eval(p[0]) * self.fy.eval(p[1])
    }
}

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// `eta(x, xi) = mean(x) + kappa sum_k sqrt(lambda_k) phi_k(x) xi_k`.
#[derive(Clone)]
pub struct KLExpansion {
    pub mean: ScalarField,
    pub kappa: f64,
    pub modes: Vec<Mode2d>,
    /// Retained share of the total variance, `sum lambda_k / |D|`.
    pub captured_ratio: f64,
}

impl std::fmt::Debug for KLExpansion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KLExpansion")
            .field("kappa", &self.kappa)
            .field("modes", &self.modes.len())
            .field("captured_ratio", &self.captured_ratio)
            .finish()
    }
}

impl KLExpansion {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `kappa sqrt(lambda_k) phi_k(x)` for zero-based mode `k`.
    pub fn scaled_mode(&self, k: usize, p: Point) -> f64 {
        let m = &self.modes[k];
        self.kappa * m.lambda.sqrt() * m.eval(p)
    }

    pub fn with_mean(mut self, mean: ScalarField) -> Self {
        self.mean = mean;
        self
    }

    /// Scales the whole field (mean and fluctuation) by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        let mean = self.mean.clone();
        Self { mean: Arc::new(move |p| factor * mean(p)), kappa: self.kappa * factor, ..self }
    }
}

/// Evaluates one realization of the expansion.
pub fn evaluate_kl(kl: &KLExpansion, p: Point, xi: &[f64]) -> Result<f64> {
    if xi.len() != kl.len() {
        return arg(format!("realization has length {}, expansion has {} modes", xi.len(), kl.len()));
    }
    Ok((kl.mean)(p) + xi.iter().enumerate().map(|(k, x)| kl.scaled_mode(k, p) * x).sum::<f64>())
}

/// The `n` largest products of two decreasing 1D spectra. Ties go to the
/// lexicographically smaller index pair.
pub fn tensor_eigenpairs(px: &[Eigen1d], py: &[Eigen1d], n: usize) -> Result<Vec<Mode2d>> {
    if n > px.len() * py.len() {
        return Err(Error::Internal(format!("1D pools of size {}x{} cannot supply {n} modes", px.len(), py.len())));
    }
    let mut all: Vec<Mode2d> = Vec::with_capacity(px.len() * py.len());
    for (i, fx) in px.iter().enumerate() {
        for (j, fy) in py.iter().enumerate() {
            all.push(Mode2d { lambda: fx.lambda * fy.lambda, index: (i, j), fx: *fx, fy: *fy });
        }
    }
    let by_rank = |a: &Mode2d, b: &Mode2d| b.lambda.partial_cmp(&a.lambda).unwrap_or(Ordering::Equal).then(a.index.cmp(&b.index));
    if n < all.len() {
        all.select_nth_unstable_by(n, by_rank);
        all.truncate(n);
    }
    all.sort_by(by_rank);
    if let Some(last) = all.last() {
        // Any product involving an index past the pools is bounded by these.
        let bound = (px.last().unwrap().lambda * py[0].lambda).max(px[0].lambda * py.last().unwrap().lambda);
        let pools_exhaustive = n <= px.len().min(py.len());
        if !pools_exhaustive && last.lambda < bound {
            return Err(Error::Internal("1D eigenpair pool too small for the requested modes".into()));
        }
    }
    Ok(all)
}

/// The `n` leading 2D eigenpairs of the covariance, with zero mean field.
pub fn assemble_2d_eigenpairs(spec: &CovarianceSpec, n: usize) -> Result<KLExpansion> {
    spec.validate()?;
    // The n-th largest product never uses a 1D index beyond n.
    let (px, py) = spec.pools(n.max(1))?;
    let modes = tensor_eigenpairs(&px, &py, n)?;
    let captured_ratio = modes.iter().map(|m| m.lambda).sum::<f64>() / spec.area();
    Ok(KLExpansion { mean: Arc::new(|_| 0.0), kappa: spec.kappa, modes, captured_ratio })
}

/// Smallest `N` whose leading eigenvalue sum exceeds `ratio` times the sum
/// of the [`REFERENCE_MODES`] largest eigenvalues.
pub fn select_truncation(spec: &CovarianceSpec, ratio: f64) -> Result<usize> {
    spec.validate()?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return arg(format!("ratio must lie in (0, 1), got {ratio}"));
    }
    let (px, py) = spec.pools(REFERENCE_MODES)?;
    let modes = tensor_eigenpairs(&px, &py, REFERENCE_MODES)?;
    let total: f64 = modes.iter().map(|m| m.lambda).sum();
    let mut partial = 0.0;
    for (k, m) in modes.iter().enumerate() {
        partial += m.lambda;
        if partial > ratio * total {
            return Ok(k + 1);
        }
    }
    Ok(modes.len())
}
