//! Exact Gaussian-process regression with an isotropic squared-exponential
//! kernel.
//!
//! Models are built on normalized inputs. [`GpModel::fit`] standardizes the
//! targets and picks `(sigma2, lengthscale)` by maximizing the log marginal
//! likelihood on a log grid followed by coordinate-wise golden-section
//! refinement; [`GpModel::with_params`] conditions on the targets exactly as
//! given with fixed parameters.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::data::standardize;

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;
const MIN_NOISE2: f64 = 1e-8;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("point has {got} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel parameters must be positive and finite (sigma2 = {sigma2}, lengthscale = {lengthscale})")]
    InvalidKernel { sigma2: f64, lengthscale: f64 },
    #[error("noise variance {0} is below the 1e-8 floor or not finite")]
    InvalidNoise(f64),
    #[error("training values must be finite")]
    NonFiniteTarget,
    #[error("at least one training point is required")]
    NoData,
    #[error("covariance matrix not positive definite even with jitter {max_jitter}; duplicate rows: {duplicates:?}")]
    Singular {
        max_jitter: f64,
        duplicates: Vec<(usize, usize)>,
    },
}

/// `k(x, x') = sigma2 * exp(-|x - x'|^2 / (2 l^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma2: f64,
    lengthscale: f64,
}

impl KernelParams {
    pub fn new(sigma2: f64, lengthscale: f64) -> Result<Self, GpError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(sigma2) && ok(lengthscale)) {
            return Err(GpError::InvalidKernel {
                sigma2,
                lengthscale,
            });
        }
        Ok(Self {
            sigma2,
            lengthscale,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64, GpError> {
        if a.len() != b.len() {
            return Err(GpError::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(self.eval_sq_dist(sq_dist(a, b)))
    }

    #[inline]
    fn eval_sq_dist(&self, d2: f64) -> f64 {
        self.sigma2 * (-0.5 * d2 / (self.lengthscale * self.lengthscale)).exp()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    /// Measurement noise on the standardized scale.
    pub noise2: f64,
    pub lengthscale_bounds: (f64, f64),
    pub sigma2_bounds: (f64, f64),
    /// Points per axis of the log grid.
    pub grid_size: usize,
    /// Golden-section steps, alternating between the two parameters.
    pub refine_steps: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            noise2: 1e-6,
            lengthscale_bounds: (0.01, 2.0),
            sigma2_bounds: (0.1, 10.0),
            grid_size: 8,
            refine_steps: 20,
        }
    }
}

/// A conditioned GP posterior. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    dims: usize,
    train_x: Vec<Vec<f64>>,
    train_y: DVector<f64>,
    kernel: KernelParams,
    noise2: f64,
    jitter: f64,
    chol: DMatrix<f64>,
    // row-major copy of `chol` for the forward substitution in `posterior`
    chol_rows: Vec<f64>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl GpModel {
    /// The unconditioned prior over `dims`-dimensional inputs.
    pub fn prior(kernel: KernelParams, dims: usize) -> Self {
        Self {
            dims,
            train_x: Vec::new(),
            train_y: DVector::zeros(0),
            kernel,
            noise2: MIN_NOISE2,
            jitter: 0.0,
            chol: DMatrix::zeros(0, 0),
            chol_rows: Vec::new(),
            alpha: DVector::zeros(0),
            y_mean: 0.0,
            y_scale: 1.0,
        }
    }

    /// Conditions on `(x, y)` with fixed kernel parameters. `y` is used as is.
    pub fn with_params(
        x: Vec<Vec<f64>>,
        y: &[f64],
        kernel: KernelParams,
        noise2: f64,
    ) -> Result<Self, GpError> {
        if !(noise2.is_finite() && noise2 >= MIN_NOISE2) {
            return Err(GpError::InvalidNoise(noise2));
        }
        if x.is_empty() {
            return Err(GpError::NoData);
        }
        if x.len() != y.len() {
            return Err(GpError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFiniteTarget);
        }
        let dims = x[0].len();
        if let Some(bad) = x.iter().find(|p| p.len() != dims) {
            return Err(GpError::DimensionMismatch {
                expected: dims,
                got: bad.len(),
            });
        }
        let d2 = pairwise_sq_dists(&x);
        let (chol, jitter) = factorize(&d2, kernel, noise2).ok_or_else(|| GpError::Singular {
            max_jitter: JITTER_MAX,
            duplicates: duplicate_rows(&x),
        })?;
        let train_y = DVector::from_column_slice(y);
        let alpha = chol.solve(&train_y);
        let l = chol.l();
        let n = x.len();
        let mut chol_rows = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol_rows[i * n + j] = l[(i, j)];
            }
        }
        Ok(Self {
            dims,
            train_x: x,
            train_y,
            kernel,
            noise2,
            jitter,
            chol: l,
            chol_rows,
            alpha,
            y_mean: 0.0,
            y_scale: 1.0,
        })
    }

    /// Standardizes `y`, selects kernel parameters by maximum evidence and
    /// conditions on the result.
    pub fn fit(x: Vec<Vec<f64>>, y: &[f64], cfg: &GpConfig) -> Result<Self, GpError> {
        if x.is_empty() {
            return Err(GpError::NoData);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFiniteTarget);
        }
        let (y_std, y_mean, y_scale) = standardize(y);
        let kernel = select_kernel(&x, &y_std, cfg)?;
        let mut model = Self::with_params(x, &y_std, kernel, cfg.noise2)?;
        model.y_mean = y_mean;
        model.y_scale = y_scale;
        Ok(model)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn noise2(&self) -> f64 {
        self.noise2
    }

    /// Extra diagonal added on top of `noise2` to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + (noise2 + jitter) I`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    /// Training targets on the scale the model was conditioned on.
    pub fn train_y(&self) -> &DVector<f64> {
        &self.train_y
    }

    /// `(mean, scale)` used to standardize the targets in [`GpModel::fit`].
    pub fn y_standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    /// Posterior mean and variance at `x` on the conditioned scale.
    /// The variance is clamped at zero.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dims);
        let prior_var = self.kernel.sigma2;
        let n = self.train_x.len();
        if n == 0 {
            return (0.0, prior_var);
        }
        let mut v: Vec<f64> = self
            .train_x
            .iter()
            .map(|xi| self.kernel.eval_sq_dist(sq_dist(xi, x)))
            .collect();
        let mu = v.iter().zip(self.alpha.iter()).map(|(k, a)| k * a).sum();
        // forward substitution L v = k, in place
        for i in 0..n {
            let row = &self.chol_rows[i * n..i * n + i + 1];
            let mut s = v[i];
            for j in 0..i {
                s -= row[j] * v[j];
            }
            v[i] = s / row[i];
        }
        let var = prior_var - v.iter().map(|t| t * t).sum::<f64>();
        (mu, var.max(0.0))
    }

    /// `-1/2 y^T alpha - sum(log L_ii) - n/2 log(2 pi)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.train_x.len();
        if n == 0 {
            return 0.0;
        }
        evidence(&self.train_y, &self.alpha, &self.chol)
    }
}

fn evidence(y: &DVector<f64>, alpha: &DVector<f64>, l: &DMatrix<f64>) -> f64 {
    let n = y.len() as f64;
    let log_det_half: f64 = (0..y.len()).map(|i| l[(i, i)].ln()).sum();
    -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * (2.0 * PI).ln()
}

fn pairwise_sq_dists(x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let d = sq_dist(&x[i], &x[j]);
            d2[(i, j)] = d;
            d2[(j, i)] = d;
        }
    }
    d2
}

fn covariance(d2: &DMatrix<f64>, kernel: KernelParams, diag: f64) -> DMatrix<f64> {
    let mut k = d2.map(|d| kernel.eval_sq_dist(d));
    for i in 0..k.nrows() {
        k[(i, i)] += diag;
    }
    k
}

fn factorize(
    d2: &DMatrix<f64>,
    kernel: KernelParams,
    noise2: f64,
) -> Option<(Cholesky<f64, Dyn>, f64)> {
    cholesky_with_jitter(covariance(d2, kernel, noise2))
}

/// Cholesky of `a`, retrying with diagonal jitter `1e-8, 1e-7, ..., 1e-2`.
/// Returns the factor together with the jitter that was needed.
pub fn cholesky_with_jitter(a: DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = a.clone().cholesky() {
        return Some((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut b = a.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += jitter;
        }
        if let Some(c) = b.cholesky() {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

fn duplicate_rows(x: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] == x[j] {
                out.push((i, j));
            }
        }
    }
    out
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt().ln()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Grid search then coordinate-wise golden-section refinement of the log
/// marginal likelihood, both in log-parameter space.
fn select_kernel(x: &[Vec<f64>], y: &[f64], cfg: &GpConfig) -> Result<KernelParams, GpError> {
    let d2 = pairwise_sq_dists(x);
    let y = DVector::from_column_slice(y);
    let score = |log_l: f64, log_s: f64| -> f64 {
        let Ok(kernel) = KernelParams::new(log_s.exp(), log_l.exp()) else {
            return f64::NEG_INFINITY;
        };
        match factorize(&d2, kernel, cfg.noise2) {
            Some((chol, _)) => {
                let alpha = chol.solve(&y);
                let v = evidence(&y, &alpha, &chol.l());
                if v.is_finite() {
                    v
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => f64::NEG_INFINITY,
        }
    };

    let grid_l = log_space(cfg.lengthscale_bounds.0, cfg.lengthscale_bounds.1, cfg.grid_size.max(1));
    let grid_s = log_space(cfg.sigma2_bounds.0, cfg.sigma2_bounds.1, cfg.grid_size.max(1));
    let mut best = (grid_l[0], grid_s[0]);
    let mut best_val = f64::NEG_INFINITY;
    for &l in &grid_l {
        for &s in &grid_s {
            let v = score(l, s);
            if v > best_val {
                best_val = v;
                best = (l, s);
            }
        }
    }
    if best_val == f64::NEG_INFINITY {
        return Err(GpError::Singular {
            max_jitter: JITTER_MAX,
            duplicates: duplicate_rows(x),
        });
    }

    let spacing = |g: &[f64]| if g.len() > 1 { g[1] - g[0] } else { 0.0 };
    let bounds = [
        (cfg.lengthscale_bounds.0.ln(), cfg.lengthscale_bounds.1.ln()),
        (cfg.sigma2_bounds.0.ln(), cfg.sigma2_bounds.1.ln()),
    ];
    let steps = [spacing(&grid_l), spacing(&grid_s)];
    let mut brackets = [0usize, 1].map(|c| {
        let centre = if c == 0 { best.0 } else { best.1 };
        (
            (centre - steps[c]).max(bounds[c].0),
            (centre + steps[c]).min(bounds[c].1),
        )
    });
    for step in 0..cfg.refine_steps {
        let c = step % 2;
        let (a, b) = brackets[c];
        if b - a <= 0.0 {
            continue;
        }
        let x1 = b - INV_PHI * (b - a);
        let x2 = a + INV_PHI * (b - a);
        let eval = |t: f64| if c == 0 { score(t, best.1) } else { score(best.0, t) };
        let (f1, f2) = (eval(x1), eval(x2));
        brackets[c] = if f1 >= f2 { (a, x2) } else { (x1, b) };
        let (t, f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if f > best_val {
            best_val = f;
            if c == 0 {
                best.0 = t;
            } else {
                best.1 = t;
            }
        }
    }
    KernelParams::new(best.1.exp(), best.0.exp())
}
