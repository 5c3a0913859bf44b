//! Bayesian probabilistic matrix factorization of `R = [X, y]` by Gibbs
//! sampling.
//!
//! `R ~ U V` with Gaussian priors on the rows of `U` and the columns of `V`,
//! whose means and precisions carry Normal-Wishart hyperpriors. Each Gibbs
//! step resamples the hyperparameters, then every row factor given `V`, then
//! every column factor given the new `U`. Missing cells are predicted by
//! `N(U_i . V_j, xi)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use thiserror::Error;

use crate::data::{DataError, Dataset, MaskedMatrix, PartialPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpmfError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("row {0} has no observed cells")]
    EmptyRow(usize),
    #[error("column {0} has no observed cells")]
    EmptyColumn(usize),
    #[error("row order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpmfConfig {
    /// Latent dimension `K`.
    pub latent_dim: usize,
    /// Observation variance `xi` on the normalized scale.
    pub xi: f64,
    /// Gibbs steps before the first retained state.
    pub burn_in: usize,
    /// Number of completions `Q`.
    pub completions: usize,
    /// Gibbs steps between retained states.
    pub thinning: usize,
    /// Run one chain per completion instead of one shared chain.
    pub independent_chains: bool,
    /// Fill missing cells with the predictive mean instead of a draw.
    pub mean_fill: bool,
}

impl Default for BpmfConfig {
    fn default() -> Self {
        Self {
            latent_dim: 15,
            xi: 0.01,
            burn_in: 40,
            completions: 5,
            thinning: 1,
            independent_chains: false,
            mean_fill: false,
        }
    }
}

impl BpmfConfig {
    pub fn validate(&self) -> Result<(), BpmfError> {
        let bad = |msg: &str| Err(BpmfError::InvalidConfig(msg.into()));
        if self.latent_dim == 0 {
            return bad("latent dimension must be >= 1");
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return bad("xi must be positive");
        }
        if self.burn_in == 0 {
            return bad("burn-in must be >= 1");
        }
        if self.completions == 0 {
            return bad("number of completions must be >= 1");
        }
        if self.thinning == 0 {
            return bad("thinning must be >= 1");
        }
        Ok(())
    }
}

/// Normal-Wishart hyperprior `{mu0, beta0, W0, nu0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalWishart {
    pub mu0: DVector<f64>,
    pub beta0: f64,
    pub w0: DMatrix<f64>,
    pub nu0: f64,
}

impl NormalWishart {
    /// `mu0 = 0, beta0 = 2, W0 = I, nu0 = K`.
    pub fn standard(k: usize) -> Self {
        Self {
            mu0: DVector::zeros(k),
            beta0: 2.0,
            w0: DMatrix::identity(k, k),
            nu0: k as f64,
        }
    }
}

/// Gaussian in mean/precision form.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl Gaussian {
    pub fn standard(k: usize) -> Self {
        Self {
            mean: DVector::zeros(k),
            precision: DMatrix::identity(k, k),
        }
    }

    /// One draw `mean + L^-T z` with `precision = L L^T`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>, BpmfError> {
        let k = self.mean.len();
        let chol = self
            .precision
            .clone()
            .cholesky()
            .ok_or(BpmfError::NotPositiveDefinite("conditional precision"))?;
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(BpmfError::NotPositiveDefinite("conditional precision"))?;
        Ok(&self.mean + u)
    }
}

/// Latent factors and their current hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    /// `N x K`, one row per data row.
    pub u: DMatrix<f64>,
    /// `K x C`, one column per matrix column.
    pub v: DMatrix<f64>,
    pub theta_u: Gaussian,
    pub theta_v: Gaussian,
}

impl FactorState {
    pub fn predict(&self, i: usize, j: usize) -> f64 {
        self.u.row(i).transpose().dot(&self.v.column(j))
    }

    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.u * &self.v
    }
}

/// Predictive distribution of one missing cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissingCell {
    pub row: usize,
    pub col: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixCompletions {
    /// Completed matrices; observed cells are copied, missing cells are
    /// filled and clamped to `[0, 1]`.
    pub filled: Vec<DMatrix<f64>>,
    /// The chain state each completion was drawn from.
    pub states: Vec<FactorState>,
}

/// Posterior of one factor vector given its observed cells:
/// precision `P = Lambda + (1/xi) sum f f^T`, mean
/// `P^-1 ((1/xi) sum f r + Lambda mu)`.
pub fn row_conditional(
    prior: &Gaussian,
    observations: impl IntoIterator<Item = (DVector<f64>, f64)>,
    xi: f64,
) -> Result<Gaussian, BpmfError> {
    let (precision, rhs) = conditional_terms(prior, observations, xi);
    let chol = precision
        .clone()
        .cholesky()
        .ok_or(BpmfError::NotPositiveDefinite("conditional precision"))?;
    let mean = chol.solve(&rhs);
    Ok(Gaussian { mean, precision })
}

fn conditional_terms(
    prior: &Gaussian,
    observations: impl IntoIterator<Item = (DVector<f64>, f64)>,
    xi: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let tau = 1.0 / xi;
    let mut precision = prior.precision.clone();
    let mut rhs = &prior.precision * &prior.mean;
    for (f, r) in observations {
        precision.ger(tau, &f, &f, 1.0);
        rhs.axpy(tau * r, &f, 1.0);
    }
    (precision, rhs)
}

/// One draw from [`row_conditional`] with a single factorization; consumes
/// the same normals as `row_conditional(..).sample(rng)`.
fn draw_conditional<R: Rng + ?Sized>(
    prior: &Gaussian,
    observations: impl IntoIterator<Item = (DVector<f64>, f64)>,
    xi: f64,
    rng: &mut R,
) -> Result<DVector<f64>, BpmfError> {
    let (precision, rhs) = conditional_terms(prior, observations, xi);
    let k = rhs.len();
    let chol = precision
        .cholesky()
        .ok_or(BpmfError::NotPositiveDefinite("conditional precision"))?;
    let mean = chol.solve(&rhs);
    let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or(BpmfError::NotPositiveDefinite("conditional precision"))?;
    Ok(mean + u)
}

/// Wishart draw by the Bartlett decomposition.
pub fn sample_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>, BpmfError> {
    let k = scale.nrows();
    let l = scale
        .clone()
        .cholesky()
        .ok_or(BpmfError::NotPositiveDefinite("Wishart scale"))?
        .unpack();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
        let chi = ChiSquared::new(dof - i as f64)
            .map_err(|_| BpmfError::InvalidConfig(format!("Wishart dof {dof} too small for K = {k}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
    }
    let la = l * a;
    let w = &la * la.transpose();
    Ok(symmetrize(w))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Hyperparameter conditional given the factor vectors, summed in the order
/// supplied.
fn sample_hyper<R: Rng + ?Sized>(
    prior: &NormalWishart,
    factors: &[DVector<f64>],
    rng: &mut R,
) -> Result<Gaussian, BpmfError> {
    let k = prior.mu0.len();
    let n = factors.len() as f64;
    let mut mean = DVector::zeros(k);
    for f in factors {
        mean += f;
    }
    mean /= n;
    let mut scatter = DMatrix::zeros(k, k);
    for f in factors {
        let dev = f - &mean;
        scatter.ger(1.0, &dev, &dev, 1.0);
    }
    let diff = &prior.mu0 - &mean;
    let w0_inv = prior
        .w0
        .clone()
        .try_inverse()
        .ok_or(BpmfError::NotPositiveDefinite("W0"))?;
    let mut w_inv = w0_inv + scatter;
    w_inv.ger(prior.beta0 * n / (prior.beta0 + n), &diff, &diff, 1.0);
    let w = w_inv
        .cholesky()
        .ok_or(BpmfError::NotPositiveDefinite("Wishart posterior scale"))?
        .inverse();
    let lambda = sample_wishart(&symmetrize(w), prior.nu0 + n, rng)?;
    let beta_post = prior.beta0 + n;
    let mu_post = (&prior.mu0 * prior.beta0 + &mean * n) / beta_post;
    let mu = Gaussian {
        mean: mu_post,
        precision: &lambda * beta_post,
    }
    .sample(rng)?;
    Ok(Gaussian {
        mean: mu,
        precision: lambda,
    })
}

/// Gibbs machinery for one matrix, visiting rows in a fixed order.
struct Chain<'a> {
    matrix: &'a MaskedMatrix,
    cfg: &'a BpmfConfig,
    prior: NormalWishart,
    order: Vec<usize>,
    row_obs: Vec<Vec<usize>>,
    col_obs: Vec<Vec<usize>>,
}

impl<'a> Chain<'a> {
    fn new(matrix: &'a MaskedMatrix, cfg: &'a BpmfConfig, order: Vec<usize>) -> Result<Self, BpmfError> {
        cfg.validate()?;
        let (n, c) = (matrix.nrows(), matrix.ncols());
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(BpmfError::BadOrder(n));
        }
        let row_obs: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..c).filter(|&j| matrix.is_observed(i, j)).collect())
            .collect();
        if let Some(i) = row_obs.iter().position(Vec::is_empty) {
            return Err(BpmfError::EmptyRow(i));
        }
        let col_obs: Vec<Vec<usize>> = (0..c)
            .map(|j| order.iter().copied().filter(|&i| matrix.is_observed(i, j)).collect())
            .collect();
        if let Some(j) = col_obs.iter().position(Vec::is_empty) {
            return Err(BpmfError::EmptyColumn(j));
        }
        Ok(Self {
            matrix,
            cfg,
            prior: NormalWishart::standard(cfg.latent_dim),
            order,
            row_obs,
            col_obs,
        })
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> FactorState {
        let k = self.cfg.latent_dim;
        let (n, c) = (self.matrix.nrows(), self.matrix.ncols());
        let mut u = DMatrix::zeros(n, k);
        for &i in &self.order {
            for t in 0..k {
                u[(i, t)] = 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let mut v = DMatrix::zeros(k, c);
        for j in 0..c {
            for t in 0..k {
                v[(t, j)] = 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        FactorState {
            u,
            v,
            theta_u: Gaussian::standard(k),
            theta_v: Gaussian::standard(k),
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: &FactorState, rng: &mut R) -> Result<FactorState, BpmfError> {
        let rows: Vec<DVector<f64>> = self
            .order
            .iter()
            .map(|&i| state.u.row(i).transpose())
            .collect();
        let cols: Vec<DVector<f64>> = (0..state.v.ncols()).map(|j| state.v.column(j).into_owned()).collect();
        let theta_u = sample_hyper(&self.prior, &rows, rng)?;
        let theta_v = sample_hyper(&self.prior, &cols, rng)?;

        let mut u = state.u.clone();
        for &i in &self.order {
            let obs = self.row_obs[i]
                .iter()
                .map(|&j| (state.v.column(j).into_owned(), self.matrix.values[(i, j)]));
            let draw = draw_conditional(&theta_u, obs, self.cfg.xi, rng)?;
            u.set_row(i, &draw.transpose());
        }
        let mut v = state.v.clone();
        for j in 0..v.ncols() {
            let obs = self.col_obs[j]
                .iter()
                .map(|&i| (u.row(i).transpose(), self.matrix.values[(i, j)]));
            let draw = draw_conditional(&theta_v, obs, self.cfg.xi, rng)?;
            v.set_column(j, &draw);
        }
        Ok(FactorState {
            u,
            v,
            theta_u,
            theta_v,
        })
    }

    fn fill<R: Rng + ?Sized>(&self, state: &FactorState, rng: &mut R) -> DMatrix<f64> {
        let mut out = self.matrix.values.clone();
        let sd = self.cfg.xi.sqrt();
        for &i in &self.order {
            for j in 0..out.ncols() {
                if self.matrix.is_observed(i, j) {
                    continue;
                }
                let mean = state.predict(i, j);
                let x = if self.cfg.mean_fill {
                    mean
                } else {
                    mean + sd * rng.sample::<f64, _>(StandardNormal)
                };
                out[(i, j)] = x.clamp(0.0, 1.0);
            }
        }
        out
    }

    fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MatrixCompletions, BpmfError> {
        let q = self.cfg.completions;
        let mut filled = Vec::with_capacity(q);
        let mut states = Vec::with_capacity(q);
        if self.cfg.independent_chains {
            for _ in 0..q {
                let state = self.burn_in(rng)?;
                filled.push(self.fill(&state, rng));
                states.push(state);
            }
        } else {
            let mut state = self.burn_in(rng)?;
            for k in 0..q {
                if k > 0 {
                    for _ in 0..self.cfg.thinning {
                        state = self.step(&state, rng)?;
                    }
                }
                filled.push(self.fill(&state, rng));
                states.push(state.clone());
            }
        }
        Ok(MatrixCompletions { filled, states })
    }

    fn burn_in<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FactorState, BpmfError> {
        let mut state = self.init(rng);
        for _ in 0..self.cfg.burn_in {
            state = self.step(&state, rng)?;
        }
        Ok(state)
    }
}

/// Random initial state: factor entries `N(0, 0.1^2)`, standard hyperparameters.
pub fn init_state<R: Rng + ?Sized>(
    matrix: &MaskedMatrix,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<FactorState, BpmfError> {
    Ok(Chain::new(matrix, cfg, (0..matrix.nrows()).collect())?.init(rng))
}

/// One full Gibbs sweep.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &FactorState,
    matrix: &MaskedMatrix,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<FactorState, BpmfError> {
    Chain::new(matrix, cfg, (0..matrix.nrows()).collect())?.step(state, rng)
}

/// Runs the chain and returns `cfg.completions` filled copies of `matrix`.
pub fn complete_matrix<R: Rng + ?Sized>(
    matrix: &MaskedMatrix,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<MatrixCompletions, BpmfError> {
    complete_matrix_in_order(matrix, cfg, (0..matrix.nrows()).collect(), rng)
}

/// Like [`complete_matrix`], but every loop over rows (initialization,
/// hyperparameter sums, row updates, column sums, fills) follows `order`.
/// Running a row-permuted matrix in storage order consumes randomness
/// exactly like running the original in the permuted order.
pub fn complete_matrix_in_order<R: Rng + ?Sized>(
    matrix: &MaskedMatrix,
    cfg: &BpmfConfig,
    order: Vec<usize>,
    rng: &mut R,
) -> Result<MatrixCompletions, BpmfError> {
    Chain::new(matrix, cfg, order)?.run(rng)
}

/// `Q` complete datasets. Missing inputs are filled from the chain and
/// mapped back to the raw domain; observed inputs and all `y` are copied.
pub fn sample_completions<R: Rng + ?Sized>(
    ds: &Dataset,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<Vec<Dataset>, BpmfError> {
    cfg.validate()?;
    let matrix = ds.as_matrix()?;
    if matrix.missing_cells() == 0 {
        return Ok(vec![ds.clone(); cfg.completions]);
    }
    let runs = complete_matrix(&matrix, cfg, rng)?;
    runs.filled
        .iter()
        .map(|filled| fill_dataset(ds, filled))
        .collect()
}

fn fill_dataset(ds: &Dataset, filled: &DMatrix<f64>) -> Result<Dataset, BpmfError> {
    let domain = ds.domain();
    let rows = ds.rows().iter().enumerate().map(|(i, row)| {
        let mut point = row.point.clone();
        for j in 0..domain.dims() {
            if !point.is_observed(j) {
                point = point.with_value(j, domain.denormalize_value(j, filled[(i, j)]));
            }
        }
        debug_assert!(point.is_complete());
        (point, row.y)
    });
    let out: Vec<(PartialPoint, f64)> = rows.collect();
    Ok(Dataset::from_rows(domain.clone(), out)?)
}

/// `(mean, xi)` for every missing cell, from the last retained state, on the
/// normalized scale.
pub fn missing_distributions<R: Rng + ?Sized>(
    ds: &Dataset,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<Vec<MissingCell>, BpmfError> {
    cfg.validate()?;
    let matrix = ds.as_matrix()?;
    if matrix.missing_cells() == 0 {
        return Ok(Vec::new());
    }
    let runs = complete_matrix(&matrix, cfg, rng)?;
    let state = runs.states.last().expect("at least one completion");
    let mut cells = Vec::with_capacity(matrix.missing_cells());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if !matrix.is_observed(i, j) {
                cells.push(MissingCell {
                    row: i,
                    col: j,
                    mean: state.predict(i, j),
                    variance: cfg.xi,
                });
            }
        }
    }
    Ok(cells)
}
