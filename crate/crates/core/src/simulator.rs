//! Missing-data corruption: masked historical rows and missing events on
//! new evaluations.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::data::{DataError, Dataset, Domain, PartialPoint};
use crate::objective::{Objective, ObjectiveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid missing model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Corruption process. An event hits a new evaluation with probability
/// `rho`; it perturbs `m ~ U{1..v}` coordinates by `+-eta * range` and
/// masks them in the stored record.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingModel {
    pub rho: f64,
    pub eta: f64,
    pub v: usize,
    /// Fraction of historical rows with missing coordinates.
    pub hist_frac: f64,
    /// Per-dimension replacement for `eta`.
    pub eta_per_dim: Option<Vec<f64>>,
}

impl Default for MissingModel {
    fn default() -> Self {
        Self {
            rho: 0.25,
            eta: 0.05,
            v: 1,
            hist_frac: 0.8,
            eta_per_dim: None,
        }
    }
}

impl MissingModel {
    pub fn validate(&self, dims: usize) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidModel(msg));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} outside [0, 1]", self.rho));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta = {} must be >= 0", self.eta));
        }
        if self.v == 0 || self.v >= dims {
            return bad(format!("v = {} must satisfy 1 <= v < d = {dims}", self.v));
        }
        if !(0.0..=1.0).contains(&self.hist_frac) {
            return bad(format!("hist_frac = {} outside [0, 1]", self.hist_frac));
        }
        if let Some(etas) = &self.eta_per_dim {
            if etas.len() != dims {
                return bad(format!("eta_per_dim has {} entries, expected {dims}", etas.len()));
            }
            if etas.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return bad("eta_per_dim entries must be >= 0".into());
            }
        }
        Ok(())
    }

    pub fn eta_for(&self, dim: usize) -> f64 {
        self.eta_per_dim.as_ref().map_or(self.eta, |e| e[dim])
    }
}

/// Outcome of one evaluation request.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingEvent {
    /// Where the objective was actually evaluated.
    pub actual: Vec<f64>,
    /// What the record keeps: the suggestion with affected dims masked.
    pub stored: PartialPoint,
    pub event: bool,
}

/// Decides whether a missing event hits `x`. Always draws the coin, the
/// count, a shuffle of all dims and one sign per dim, in that order, so the
/// stream position never depends on the outcome or on `eta`.
pub fn apply_missing_event<R: Rng + ?Sized>(
    x: &[f64],
    domain: &Domain,
    mm: &MissingModel,
    rng: &mut R,
) -> Result<MissingEvent, SimError> {
    let d = domain.dims();
    mm.validate(d)?;
    domain.normalize_point(x)?;
    let event = rng.random::<f64>() < mm.rho;
    let m = rng.random_range(1..=mm.v);
    let mut dims: Vec<usize> = (0..d).collect();
    dims.shuffle(rng);
    let signs: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
    if !event {
        return Ok(MissingEvent {
            actual: x.to_vec(),
            stored: PartialPoint::complete(x.to_vec()),
            event: false,
        });
    }
    let mut actual = x.to_vec();
    let mut mask = vec![true; d];
    for &i in &dims[..m] {
        let step = mm.eta_for(i) * domain.range(i);
        let shifted = if signs[i] { x[i] + step } else { x[i] - step };
        actual[i] = shifted.clamp(domain.lower()[i], domain.upper()[i]);
        mask[i] = false;
    }
    Ok(MissingEvent {
        actual,
        stored: PartialPoint::new(x.to_vec(), mask)?,
        event: true,
    })
}

/// `n` uniform points with their true values, then `floor(hist_frac * n)`
/// rows chosen without replacement lose `m ~ U{1..v}` coordinates each.
pub fn gen_historical<R: Rng + ?Sized>(
    f: &dyn Objective,
    n: usize,
    mm: &MissingModel,
    rng: &mut R,
) -> Result<Dataset, SimError> {
    let domain = f.domain();
    let d = domain.dims();
    mm.validate(d)?;
    if n == 0 {
        return Err(SimError::InvalidModel("need at least one historical point".into()));
    }
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|i| domain.denormalize_value(i, rng.random::<f64>())).collect())
        .collect();
    let ys = points.iter().map(|x| f.evaluate(x)).collect::<Result<Vec<_>, _>>()?;
    let mut masks = vec![vec![true; d]; n];
    let corrupted = (mm.hist_frac * n as f64).floor() as usize;
    for row in index::sample(rng, n, corrupted.min(n)) {
        let m = rng.random_range(1..=mm.v);
        for dim in index::sample(rng, d, m) {
            masks[row][dim] = false;
        }
    }
    let rows = points
        .into_iter()
        .zip(masks)
        .zip(ys)
        .map(|((x, mask), y)| Ok((PartialPoint::new(x, mask)?, y)))
        .collect::<Result<Vec<_>, DataError>>()?;
    Ok(Dataset::from_rows(domain.clone(), rows)?)
}
