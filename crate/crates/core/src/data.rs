//! Bounded search spaces and partially observed data.
//!
//! Every model in this crate works in the unit cube: inputs are mapped to
//! `[0, 1]^d` with [`Domain::normalize`] and objective values are standardized
//! before they reach a GP or the matrix factorization.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("domain must have at least one dimension")]
    EmptyDomain,
    #[error("bounds length mismatch: {lower} lower vs {upper} upper")]
    BoundsLength { lower: usize, upper: usize },
    #[error("dimension {dim}: lower bound {lower} must be strictly below upper bound {upper}")]
    InvalidBounds { dim: usize, lower: f64, upper: f64 },
    #[error("expected {expected} dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {dim} = {value} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("coordinate {dim} is observed but not finite ({value})")]
    NonFiniteCoordinate { dim: usize, value: f64 },
    #[error("coordinate {dim} is missing")]
    Unobserved { dim: usize },
    #[error("objective value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row {row} has missing coordinates")]
    IncompleteRow { row: usize },
}

/// Axis-aligned box `[lower_i, upper_i]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DataError> {
        if lower.len() != upper.len() {
            return Err(DataError::BoundsLength {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(DataError::EmptyDomain);
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(DataError::InvalidBounds {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` repeated over `dims` dimensions.
    pub fn cube(dims: usize, lower: f64, upper: f64) -> Result<Self, DataError> {
        Self::new(vec![lower; dims], vec![upper; dims])
    }

    pub fn unit(dims: usize) -> Self {
        Self::cube(dims, 0.0, 1.0).expect("unit cube needs dims >= 1")
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Value range `r_i = upper_i - lower_i`.
    pub fn range(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    fn check_coordinate(&self, dim: usize, value: f64) -> Result<(), DataError> {
        if !value.is_finite() {
            return Err(DataError::NonFiniteCoordinate { dim, value });
        }
        if value < self.lower[dim] || value > self.upper[dim] {
            return Err(DataError::OutOfBounds {
                dim,
                value,
                lower: self.lower[dim],
                upper: self.upper[dim],
            });
        }
        Ok(())
    }

    pub fn normalize_value(&self, dim: usize, value: f64) -> f64 {
        (value - self.lower[dim]) / self.range(dim)
    }

    /// Inverse of [`Domain::normalize_value`], clamped so rounding never
    /// leaves the box.
    pub fn denormalize_value(&self, dim: usize, unit: f64) -> f64 {
        (self.lower[dim] + unit * self.range(dim)).clamp(self.lower[dim], self.upper[dim])
    }

    /// Maps every observed coordinate into `[0, 1]`; the mask is unchanged.
    pub fn normalize(&self, p: &PartialPoint) -> Result<PartialPoint, DataError> {
        self.check_dims(p.dims())?;
        let mut values = Vec::with_capacity(p.dims());
        for (dim, v) in p.iter().enumerate() {
            values.push(match v {
                Some(v) => {
                    self.check_coordinate(dim, v)?;
                    Some(self.normalize_value(dim, v))
                }
                None => None,
            });
        }
        Ok(PartialPoint::from_options(values))
    }

    pub fn denormalize(&self, p: &PartialPoint) -> Result<PartialPoint, DataError> {
        self.check_dims(p.dims())?;
        let values = p
            .iter()
            .enumerate()
            .map(|(dim, v)| v.map(|u| self.denormalize_value(dim, u)))
            .collect();
        Ok(PartialPoint::from_options(values))
    }

    pub fn normalize_point(&self, x: &[f64]) -> Result<Vec<f64>, DataError> {
        self.check_dims(x.len())?;
        x.iter()
            .enumerate()
            .map(|(dim, &v)| {
                self.check_coordinate(dim, v)?;
                Ok(self.normalize_value(dim, v))
            })
            .collect()
    }

    pub fn denormalize_point(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .enumerate()
            .map(|(dim, &u)| self.denormalize_value(dim, u))
            .collect()
    }

    fn check_dims(&self, got: usize) -> Result<(), DataError> {
        if got != self.dims() {
            return Err(DataError::DimensionMismatch {
                expected: self.dims(),
                got,
            });
        }
        Ok(())
    }
}

/// A point whose coordinates may be missing (`?`).
///
/// Missing coordinates hold no value; [`PartialPoint::try_get`] on one is an
/// error rather than a silent NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPoint {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl PartialPoint {
    pub fn complete(values: Vec<f64>) -> Self {
        let mask = vec![true; values.len()];
        Self { values, mask }
    }

    /// `mask[i] == true` means coordinate `i` is observed.
    pub fn new(values: Vec<f64>, mask: Vec<bool>) -> Result<Self, DataError> {
        if values.len() != mask.len() {
            return Err(DataError::DimensionMismatch {
                expected: values.len(),
                got: mask.len(),
            });
        }
        let mut values = values;
        for (dim, (v, &observed)) in values.iter_mut().zip(&mask).enumerate() {
            if observed {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteCoordinate { dim, value: *v });
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(Self { values, mask })
    }

    pub fn from_options(values: Vec<Option<f64>>) -> Self {
        let mask = values.iter().map(Option::is_some).collect();
        let values = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        Self { values, mask }
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_observed(&self, dim: usize) -> bool {
        self.mask[dim]
    }

    pub fn get(&self, dim: usize) -> Option<f64> {
        self.mask[dim].then(|| self.values[dim])
    }

    pub fn try_get(&self, dim: usize) -> Result<f64, DataError> {
        self.get(dim).ok_or(DataError::Unobserved { dim })
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.dims()).map(|d| self.get(d))
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    /// All coordinates, if none is missing.
    pub fn as_complete(&self) -> Option<&[f64]> {
        self.is_complete().then_some(self.values.as_slice())
    }

    /// Returns a copy with coordinate `dim` set (and marked observed).
    pub fn with_value(&self, dim: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[dim] = value;
        out.mask[dim] = true;
        out
    }
}

impl fmt::Display for PartialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match v {
                Some(v) => write!(f, "{v}")?,
                None => write!(f, "?")?,
            }
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: PartialPoint,
    pub y: f64,
}

/// Observations `(x, y)` over a [`Domain`], in raw (unnormalized) units.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: Domain,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(
        domain: Domain,
        rows: impl IntoIterator<Item = (PartialPoint, f64)>,
    ) -> Result<Self, DataError> {
        let mut ds = Self::new(domain);
        for (point, y) in rows {
            ds.push(point, y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, point: PartialPoint, y: f64) -> Result<(), DataError> {
        if !y.is_finite() {
            return Err(DataError::NonFiniteValue(y));
        }
        self.domain.check_dims(point.dims())?;
        for (dim, v) in point.iter().enumerate() {
            if let Some(v) = v {
                self.domain.check_coordinate(dim, v)?;
            }
        }
        self.rows.push(Row { point, y });
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    /// True iff no row has a missing coordinate.
    pub fn complete(&self) -> bool {
        self.rows.iter().all(|r| r.point.is_complete())
    }

    pub fn missing_cells(&self) -> usize {
        self.rows.iter().map(|r| r.point.missing_count()).sum()
    }

    pub fn incomplete_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.point.is_complete()).count()
    }

    pub fn y(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }

    /// Keeps only fully observed rows.
    pub fn drop_incomplete(&self) -> Dataset {
        Dataset {
            domain: self.domain.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.point.is_complete())
                .cloned()
                .collect(),
        }
    }

    /// New dataset with the same domain and the given row subset/order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            domain: self.domain.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Normalized inputs of the fully observed rows, in storage order.
    pub fn complete_normalized_inputs(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .filter_map(|r| r.point.as_complete())
            .map(|x| {
                x.iter()
                    .enumerate()
                    .map(|(d, &v)| self.domain.normalize_value(d, v))
                    .collect()
            })
            .collect()
    }

    /// Normalized inputs of every row; fails on the first incomplete row.
    pub fn normalized_inputs(&self) -> Result<Vec<Vec<f64>>, DataError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(row, r)| {
                let x = r.point.as_complete().ok_or(DataError::IncompleteRow { row })?;
                self.domain.normalize_point(x)
            })
            .collect()
    }

    /// The matrix view `R = [X, y]`: normalized inputs in the first `M`
    /// columns, standardized `y` in the last. y cells are always observed.
    pub fn as_matrix(&self) -> Result<MaskedMatrix, DataError> {
        if self.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let n = self.len();
        let m = self.dims();
        let (y_std, _, _) = standardize(&self.y());
        let mut values = DMatrix::zeros(n, m + 1);
        let mut observed = DMatrix::from_element(n, m + 1, true);
        for (i, row) in self.rows.iter().enumerate() {
            for j in 0..m {
                match row.point.get(j) {
                    Some(v) => values[(i, j)] = self.domain.normalize_value(j, v),
                    None => observed[(i, j)] = false,
                }
            }
            values[(i, m)] = y_std[i];
        }
        Ok(MaskedMatrix { values, observed })
    }
}

/// Dense matrix with a per-cell observed indicator. Values at unobserved
/// cells are placeholders and are never read by the factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    pub values: DMatrix<f64>,
    pub observed: DMatrix<bool>,
}

impl MaskedMatrix {
    pub fn new(values: DMatrix<f64>, observed: DMatrix<bool>) -> Self {
        assert_eq!(values.shape(), observed.shape(), "mask shape mismatch");
        Self { values, observed }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn missing_cells(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[(i, j)]
    }
}

/// Zero-mean, unit-variance rescaling. Returns `(scaled, mean, scale)`;
/// `scale` falls back to 1 when the population variance is zero.
pub fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    if y.is_empty() {
        return (Vec::new(), 0.0, 1.0);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / scale).collect(), mean, scale)
}
