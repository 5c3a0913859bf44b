//! Single-imputation baselines: column mean, column mode, k-nearest
//! neighbours and one BPMF draw.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::bpmf::{self, BpmfConfig, BpmfError};
use crate::data::{DataError, Dataset, PartialPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImputerKind {
    Mean,
    Mode,
    Knn { k: usize },
    BpmfPoint,
}

impl ImputerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ImputerKind::Mean => "mean",
            ImputerKind::Mode => "mode",
            ImputerKind::Knn { .. } => "knn",
            ImputerKind::BpmfPoint => "bpmf",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImputeError {
    #[error("column {0} has missing cells but no observed cell")]
    EmptyColumn(usize),
    #[error("k must be >= 1")]
    InvalidK,
    #[error(transparent)]
    Bpmf(#[from] BpmfError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Dispatches on `kind`; `rng` and `cfg` are only used by
/// [`ImputerKind::BpmfPoint`].
pub fn impute<R: Rng + ?Sized>(
    kind: ImputerKind,
    ds: &Dataset,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<Dataset, ImputeError> {
    match kind {
        ImputerKind::Mean => impute_mean(ds),
        ImputerKind::Mode => impute_mode(ds),
        ImputerKind::Knn { k } => impute_knn(ds, k),
        ImputerKind::BpmfPoint => impute_bpmf_point(ds, cfg, rng),
    }
}

fn observed_column(ds: &Dataset, j: usize) -> Vec<f64> {
    ds.rows().iter().filter_map(|r| r.point.get(j)).collect()
}

/// Fills column by column with `fill(j)`, which is only called for columns
/// that actually have missing cells.
fn fill_columns(
    ds: &Dataset,
    mut fill: impl FnMut(usize) -> Result<f64, ImputeError>,
) -> Result<Dataset, ImputeError> {
    let d = ds.dims();
    let mut fills = vec![None; d];
    for (j, slot) in fills.iter_mut().enumerate() {
        if ds.rows().iter().any(|r| !r.point.is_observed(j)) {
            *slot = Some(fill(j)?);
        }
    }
    let rows = ds.rows().iter().map(|r| {
        let values = (0..d).map(|j| r.point.get(j).or(fills[j]).expect("filled")).collect();
        (PartialPoint::complete(values), r.y)
    });
    Ok(Dataset::from_rows(ds.domain().clone(), rows.collect::<Vec<_>>())?)
}

/// Each missing cell takes the mean of the observed cells in its column.
pub fn impute_mean(ds: &Dataset) -> Result<Dataset, ImputeError> {
    fill_columns(ds, |j| {
        let col = observed_column(ds, j);
        if col.is_empty() {
            return Err(ImputeError::EmptyColumn(j));
        }
        Ok(col.iter().sum::<f64>() / col.len() as f64)
    })
}

/// Each missing cell takes the most frequent observed value of its column,
/// with values bucketed by rounding to 3 decimals on the normalized scale.
/// Ties go to the smallest bucket; the fill is the smallest observed value
/// in the winning bucket.
pub fn impute_mode(ds: &Dataset) -> Result<Dataset, ImputeError> {
    let domain = ds.domain();
    fill_columns(ds, |j| {
        let mut buckets: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
        for v in observed_column(ds, j) {
            let key = (domain.normalize_value(j, v) * 1000.0).round() as i64;
            let e = buckets.entry(key).or_insert((0, v));
            e.0 += 1;
            e.1 = e.1.min(v);
        }
        let mut best: Option<(usize, f64)> = None;
        for &(count, v) in buckets.values() {
            if best.is_none_or(|(c, _)| count > c) {
                best = Some((count, v));
            }
        }
        best.map(|(_, v)| v).ok_or(ImputeError::EmptyColumn(j))
    })
}

/// Partial Euclidean distance on the normalized scale over the dimensions
/// both points observe, scaled by `sqrt(d / shared)`. Infinite when nothing
/// is shared.
pub fn partial_distance(a: &PartialPoint, b: &PartialPoint) -> f64 {
    let d = a.dims();
    let mut shared = 0usize;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            shared += 1;
        }
    }
    if shared == 0 {
        f64::INFINITY
    } else {
        (sum * d as f64 / shared as f64).sqrt()
    }
}

/// Each missing cell `(i, j)` takes the mean of column `j` over the `k`
/// rows nearest to row `i` among those observing `j`. Distances use
/// normalized inputs only; ties go to the lower row index.
pub fn impute_knn(ds: &Dataset, k: usize) -> Result<Dataset, ImputeError> {
    if k == 0 {
        return Err(ImputeError::InvalidK);
    }
    let d = ds.dims();
    let normalized: Vec<PartialPoint> = ds
        .rows()
        .iter()
        .map(|r| ds.domain().normalize(&r.point))
        .collect::<Result<_, _>>()?;
    for j in 0..d {
        let missing = ds.rows().iter().any(|r| !r.point.is_observed(j));
        if missing && !ds.rows().iter().any(|r| r.point.is_observed(j)) {
            return Err(ImputeError::EmptyColumn(j));
        }
    }
    let mut rows = Vec::with_capacity(ds.len());
    for (i, row) in ds.rows().iter().enumerate() {
        let mut values = Vec::with_capacity(d);
        for j in 0..d {
            if let Some(v) = row.point.get(j) {
                values.push(v);
                continue;
            }
            let mut donors: Vec<(f64, usize)> = ds
                .rows()
                .iter()
                .enumerate()
                .filter(|(r, other)| *r != i && other.point.is_observed(j))
                .map(|(r, _)| (partial_distance(&normalized[i], &normalized[r]), r))
                .collect();
            donors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let take = donors.len().min(k);
            let sum: f64 = donors[..take]
                .iter()
                .map(|&(_, r)| ds.rows()[r].point.get(j).expect("donor observes column"))
                .sum();
            values.push(sum / take as f64);
        }
        rows.push((PartialPoint::complete(values), row.y));
    }
    Ok(Dataset::from_rows(ds.domain().clone(), rows)?)
}

/// The single completion of a one-sample BPMF chain.
pub fn impute_bpmf_point<R: Rng + ?Sized>(
    ds: &Dataset,
    cfg: &BpmfConfig,
    rng: &mut R,
) -> Result<Dataset, ImputeError> {
    let cfg = BpmfConfig {
        completions: 1,
        ..cfg.clone()
    };
    let mut out = bpmf::sample_completions(ds, &cfg, rng)?;
    Ok(out.pop().expect("one completion"))
}
