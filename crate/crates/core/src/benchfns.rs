//! Synthetic benchmark objectives, negated so that larger is better.

use thiserror::Error;

use crate::data::{DataError, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownBest {
    pub location: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct BenchFunction {
    name: &'static str,
    domain: Domain,
    f: fn(&[f64]) -> f64,
    best_location: Option<Vec<f64>>,
}

impl BenchFunction {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Evaluates at a complete in-domain point.
    pub fn eval(&self, x: &[f64]) -> Result<f64, BenchError> {
        self.domain.normalize_point(x)?;
        Ok((self.f)(x))
    }

    /// Evaluates without the domain check.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn known_best(&self) -> Option<KnownBest> {
        self.best_location.as_ref().map(|loc| KnownBest {
            location: loc.clone(),
            value: (self.f)(loc),
        })
    }
}

pub fn eggholder(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let f = -(x2 + 47.0) * (x2 + x1 / 2.0 + 47.0).abs().sqrt().sin() - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin();
    -f
}

/// Product form `prod_i sum_{j=1..5} j cos((j+1) x_i + j)`, negated.
pub fn schubert(x: &[f64]) -> f64 {
    let f: f64 = x
        .iter()
        .map(|&xi| (1..=5).map(|j| j as f64 * ((j as f64 + 1.0) * xi + j as f64).cos()).sum::<f64>())
        .product();
    -f
}

pub fn alpine(x: &[f64]) -> f64 {
    -x.iter().map(|&xi| (xi * xi.sin() + 0.1 * xi).abs()).sum::<f64>()
}

pub fn schwefel(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|&xi| xi * xi.abs().sqrt().sin()).sum();
    -(418.9829 * x.len() as f64 - s)
}

/// The four benchmark objectives.
pub fn registry() -> Vec<BenchFunction> {
    let cube = |d, lo, hi| Domain::cube(d, lo, hi).expect("valid bounds");
    vec![
        BenchFunction {
            name: "eggholder2",
            domain: cube(2, -512.0, 512.0),
            f: eggholder,
            best_location: Some(vec![512.0, 404.2319]),
        },
        BenchFunction {
            name: "schubert4",
            domain: cube(4, -10.0, 10.0),
            f: schubert,
            best_location: None,
        },
        BenchFunction {
            name: "alpine5",
            domain: cube(5, -10.0, 10.0),
            f: alpine,
            best_location: Some(vec![0.0; 5]),
        },
        BenchFunction {
            name: "schwefel5",
            domain: cube(5, -500.0, 500.0),
            f: schwefel,
            best_location: Some(vec![420.9687; 5]),
        },
    ]
}

pub fn lookup(name: &str) -> Result<BenchFunction, BenchError> {
    registry()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| BenchError::UnknownFunction(name.to_string()))
}

pub fn eval_function(name: &str, x: &[f64]) -> Result<f64, BenchError> {
    lookup(name)?.eval(x)
}
