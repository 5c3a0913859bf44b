//! Black-box objectives to be maximized.

use thiserror::Error;

use crate::benchfns::BenchFunction;
use crate::data::Domain;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("objective failed: {0}")]
pub struct ObjectiveError(pub String);

pub trait Objective: Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> &Domain;

    /// Value at a complete, in-domain point.
    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError>;
}

impl Objective for BenchFunction {
    fn name(&self) -> &str {
        BenchFunction::name(self)
    }

    fn domain(&self) -> &Domain {
        BenchFunction::domain(self)
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.eval(x).map_err(|e| ObjectiveError(e.to_string()))
    }
}

/// Wraps a closure as an objective.
pub struct FnObjective<F> {
    name: String,
    domain: Domain,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(name: impl Into<String>, domain: Domain, f: F) -> Self {
        Self {
            name: name.into(),
            domain,
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok((self.f)(x))
    }
}
