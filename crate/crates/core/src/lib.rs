//! Bayesian optimization for black-box functions whose inputs can go
//! missing, both in historical data and during evaluation.
//!
//! The surrogate is an exact GP ([`gp`]). Missing coordinates get a
//! predictive distribution from Bayesian probabilistic matrix factorization
//! of `[X, y]` ([`bpmf`]); BOMI draws several completions, fits one GP per
//! completion and maximizes the aggregated UCB-MI acquisition
//! ([`acquisition`]). The imputation and drop/suggest baselines live in
//! [`imputers`] and [`strategies`]; [`benchfns`] and [`simulator`] provide
//! the synthetic benchmark protocol.

pub mod acquisition;
pub mod benchfns;
pub mod bpmf;
pub mod data;
pub mod gp;
pub mod imputers;
pub mod objective;
pub mod rng;
pub mod simulator;
pub mod strategies;

pub use data::{DataError, Dataset, Domain, MaskedMatrix, PartialPoint};
pub use objective::{Objective, ObjectiveError};
pub use rng::RngStream;
