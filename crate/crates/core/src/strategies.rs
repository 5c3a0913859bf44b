//! Suggestion engines for BOMI and the baselines, and the outer
//! suggest / evaluate / augment loop.
//!
//! All steps work on the unit cube: inputs are normalized before fitting and
//! the chosen point is mapped back to the objective's domain.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::acquisition::{self, AcqError, BetaParams, BetaSchedule, MaximizerConfig};
use crate::bpmf::{self, BpmfConfig, BpmfError};
use crate::data::{DataError, Dataset, Domain, PartialPoint};
use crate::gp::{GpConfig, GpError, GpModel};
use crate::imputers::{self, ImputeError, ImputerKind};
use crate::objective::{Objective, ObjectiveError};
use crate::rng::{self, RngStream};
use crate::simulator::{self, MissingModel, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    Bomi,
    ImputationBo(ImputerKind),
    DropBo,
    SuggestBo,
}

impl StrategyKind {
    pub const NAMES: [&'static str; 7] = [
        "bomi",
        "imputation-mean",
        "imputation-mode",
        "imputation-knn",
        "imputation-bpmf",
        "dropbo",
        "suggestbo",
    ];

    /// Whether a stored row enters this strategy's training data.
    /// `from_history` marks rows of the initial dataset.
    pub fn retains(&self, point: &PartialPoint, from_history: bool) -> bool {
        match self {
            StrategyKind::Bomi | StrategyKind::ImputationBo(_) => true,
            StrategyKind::DropBo => point.is_complete(),
            StrategyKind::SuggestBo => !from_history || point.is_complete(),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Bomi => write!(f, "bomi"),
            StrategyKind::ImputationBo(kind) => write!(f, "imputation-{}", kind.name()),
            StrategyKind::DropBo => write!(f, "dropbo"),
            StrategyKind::SuggestBo => write!(f, "suggestbo"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    /// KNN parses with `k = 5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bomi" => StrategyKind::Bomi,
            "imputation-mean" => StrategyKind::ImputationBo(ImputerKind::Mean),
            "imputation-mode" => StrategyKind::ImputationBo(ImputerKind::Mode),
            "imputation-knn" => StrategyKind::ImputationBo(ImputerKind::Knn { k: 5 }),
            "imputation-bpmf" => StrategyKind::ImputationBo(ImputerKind::BpmfPoint),
            "dropbo" => StrategyKind::DropBo,
            "suggestbo" => StrategyKind::SuggestBo,
            other => {
                return Err(format!(
                    "unknown strategy {other:?} (expected one of {})",
                    Self::NAMES.join(", ")
                ))
            }
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("no complete rows to train on")]
    NoCompleteRows,
    #[error("objective returned {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bpmf(#[from] BpmfError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Acq(#[from] AcqError),
    #[error(transparent)]
    Impute(#[from] ImputeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Everything a single suggestion needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct BoConfig {
    pub gp: GpConfig,
    pub bpmf: BpmfConfig,
    pub beta: BetaParams,
    /// Weight of the between-completion spread in UCB-MI.
    pub beta_alpha: f64,
    pub maximizer: MaximizerConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            gp: GpConfig::default(),
            bpmf: BpmfConfig::default(),
            beta: BetaParams::default(),
            beta_alpha: 1.0,
            maximizer: MaximizerConfig::default(),
        }
    }
}

/// Randomness owned by one run: BPMF draws and acquisition search.
#[derive(Debug, Clone)]
pub struct StepRngs {
    pub gibbs: ChaCha8Rng,
    pub acq: ChaCha8Rng,
}

impl StepRngs {
    pub fn new(streams: &RngStream) -> Self {
        Self {
            gibbs: streams.substream(rng::GIBBS),
            acq: streams.substream(rng::ACQ_OPT),
        }
    }
}

fn fit_complete(ds: &Dataset, cfg: &GpConfig) -> Result<GpModel, StrategyError> {
    Ok(GpModel::fit(ds.normalized_inputs()?, &ds.y(), cfg)?)
}

/// Maximizes UCB-MI over `models` on the unit cube, seeding the search with
/// `extra`, and returns the point in raw units.
fn maximize_models(
    models: &[GpModel],
    domain: &Domain,
    extra: &[Vec<f64>],
    t: usize,
    cfg: &BoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, StrategyError> {
    let d = domain.dims();
    let beta = BetaSchedule::new(cfg.beta, d)?.beta(t)?;
    let unit = Domain::unit(d);
    let best = acquisition::maximize(
        |x| acquisition::ucb_mi(models, beta, cfg.beta_alpha, x),
        &unit,
        extra,
        &cfg.maximizer,
        rng,
    )?;
    Ok(domain.denormalize_point(&best.x))
}

/// Standard UCB step on a complete dataset.
pub fn ucb_step(
    train: &Dataset,
    extra: &[Vec<f64>],
    t: usize,
    cfg: &BoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, StrategyError> {
    if train.is_empty() {
        return Err(StrategyError::NoCompleteRows);
    }
    let model = fit_complete(train, &cfg.gp)?;
    maximize_models(&[model], train.domain(), extra, t, cfg, rng)
}

/// BOMI: `Q` BPMF completions, one GP per completion, UCB-MI argmax.
/// `t` is the 1-based iteration index used by the beta schedule.
pub fn bomi_step(ds: &Dataset, t: usize, cfg: &BoConfig, rngs: &mut StepRngs) -> Result<Vec<f64>, StrategyError> {
    if ds.is_empty() {
        return Err(StrategyError::NoCompleteRows);
    }
    let completions = bpmf::sample_completions(ds, &cfg.bpmf, &mut rngs.gibbs)?;
    let mut models: Vec<GpModel> = Vec::with_capacity(completions.len());
    for (q, c) in completions.iter().enumerate() {
        // identical completions give identical fits
        match completions[..q].iter().position(|p| p == c) {
            Some(p) => models.push(models[p].clone()),
            None => models.push(fit_complete(c, &cfg.gp)?),
        }
    }
    let extra = ds.complete_normalized_inputs();
    maximize_models(&models, ds.domain(), &extra, t, cfg, &mut rngs.acq)
}

/// Single imputation followed by a standard UCB step.
pub fn imputation_bo_step(
    ds: &Dataset,
    imputer: ImputerKind,
    t: usize,
    cfg: &BoConfig,
    rngs: &mut StepRngs,
) -> Result<Vec<f64>, StrategyError> {
    if ds.is_empty() {
        return Err(StrategyError::NoCompleteRows);
    }
    let filled = imputers::impute(imputer, ds, &cfg.bpmf, &mut rngs.gibbs)?;
    let extra = ds.complete_normalized_inputs();
    ucb_step(&filled, &extra, t, cfg, &mut rngs.acq)
}

/// UCB on the complete rows only.
pub fn dropbo_step(ds: &Dataset, t: usize, cfg: &BoConfig, rngs: &mut StepRngs) -> Result<Vec<f64>, StrategyError> {
    let train = ds.drop_incomplete();
    let extra = ds.complete_normalized_inputs();
    ucb_step(&train, &extra, t, cfg, &mut rngs.acq)
}

/// Training set for SuggestBO: incomplete rows without a logged suggestion
/// are dropped, the others take the missing coordinates from their
/// suggestion.
pub fn suggestbo_dataset(ds: &Dataset, suggestions: &[Option<Vec<f64>>]) -> Result<Dataset, StrategyError> {
    if suggestions.len() != ds.len() {
        return Err(StrategyError::InvalidConfig(format!(
            "suggestion log has {} entries for {} rows",
            suggestions.len(),
            ds.len()
        )));
    }
    let mut out = Dataset::new(ds.domain().clone());
    for (row, sugg) in ds.rows().iter().zip(suggestions) {
        if row.point.is_complete() {
            out.push(row.point.clone(), row.y)?;
        } else if let Some(s) = sugg {
            let values = (0..row.point.dims()).map(|j| row.point.get(j).unwrap_or(s[j])).collect();
            out.push(PartialPoint::complete(values), row.y)?;
        }
    }
    Ok(out)
}

pub fn suggestbo_step(
    ds: &Dataset,
    suggestions: &[Option<Vec<f64>>],
    t: usize,
    cfg: &BoConfig,
    rngs: &mut StepRngs,
) -> Result<Vec<f64>, StrategyError> {
    let train = suggestbo_dataset(ds, suggestions)?;
    let extra = ds.complete_normalized_inputs();
    ucb_step(&train, &extra, t, cfg, &mut rngs.acq)
}

/// One suggestion from `kind`.
pub fn suggest(
    kind: StrategyKind,
    ds: &Dataset,
    suggestions: &[Option<Vec<f64>>],
    t: usize,
    cfg: &BoConfig,
    rngs: &mut StepRngs,
) -> Result<Vec<f64>, StrategyError> {
    match kind {
        StrategyKind::Bomi => bomi_step(ds, t, cfg, rngs),
        StrategyKind::ImputationBo(imp) => imputation_bo_step(ds, imp, t, cfg, rngs),
        StrategyKind::DropBo => dropbo_step(ds, t, cfg, rngs),
        StrategyKind::SuggestBo => suggestbo_step(ds, suggestions, t, cfg, rngs),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: usize,
    pub missing: MissingModel,
    pub bo: BoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 80,
            missing: MissingModel::default(),
            bo: BoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based iteration.
    pub iter: usize,
    pub suggested: Vec<f64>,
    /// The record added to the dataset.
    pub stored: PartialPoint,
    pub y: f64,
    pub event: bool,
    /// Whether the row enters this strategy's training data and best-so-far.
    pub retained: bool,
    /// The strategy had nothing to train on and a uniform point was used.
    pub fallback: bool,
    pub best_y: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub strategy: StrategyKind,
    pub initial: Dataset,
    /// Best value in the initial data.
    pub initial_best: f64,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn final_best(&self) -> f64 {
        self.records.last().map_or(self.initial_best, |r| r.best_y)
    }

    /// Best-so-far after iterations `0..=T`.
    pub fn best_curve(&self) -> Vec<f64> {
        std::iter::once(self.initial_best)
            .chain(self.records.iter().map(|r| r.best_y))
            .collect()
    }

    pub fn fallbacks(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }
}

fn uniform_point<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> Vec<f64> {
    (0..domain.dims())
        .map(|i| domain.denormalize_value(i, rng.random::<f64>()))
        .collect()
}

/// Runs `cfg.iterations` rounds of suggest, evaluate with possible missing
/// event, augment. Randomness comes from the `missing-events`, `gibbs` and
/// `acq-opt` substreams of `streams`.
pub fn run_loop(
    f: &dyn Objective,
    kind: StrategyKind,
    cfg: &RunConfig,
    init: Dataset,
    streams: &RngStream,
) -> Result<Trace, StrategyError> {
    if cfg.iterations == 0 {
        return Err(StrategyError::InvalidConfig("iterations must be >= 1".into()));
    }
    let domain = f.domain().clone();
    if init.domain() != &domain {
        return Err(StrategyError::InvalidConfig(
            "initial data and objective have different domains".into(),
        ));
    }
    cfg.missing.validate(domain.dims())?;
    let mut events = streams.substream(rng::MISSING_EVENTS);
    let mut rngs = StepRngs::new(streams);

    let initial_best = init.rows().iter().map(|r| r.y).fold(f64::NEG_INFINITY, f64::max);
    let mut ds = init.clone();
    let mut suggestions: Vec<Option<Vec<f64>>> = vec![None; ds.len()];
    let mut best = initial_best;
    let mut records = Vec::with_capacity(cfg.iterations);

    for t in 1..=cfg.iterations {
        let start = Instant::now();
        let (suggested, fallback) = match suggest(kind, &ds, &suggestions, t, &cfg.bo, &mut rngs) {
            Ok(x) => (x, false),
            Err(StrategyError::NoCompleteRows) => (uniform_point(&domain, &mut rngs.acq), true),
            Err(e) => return Err(e),
        };
        let outcome = simulator::apply_missing_event(&suggested, &domain, &cfg.missing, &mut events)?;
        let y = f.evaluate(&outcome.actual)?;
        if !y.is_finite() {
            return Err(StrategyError::NonFiniteObjective {
                point: outcome.actual,
                value: y,
            });
        }
        let retained = kind.retains(&outcome.stored, false);
        if retained {
            best = best.max(y);
        }
        ds.push(outcome.stored.clone(), y)?;
        suggestions.push(Some(suggested.clone()));
        records.push(TraceRecord {
            iter: t,
            suggested,
            stored: outcome.stored,
            y,
            event: outcome.event,
            retained,
            fallback,
            best_y: best,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(Trace {
        strategy: kind,
        initial: init,
        initial_best,
        records,
    })
}

/// Generates `n_init` historical points from the `init-data` substream and
/// runs the loop.
pub fn run_seeded(
    f: &dyn Objective,
    kind: StrategyKind,
    cfg: &RunConfig,
    n_init: usize,
    seed: u64,
) -> Result<Trace, StrategyError> {
    let streams = RngStream::new(seed);
    let init = simulator::gen_historical(f, n_init, &cfg.missing, &mut streams.substream(rng::INIT_DATA))?;
    run_loop(f, kind, cfg, init, &streams)
}
