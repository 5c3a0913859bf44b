//! Experiment configuration: a flat TOML table of keys, each with a
//! default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use bomi::acquisition::{BetaParams, MaximizerConfig};
use bomi::benchfns;
use bomi::bpmf::BpmfConfig;
use bomi::gp::GpConfig;
use bomi::imputers::ImputerKind;
use bomi::simulator::MissingModel;
use bomi::strategies::{BoConfig, RunConfig, StrategyKind};
use bomi::{Domain, Objective};
use serde::Deserialize;
use thiserror::Error;

use crate::external::ExternalObjective;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Raw file contents. Every key is optional except the objective.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub function: Option<String>,
    pub objective_command: Option<String>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub objective_timeout_secs: f64,

    pub strategies: Vec<String>,
    pub iterations: usize,
    pub repeats: usize,
    pub seed: u64,
    pub n_init: usize,

    pub rho: f64,
    pub eta: f64,
    pub v: usize,
    pub hist_frac: f64,
    pub eta_per_dim: Option<Vec<f64>>,

    pub bpmf_k: usize,
    pub xi: f64,
    pub gibbs_iters: usize,
    pub q: usize,
    pub thinning: usize,
    pub independent_chains: bool,
    pub mean_fill: bool,
    pub knn_k: usize,

    pub beta_alpha: f64,
    pub delta: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub beta_r: f64,
    pub noise2: f64,
    pub candidates: usize,
    pub refine_starts: usize,
    pub refine_iters: usize,

    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mm = MissingModel::default();
        let bpmf = BpmfConfig::default();
        let beta = BetaParams::default();
        let search = MaximizerConfig::default();
        Self {
            function: None,
            objective_command: None,
            lower: None,
            upper: None,
            objective_timeout_secs: 60.0,
            strategies: StrategyKind::NAMES.iter().map(|s| s.to_string()).collect(),
            iterations: 80,
            repeats: 10,
            seed: 0,
            n_init: 30,
            rho: mm.rho,
            eta: mm.eta,
            v: mm.v,
            hist_frac: mm.hist_frac,
            eta_per_dim: None,
            bpmf_k: bpmf.latent_dim,
            xi: bpmf.xi,
            gibbs_iters: bpmf.burn_in,
            q: bpmf.completions,
            thinning: bpmf.thinning,
            independent_chains: bpmf.independent_chains,
            mean_fill: bpmf.mean_fill,
            knn_k: 5,
            beta_alpha: 1.0,
            delta: beta.delta,
            beta_a: beta.a,
            beta_b: beta.b,
            beta_r: beta.radius,
            noise2: GpConfig::default().noise2,
            candidates: search.candidates,
            refine_starts: search.starts,
            refine_iters: search.iterations,
            out_dir: None,
            jobs: 1,
        }
    }
}

/// How to evaluate the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Builtin(String),
    External {
        command: String,
        domain: Domain,
        timeout: Duration,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Box<dyn Objective> {
        match self {
            ObjectiveSpec::Builtin(name) => Box::new(benchfns::lookup(name).expect("validated name")),
            ObjectiveSpec::External {
                command,
                domain,
                timeout,
            } => Box::new(ExternalObjective::new(command, domain.clone(), *timeout)),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            ObjectiveSpec::Builtin(name) => benchfns::lookup(name).expect("validated name").dims(),
            ObjectiveSpec::External { domain, .. } => domain.dims(),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub objective: ObjectiveSpec,
    pub strategies: Vec<StrategyKind>,
    pub run: RunConfig,
    pub repeats: usize,
    pub seed: u64,
    pub n_init: usize,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Resolves names and checks every bound; nothing runs before this
    /// succeeds.
    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        let objective = match (&self.function, &self.objective_command) {
            (Some(_), Some(_)) => return invalid("set either `function` or `objective_command`, not both"),
            (None, None) => return invalid("missing `function` (or `objective_command` with `lower`/`upper`)"),
            (Some(name), None) => {
                if benchfns::lookup(name).is_err() {
                    let names: Vec<_> = benchfns::registry().iter().map(|f| f.name()).collect();
                    return invalid(format!("unknown function {name:?} (expected one of {})", names.join(", ")));
                }
                ObjectiveSpec::Builtin(name.clone())
            }
            (None, Some(command)) => {
                let (Some(lower), Some(upper)) = (&self.lower, &self.upper) else {
                    return invalid("`objective_command` needs `lower` and `upper`");
                };
                if command.split_whitespace().next().is_none() {
                    return invalid("`objective_command` is empty");
                }
                let domain = Domain::new(lower.clone(), upper.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if !(self.objective_timeout_secs.is_finite() && self.objective_timeout_secs > 0.0) {
                    return invalid("`objective_timeout_secs` must be positive");
                }
                ObjectiveSpec::External {
                    command: command.clone(),
                    domain,
                    timeout: Duration::from_secs_f64(self.objective_timeout_secs),
                }
            }
        };
        if self.strategies.is_empty() {
            return invalid("`strategies` is empty");
        }
        if self.knn_k == 0 {
            return invalid("`knn_k` must be >= 1");
        }
        let mut strategies = Vec::with_capacity(self.strategies.len());
        for name in &self.strategies {
            let kind = match name.parse::<StrategyKind>().map_err(ConfigError::Invalid)? {
                StrategyKind::ImputationBo(ImputerKind::Knn { .. }) => {
                    StrategyKind::ImputationBo(ImputerKind::Knn { k: self.knn_k })
                }
                other => other,
            };
            if strategies.contains(&kind) {
                return invalid(format!("strategy {name:?} listed twice"));
            }
            strategies.push(kind);
        }
        if self.iterations == 0 {
            return invalid("`iterations` must be >= 1");
        }
        if self.repeats == 0 {
            return invalid("`repeats` must be >= 1");
        }
        if self.n_init == 0 {
            return invalid("`n_init` must be >= 1");
        }
        if self.jobs == 0 {
            return invalid("`jobs` must be >= 1");
        }
        if !self.beta_alpha.is_finite() {
            return invalid("`beta_alpha` must be finite");
        }
        if !(self.noise2.is_finite() && self.noise2 > 0.0) {
            return invalid("`noise2` must be positive");
        }
        if self.candidates == 0 {
            return invalid("`candidates` must be >= 1");
        }

        let missing = MissingModel {
            rho: self.rho,
            eta: self.eta,
            v: self.v,
            hist_frac: self.hist_frac,
            eta_per_dim: self.eta_per_dim.clone(),
        };
        missing
            .validate(objective.dims())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let bpmf = BpmfConfig {
            latent_dim: self.bpmf_k,
            xi: self.xi,
            burn_in: self.gibbs_iters,
            completions: self.q,
            thinning: self.thinning,
            independent_chains: self.independent_chains,
            mean_fill: self.mean_fill,
        };
        bpmf.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let beta = BetaParams {
            delta: self.delta,
            a: self.beta_a,
            b: self.beta_b,
            radius: self.beta_r,
        };
        bomi::acquisition::BetaSchedule::new(beta, objective.dims()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let bo = BoConfig {
            gp: GpConfig {
                noise2: self.noise2,
                ..GpConfig::default()
            },
            bpmf,
            beta,
            beta_alpha: self.beta_alpha,
            maximizer: MaximizerConfig {
                candidates: self.candidates,
                starts: self.refine_starts,
                iterations: self.refine_iters,
                ..MaximizerConfig::default()
            },
        };
        Ok(Experiment {
            objective,
            strategies,
            run: RunConfig {
                iterations: self.iterations,
                missing,
                bo,
            },
            repeats: self.repeats,
            seed: self.seed,
            n_init: self.n_init,
            out_dir: self.out_dir.clone(),
            jobs: self.jobs,
        })
    }
}

/// Sweepable missing-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Rho,
    Eta,
    V,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Rho => "rho",
            SweepAxis::Eta => "eta",
            SweepAxis::V => "v",
        }
    }

    /// Copy of `cfg` with this axis set to `value`.
    pub fn apply(&self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, ConfigError> {
        let mut out = cfg.clone();
        match self {
            SweepAxis::Rho => out.rho = value,
            SweepAxis::Eta => out.eta = value,
            SweepAxis::V => {
                if value.fract() != 0.0 || value < 1.0 {
                    return invalid(format!("v = {value} is not a positive integer"));
                }
                out.v = value as usize;
            }
        }
        Ok(out)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho" => Ok(SweepAxis::Rho),
            "eta" => Ok(SweepAxis::Eta),
            "v" => Ok(SweepAxis::V),
            other => Err(format!("unknown sweep axis {other:?} (expected rho, eta or v)")),
        }
    }
}
