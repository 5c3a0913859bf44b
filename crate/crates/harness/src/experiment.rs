//! Repeated seeded runs, sweeps and their output files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bomi::rng::{self, RngStream};
use bomi::simulator;
use bomi::strategies::{run_loop, StrategyKind, Trace};
use bomi::Dataset;
use rayon::prelude::*;
use thiserror::Error;

use crate::chart;
use crate::config::{ConfigError, Experiment, ExperimentConfig, SweepAxis};
use crate::output::{self, mean_se, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Summary(#[from] output::ParseError),
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    output::write_atomic(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn remove_stale(path: &Path) -> Result<(), HarnessError> {
    match fs::remove_file(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(source) => Err(HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub strategy: String,
    pub seed: u64,
    pub message: String,
}

/// What one experiment produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub out_dir: PathBuf,
    pub total_runs: usize,
    pub failures: Vec<Failure>,
    pub summary: Vec<SummaryRow>,
    /// Successful traces as `(strategy, seed, trace)` in run order.
    pub traces: Vec<(StrategyKind, u64, Trace)>,
}

impl Report {
    pub fn all_failed(&self) -> bool {
        self.failures.len() == self.total_runs
    }

    /// Final best-so-far (mean, standard error, n) per strategy.
    pub fn final_values(&self) -> Vec<(String, f64, f64, usize)> {
        let mut out: Vec<(String, f64, f64, usize)> = Vec::new();
        for r in &self.summary {
            match out.iter_mut().find(|(s, ..)| *s == r.strategy) {
                Some(slot) => *slot = (r.strategy.clone(), r.mean, r.std_err, r.n),
                None => out.push((r.strategy.clone(), r.mean, r.std_err, r.n)),
            }
        }
        out
    }
}

pub fn trace_file_name(kind: StrategyKind, seed: u64) -> String {
    format!("{kind}_seed{seed}.csv")
}

/// Runs every strategy for every repeat, writing
/// `traces/<strategy>_seed<seed>.csv`, `summary.csv`, `summary.svg`, and
/// `failures.log` / `fallbacks.log` when there is something to report.
/// Repeat `r` uses seed `exp.seed + r`, and all strategies of that repeat
/// start from the same historical data.
pub fn run_experiment(exp: &Experiment, out_dir: &Path, jobs: usize) -> Result<Report, HarnessError> {
    let objective = exp.objective.build();
    let seeds: Vec<u64> = (0..exp.repeats as u64).map(|r| exp.seed.wrapping_add(r)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let inits: Vec<Result<Dataset, String>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut r = RngStream::new(seed).substream(rng::INIT_DATA);
                simulator::gen_historical(objective.as_ref(), exp.n_init, &exp.run.missing, &mut r)
                    .map_err(|e| format!("initial data: {e}"))
            })
            .collect()
    });

    let tasks: Vec<(StrategyKind, usize)> = exp
        .strategies
        .iter()
        .flat_map(|&k| (0..seeds.len()).map(move |r| (k, r)))
        .collect();
    let trace_dir = out_dir.join("traces");
    let results: Vec<Result<Trace, String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, r)| {
                let init = inits[r].clone()?;
                let streams = RngStream::new(seeds[r]);
                let trace = run_loop(objective.as_ref(), kind, &exp.run, init, &streams).map_err(|e| e.to_string())?;
                let path = trace_dir.join(trace_file_name(kind, seeds[r]));
                output::write_atomic(&path, &output::trace_csv(&trace, seeds[r]))
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                Ok(trace)
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut traces = Vec::new();
    for (&(kind, r), res) in tasks.iter().zip(results) {
        match res {
            Ok(t) => traces.push((kind, seeds[r], t)),
            Err(message) => failures.push(Failure {
                strategy: kind.to_string(),
                seed: seeds[r],
                message,
            }),
        }
    }

    let mut summary = Vec::new();
    for &kind in &exp.strategies {
        let of_kind: Vec<&Trace> = traces.iter().filter(|(k, ..)| *k == kind).map(|(.., t)| t).collect();
        if !of_kind.is_empty() {
            summary.extend(output::summarize(&kind.to_string(), &of_kind));
        }
    }
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write(&out_dir.join("summary.csv"), &output::summary_csv(&summary))?;
    if !summary.is_empty() {
        let title = format!("{} ({} repeats)", objective.name(), exp.repeats);
        write(&out_dir.join("summary.svg"), &chart::render_svg(&summary, &title))?;
    }

    let failures_path = out_dir.join("failures.log");
    if failures.is_empty() {
        remove_stale(&failures_path)?;
    } else {
        let mut log = String::new();
        for f in &failures {
            writeln!(log, "{} seed {}: {}", f.strategy, f.seed, f.message).unwrap();
        }
        write(&failures_path, &log)?;
    }
    let mut fallbacks = String::new();
    for (kind, seed, t) in &traces {
        for r in t.records.iter().filter(|r| r.fallback) {
            writeln!(fallbacks, "{kind} seed {seed} iter {}: no complete rows, uniform suggestion", r.iter).unwrap();
        }
    }
    let fallbacks_path = out_dir.join("fallbacks.log");
    if fallbacks.is_empty() {
        remove_stale(&fallbacks_path)?;
    } else {
        write(&fallbacks_path, &fallbacks)?;
    }

    Ok(Report {
        out_dir: out_dir.to_path_buf(),
        total_runs: tasks.len(),
        failures,
        summary,
        traces,
    })
}

/// One experiment per axis value under `<out>/<axis>=<value>/`, plus
/// `sweep_summary.csv` with the final best-so-far per value and strategy.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    out_dir: &Path,
    jobs: usize,
) -> Result<Vec<(f64, Report)>, HarnessError> {
    if values.is_empty() {
        return Err(ConfigError::Invalid("sweep needs at least one value".into()).into());
    }
    // validate every point before running any
    let exps = values
        .iter()
        .map(|&v| axis.apply(cfg, v)?.resolve())
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::with_capacity(values.len());
    let mut table = String::from("axis,value,strategy,mean_final,std_err,n\n");
    for (&v, exp) in values.iter().zip(&exps) {
        let dir = out_dir.join(format!("{}={v}", axis.name()));
        let report = run_experiment(exp, &dir, jobs)?;
        for (strategy, mean, se, n) in report.final_values() {
            writeln!(table, "{},{v},{strategy},{mean},{se},{n}", axis.name()).unwrap();
        }
        reports.push((v, report));
    }
    write(&out_dir.join("sweep_summary.csv"), &table)?;
    Ok(reports)
}

/// Final best-so-far of `traces` as (mean, standard error).
pub fn final_mean_se(traces: &[&Trace]) -> (f64, f64) {
    let finals: Vec<f64> = traces.iter().map(|t| t.final_best()).collect();
    mean_se(&finals)
}
