//! Experiment harness for BOMI: configuration, repeated seeded runs,
//! parameter sweeps, CSV traces and summaries, and SVG charts.

pub mod chart;
pub mod config;
pub mod experiment;
pub mod external;
pub mod output;

pub use config::{ConfigError, Experiment, ExperimentConfig, SweepAxis};
pub use experiment::{run_experiment, sweep, HarnessError, Report};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BOMI_OUT_DIR";

/// `flag`, else the config value, else `$BOMI_OUT_DIR`, else `bomi-out`.
pub fn resolve_out_dir(
    flag: Option<&std::path::Path>,
    config: Option<&std::path::Path>,
) -> std::path::PathBuf {
    flag.or(config)
        .map(|p| p.to_path_buf())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(Into::into))
        .unwrap_or_else(|| "bomi-out".into())
}
