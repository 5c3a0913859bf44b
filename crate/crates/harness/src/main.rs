use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bomi::benchfns;
use bomi_harness::chart::render_svg;
use bomi_harness::output::{parse_summary, write_atomic};
use bomi_harness::{resolve_out_dir, run_experiment, sweep, ExperimentConfig, HarnessError, Report, SweepAxis};
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "bomi", version, about = "Bayesian optimization with missing inputs: benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every strategy for every repeat of one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config and $BOMI_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rerun the experiment for each value of one missing-model parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, e.g. 0.25,0.45,0.65.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a summary CSV as an SVG line chart.
    Chart {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in benchmark functions.
    ListFunctions,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn report_exit(reports: &[&Report]) -> ExitCode {
    let total: usize = reports.iter().map(|r| r.total_runs).sum();
    let failed: usize = reports.iter().map(|r| r.failures.len()).sum();
    for r in reports {
        for f in &r.failures {
            eprintln!("run failed: {} seed {}: {}", f.strategy, f.seed, f.message);
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else if failed == total {
        ExitCode::from(EXIT_ALL_FAILED)
    } else {
        ExitCode::from(EXIT_PARTIAL)
    }
}

fn harness_exit(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        HarnessError::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_ALL_FAILED),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Run { config, out, jobs } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let exp = match cfg.resolve() {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let dir = resolve_out_dir(out.as_deref(), exp.out_dir.as_deref());
            match run_experiment(&exp, &dir, jobs.unwrap_or(exp.jobs)) {
                Ok(report) => {
                    println!("wrote {} runs to {}", report.total_runs - report.failures.len(), dir.display());
                    for (s, mean, se, n) in report.final_values() {
                        println!("{s}: final best {mean} +- {se} (n = {n})");
                    }
                    report_exit(&[&report])
                }
                Err(e) => harness_exit(e),
            }
        }
        Cmd::Sweep {
            config,
            axis,
            values,
            out,
            jobs,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = resolve_out_dir(out.as_deref(), cfg.out_dir.as_deref());
            match sweep(&cfg, axis, &values, &dir, jobs.unwrap_or(cfg.jobs)) {
                Ok(reports) => {
                    println!("wrote {} sweep points to {}", reports.len(), dir.display());
                    let refs: Vec<&Report> = reports.iter().map(|(_, r)| r).collect();
                    report_exit(&refs)
                }
                Err(e) => harness_exit(e),
            }
        }
        Cmd::Chart { summary, out } => {
            let text = match std::fs::read_to_string(&summary) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", summary.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let rows = match parse_summary(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", summary.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let title = summary.display().to_string();
            if let Err(e) = write_atomic(&out, &render_svg(&rows, &title)) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(EXIT_ALL_FAILED);
            }
            ExitCode::SUCCESS
        }
        Cmd::ListFunctions => {
            for f in benchfns::registry() {
                let d = f.domain();
                println!("{}\t{}d\t[{}, {}]", f.name(), f.dims(), d.lower()[0], d.upper()[0]);
            }
            ExitCode::SUCCESS
        }
    }
}
