use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sadmm_core::diagnostics::{rate_slope, MetricTrace};
use sadmm_core::harness::{check, run, ExperimentConfig, HarnessError, SolverEntry};
use sadmm_core::solvers::SolverKind;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_DIAGNOSTICS: u8 = 4;

#[derive(Parser)]
#[command(name = "sadmm", version, about = "Stochastic ADMM benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured solver and seed, writing CSV traces and a manifest.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory, overriding `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the diagnostics suite and print the report.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Log-log slope of a metric column against the epoch index.
    Slope {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "constraint_violation")]
        column: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Run only this solver.
    #[arg(long)]
    solver: Option<SolverKind>,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use `max ‖a_i‖²` as the squared-loss Lipschitz constant.
    #[arg(long)]
    paper_lipschitz: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(kind) = self.solver {
            let entry = cfg
                .solvers
                .iter()
                .find(|s| s.spec().name == kind)
                .cloned()
                .unwrap_or(SolverEntry::Name(kind));
            cfg.solvers = vec![entry];
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if self.paper_lipschitz {
            cfg.paper_lipschitz = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) | HarnessError::Model(_) => EXIT_CONFIG,
        HarnessError::Solver(sadmm_core::solvers::SolverError::Diverged { .. }) => EXIT_DIVERGED,
        HarnessError::Solver(_) => EXIT_CONFIG,
        HarnessError::Diagnostics(_) | HarnessError::Io { .. } => EXIT_DIAGNOSTICS,
    }
}

fn report(err: HarnessError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(&err))
}

fn slope(csv: &PathBuf, column: &str) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(csv).with_context(|| format!("cannot read {}", csv.display()))?;
    let trace = MetricTrace::from_csv(&text)?;
    let values = trace.column(column)?;
    let series: Vec<(f64, f64)> = trace
        .records
        .iter()
        .zip(values)
        .filter(|(r, _)| r.epoch > 0)
        .filter_map(|(r, v)| v.map(|v| (r.epoch as f64, v)))
        .collect();
    let fit = rate_slope(&series)?;
    println!("slope={} intercept={} points={} excluded={}", fit.slope, fit.intercept, fit.used, fit.excluded.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, out } => {
            let cfg = match common.load() {
                Ok(c) => c,
                Err(e) => return report(e),
            };
            match run(&cfg, out.as_deref()) {
                Ok(summary) => {
                    for r in &summary.manifest.runs {
                        match &r.error {
                            None => println!("{} seed {}: ok", r.solver, r.seed),
                            Some(e) => println!("{} seed {}: failed ({e})", r.solver, r.seed),
                        }
                    }
                    println!("results in {}", summary.out_dir.display());
                    if summary.failed() > 0 {
                        ExitCode::from(EXIT_DIVERGED)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => report(e),
            }
        }
        Command::Check { common, json } => {
            let cfg = match common.load() {
                Ok(c) => c,
                Err(e) => return report(e),
            };
            match check(&cfg) {
                Ok(r) => {
                    if json {
                        println!("{}", r.to_json());
                    } else {
                        print!("{}", r.to_text());
                    }
                    if r.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_DIAGNOSTICS)
                    }
                }
                Err(e) => report(e),
            }
        }
        Command::Slope { csv, column } => match slope(&csv, &column) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_DIAGNOSTICS)
            }
        },
    }
}
