//! Experiment configuration, synthetic data, batch runs and the diagnostics suite.

mod check;
mod config;
mod runner;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use check::{check, LEMMA_MAX_N, LEMMA_SLACK_TOL, REFERENCE_AGREEMENT_TOL, VARIANCE_SLACK_TOL};
pub use config::{
    BuiltProblem, DataSource, ExperimentConfig, ProblemSpec, SolverEntry, SolverSpec, SplitKind, DEFAULT_MU,
};
pub use runner::{
    aggregate_csv, aggregate_file_name, run, run_file_name, ExperimentManifest, ReferenceSummary, RunManifest,
    RunStatus, RunSummary, MANIFEST_FILE,
};
pub use synth::{synth_lasso, SynthSpec, SyntheticLasso};

use crate::diagnostics::DiagnosticsError;
use crate::model::ModelError;
use crate::solvers::SolverError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
