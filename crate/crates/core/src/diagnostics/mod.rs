//! Metric traces, reference optima, multiplier and descent-inequality
//! checks, and log-log rate fitting.

mod bounds;
mod identities;
mod rate;
mod reference;
mod report;
mod trace;

use thiserror::Error;

use crate::model::{ConstrainedProblem, FiniteSumPart};
use crate::solvers::{BlockPoint, SolverError};

pub use bounds::{check_lemma1, check_theorem1, lagrangian, InequalityCheck, LemmaCheck, TheoremCheck, PATH_LIMIT};
pub use identities::{check_multiplier_identities, IdentityCheck, IdentityReport, IDENTITY_TOL};
pub use rate::{rate_slope, SlopeFit, MIN_RATE_POINTS};
pub use reference::{
    compute_reference, compute_reference_with, fista_applicable, ReferenceBudget, ReferenceMethod, ReferenceOptimum,
    MIN_REFERENCE_ITER, REFERENCE_RESIDUAL_TOL,
};
pub use report::{DiagnosticReport, ReportEntry};
pub(crate) use trace::Recorder;
pub use trace::{EpochRecord, MetricTrace, MetricsConfig, CSV_HEADER};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("no per-step recording; run with record_steps enabled")]
    MissingRecording,
    #[error("reference budget of {max_iter} iterations is below the minimum {min}")]
    InsufficientBudget { max_iter: usize, min: usize },
    #[error(
        "reference solve stopped after {iterations} iterations with residual {residual:e} and step change {change:e}; increase the budget"
    )]
    ReferenceNotConverged { iterations: usize, residual: f64, change: f64 },
    #[error("reference method unavailable: {0}")]
    ReferenceUnavailable(String),
    #[error("exact expectation needs b = 1, got b = {0}")]
    NeedsUnitBatch(usize),
    #[error("{n}^{steps} minibatch paths exceed the limit of {limit}")]
    TooManyPaths { n: usize, steps: usize, limit: u64 },
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `‖A1 x1 + A2 x2 - b‖₂`
pub fn constraint_violation(problem: &ConstrainedProblem, x1: &[f64], x2: &[f64]) -> f64 {
    problem.constraint_violation(x1, x2)
}

/// `F(x̂) - F*`, possibly slightly negative when the reference is inexact.
pub fn objective_gap(problem: &ConstrainedProblem, x: &BlockPoint, reference: &ReferenceOptimum) -> f64 {
    problem.reported_objective(&x.x1, &x.x2) - reference.f_star
}

/// Mean per-sample loss of a held-out set.
pub fn test_loss(test: &dyn FiniteSumPart, x: &[f64]) -> f64 {
    test.value(x)
}
