//! ACC-SADMM and the STOC, SVRG, OPT and SAG stochastic ADMM baselines.

mod acc;
mod baselines;
mod theta;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{MetricTrace, MetricsConfig};
use crate::estimators::EstimatorError;
use crate::linalg::{norm2_slice, DenseVector};
use crate::model::{ConstrainedProblem, ModelError};

pub use acc::{solve_acc_sadmm, AccSadmm, AccState, StepRecord};
pub use baselines::{
    linearized_admm, opt_step_size, sag_step_size, solve_opt_admm, solve_sag_admm, solve_stoc_admm, solve_svrg_admm,
    stoc_step_size, svrg_step_size, BaselineState, Estimator, LinearizedAdmm,
};
pub use theta::ThetaSchedule;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("diverged at epoch {epoch}, step {step}: {reason}")]
    Diverged { epoch: usize, step: usize, reason: String },
    #[error("SAG gradient table needs {needed} bytes, budget is {budget}")]
    MemoryBudget { needed: u64, budget: u64 },
    #[error("epoch boundary requested at inner step {k} of {m}")]
    MidEpoch { k: usize, m: usize },
    #[error("epoch already has all {m} inner steps")]
    EpochFinished { m: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Acc,
    Stoc,
    Svrg,
    Opt,
    Sag,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [SolverKind::Acc, SolverKind::Stoc, SolverKind::Svrg, SolverKind::Opt, SolverKind::Sag];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Acc => "acc",
            SolverKind::Stoc => "stoc",
            SolverKind::Svrg => "svrg",
            SolverKind::Opt => "opt",
            SolverKind::Sag => "sag",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = SolverError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SolverError::InvalidOption(format!("unknown solver {s:?}; expected acc|stoc|svrg|opt|sag")))
    }
}

/// Snapshot used by SVRG-ADMM for the next epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotRule {
    #[default]
    EpochAverage,
    LastIterate,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Penalty `β` for ACC-SADMM, initial penalty `β0` for the baselines.
    pub beta: f64,
    /// Continuation ratio: baselines use `β_s = min(beta_max, ρ^s β0)`.
    pub rho: f64,
    pub beta_max: f64,
    /// Inner iterations per epoch.
    pub m: usize,
    /// Minibatch size.
    pub batch: usize,
    /// Number of epochs `S`.
    pub epochs: usize,
    pub seed: u64,
    /// Step-size decay for STOC-ADMM and OPT-ADMM.
    pub sigma: f64,
    pub c: f64,
    pub tau: f64,
    pub l1_override: Option<f64>,
    pub l2_override: Option<f64>,
    pub snapshot_rule: SnapshotRule,
    /// Initialize SVRG-ADMM and SAG-ADMM with `3n/b` STOC-ADMM iterations.
    pub warm_start: bool,
    pub sag_memory_budget: u64,
    /// Keep a [`StepRecord`] for every ACC-SADMM inner step.
    pub record_steps: bool,
    pub divergence_threshold: f64,
    pub x1_init: Option<DenseVector>,
    pub x2_init: Option<DenseVector>,
    pub metrics: MetricsConfig,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            beta: 1.0,
            rho: 1.0,
            beta_max: 10.0,
            m: 2,
            batch: 1,
            epochs: 10,
            seed: 0,
            sigma: 0.0,
            c: 2.0,
            tau: 2.0,
            l1_override: None,
            l2_override: None,
            snapshot_rule: SnapshotRule::EpochAverage,
            warm_start: false,
            sag_memory_budget: 1 << 30,
            record_steps: false,
            divergence_threshold: 1e12,
            x1_init: None,
            x2_init: None,
            metrics: MetricsConfig::default(),
        }
    }
}

impl SolverOptions {
    /// `m = 2n/b`, the usual epoch length.
    pub fn default_m(n: usize, batch: usize) -> usize {
        (2 * n / batch.max(1)).max(3)
    }

    pub(crate) fn validate(&self, problem: &ConstrainedProblem) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidOption(msg));
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.rho >= 1.0) || !self.rho.is_finite() {
            return bad(format!("rho must be >= 1, got {}", self.rho));
        }
        if !(self.beta_max > 0.0) {
            return bad(format!("beta_max must be positive, got {}", self.beta_max));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.m <= 1 {
            return bad(format!("epoch length m must exceed 1, got {}", self.m));
        }
        let n = problem.n();
        if self.batch == 0 || self.batch > n {
            return Err(EstimatorError::InvalidBatch { b: self.batch, n }.into());
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        for (name, l) in [("l1_override", self.l1_override), ("l2_override", self.l2_override)] {
            if let Some(l) = l {
                if !(l >= 0.0) || !l.is_finite() {
                    return bad(format!("{name} must be a nonnegative number, got {l}"));
                }
            }
        }
        if let Some(x) = &self.x1_init {
            if x.len() != problem.dim1() {
                return bad(format!("x1_init has dimension {}, expected {}", x.len(), problem.dim1()));
            }
        }
        if let Some(x) = &self.x2_init {
            if x.len() != problem.dim2() {
                return bad(format!("x2_init has dimension {}, expected {}", x.len(), problem.dim2()));
            }
        }
        Ok(())
    }

    pub(crate) fn l1(&self, problem: &ConstrainedProblem) -> f64 {
        self.l1_override.unwrap_or_else(|| problem.l1())
    }

    pub(crate) fn l2(&self, problem: &ConstrainedProblem) -> f64 {
        self.l2_override.unwrap_or_else(|| problem.l2())
    }

    pub(crate) fn initial_point(&self, problem: &ConstrainedProblem) -> (DenseVector, DenseVector) {
        (
            self.x1_init.clone().unwrap_or_else(|| DenseVector::zeros(problem.dim1())),
            self.x2_init.clone().unwrap_or_else(|| DenseVector::zeros(problem.dim2())),
        )
    }
}

/// A point in both blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPoint {
    pub x1: DenseVector,
    pub x2: DenseVector,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub solver: SolverKind,
    /// ACC-SADMM: the non-ergodic output of the last epoch. Baselines: the last iterate.
    pub x_hat: BlockPoint,
    pub x_last: BlockPoint,
    /// Final multiplier (`λ` for the baselines, `λ^{m-1}` of the last epoch for ACC-SADMM).
    pub lambda: DenseVector,
    pub trace: MetricTrace,
    pub steps: Vec<StepRecord>,
    pub grad_evals: u64,
}

pub fn solve(kind: SolverKind, problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    match kind {
        SolverKind::Acc => solve_acc_sadmm(problem, opts),
        SolverKind::Stoc => solve_stoc_admm(problem, opts),
        SolverKind::Svrg => solve_svrg_admm(problem, opts),
        SolverKind::Opt => solve_opt_admm(problem, opts),
        SolverKind::Sag => solve_sag_admm(problem, opts),
    }
}

pub(crate) fn check_divergence(
    x1: &[f64],
    x2: &[f64],
    threshold: f64,
    epoch: usize,
    step: usize,
) -> Result<(), SolverError> {
    for (name, x) in [("x1", x1), ("x2", x2)] {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Diverged { epoch, step, reason: format!("non-finite entry in {name}") });
        }
        let norm = norm2_slice(x);
        if norm > threshold {
            return Err(SolverError::Diverged { epoch, step, reason: format!("‖{name}‖ = {norm:e} exceeds {threshold:e}") });
        }
    }
    Ok(())
}

/// `prox_{h1, 1/η1}(x1 - [∇f1(x1) + A1ᵀ(pen·r + λ)]/η1)` where `r = A1 x1 + A2 x2 - b`.
pub(crate) fn block1_step(
    problem: &ConstrainedProblem,
    x1: &[f64],
    x2: &[f64],
    lambda: &[f64],
    penalty: f64,
    eta1: f64,
) -> DenseVector {
    let mut dual = problem.residual(x1, x2).scaled(penalty);
    dual.add_scaled(1.0, lambda);
    let mut g = problem.block1.smooth.gradient(x1);
    g.add_scaled(1.0, &problem.block1.op.apply_adjoint(&dual));
    let mut v = DenseVector::from(x1);
    v.add_scaled(-1.0 / eta1, &g);
    problem.block1.prox.prox(&v, 1.0 / eta1)
}

/// `prox_{h2, 1/η2}(x2 - [g + A2ᵀ(pen·r + λ)]/η2)` where `r = A1 x1 + A2 x2 - b`.
pub(crate) fn block2_step(
    problem: &ConstrainedProblem,
    x1: &[f64],
    x2: &[f64],
    grad: &[f64],
    lambda: &[f64],
    penalty: f64,
    eta2: f64,
) -> DenseVector {
    let mut dual = problem.residual(x1, x2).scaled(penalty);
    dual.add_scaled(1.0, lambda);
    let mut g = DenseVector::from(grad);
    g.add_scaled(1.0, &problem.block2.op.apply_adjoint(&dual));
    let mut v = DenseVector::from(x2);
    v.add_scaled(-1.0 / eta2, &g);
    problem.block2.prox.prox(&v, 1.0 / eta2)
}
