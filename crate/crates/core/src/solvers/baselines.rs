//! Single-loop linearized stochastic ADMM baselines. Each iteration takes a
//! linearized proximal step on `x1`, a gradient step on `x2` with the
//! solver's estimator and step size, then `λ ← λ + β(A1x1 + A2x2 - b)`.
//! The penalty follows `β_s = min(β_max, ρ^s β0)` with `s` the epoch index.

use super::{block1_step, block2_step, check_divergence, BlockPoint, Solution, SolverError, SolverKind, SolverOptions, SnapshotRule};
use crate::diagnostics::Recorder;
use crate::estimators::{minibatch_unchecked, svrg_unchecked, SeededSampler, SvrgSnapshot};
use crate::linalg::DenseVector;
use crate::model::ConstrainedProblem;

/// Stream reserved for the warm-start iterations.
const WARM_START_STREAM: u64 = u64::MAX;

/// `1/(L2 + σ√k + β‖A2ᵀA2‖)`
pub fn stoc_step_size(l2: f64, sigma: f64, k: usize, beta_norm: f64) -> f64 {
    1.0 / (l2 + sigma * (k as f64).sqrt() + beta_norm)
}

/// `1/(L2 + σk^{3/2} + β‖A2ᵀA2‖)`
pub fn opt_step_size(l2: f64, sigma: f64, k: usize, beta_norm: f64) -> f64 {
    1.0 / (l2 + sigma * (k as f64).powf(1.5) + beta_norm)
}

/// `1/(L2 + β‖A2ᵀA2‖)`
pub fn svrg_step_size(l2: f64, beta_norm: f64) -> f64 {
    1.0 / (l2 + beta_norm)
}

/// `1/(L2 + β)`
pub fn sag_step_size(l2: f64, beta: f64) -> f64 {
    1.0 / (l2 + beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Plain minibatch gradient.
    Stoc,
    /// SVRG correction around an epoch snapshot.
    Svrg,
    /// Plain minibatch gradient at a Nesterov-extrapolated point.
    Opt,
    /// Average of a per-sample gradient table.
    Sag,
    /// Full gradient; deterministic linearized ADMM.
    Exact,
}

#[derive(Debug, Clone)]
pub struct BaselineState {
    pub x1: DenseVector,
    pub x2: DenseVector,
    pub x2_prev: DenseVector,
    pub lambda: DenseVector,
    /// Iterations taken, the `k` in the step-size formulas.
    pub k: usize,
    pub grad_evals: u64,
    pub snapshot: Option<SvrgSnapshot>,
    table: Vec<f64>,
    table_sum: DenseVector,
}

impl BaselineState {
    /// Mean of the SAG table, `(1/n) Σ_i g_i`.
    pub fn table_mean(&self, n: usize) -> DenseVector {
        self.table_sum.scaled(1.0 / n as f64)
    }
}

#[derive(Debug, Clone)]
pub struct LinearizedAdmm<'a> {
    problem: &'a ConstrainedProblem,
    estimator: Estimator,
    l1: f64,
    l2: f64,
    sigma: f64,
}

impl<'a> LinearizedAdmm<'a> {
    pub fn new(problem: &'a ConstrainedProblem, estimator: Estimator, l1: f64, l2: f64, sigma: f64) -> Self {
        LinearizedAdmm { problem, estimator, l1, l2, sigma }
    }

    pub fn init(&self, x1: DenseVector, x2: DenseVector) -> BaselineState {
        let (n, d) = (self.problem.n(), self.problem.dim2());
        let sag = self.estimator == Estimator::Sag;
        BaselineState {
            x1,
            x2_prev: x2.clone(),
            x2,
            lambda: DenseVector::zeros(self.problem.constraint_dim()),
            k: 0,
            grad_evals: 0,
            snapshot: None,
            table: if sag { vec![0.0; n * d] } else { Vec::new() },
            table_sum: DenseVector::zeros(if sag { d } else { 0 }),
        }
    }

    /// Step size for iteration `k` (1-based) under penalty `beta`.
    pub fn step_size(&self, k: usize, beta: f64) -> f64 {
        let beta_norm = beta * self.problem.norm_a2;
        match self.estimator {
            Estimator::Stoc => stoc_step_size(self.l2, self.sigma, k, beta_norm),
            Estimator::Opt => opt_step_size(self.l2, self.sigma, k, beta_norm),
            Estimator::Svrg | Estimator::Exact => svrg_step_size(self.l2, beta_norm),
            Estimator::Sag => sag_step_size(self.l2, beta),
        }
    }

    /// Recomputes the SVRG snapshot at `point`, charging `n` evaluations.
    pub fn refresh_snapshot(&self, st: &mut BaselineState, point: DenseVector) {
        let f = &self.problem.block2.smooth;
        st.grad_evals += f.len() as u64;
        st.snapshot = Some(SvrgSnapshot { full_gradient: f.gradient(&point), point, grad_eval_cost: f.len() });
    }

    fn estimate(&self, st: &mut BaselineState, z: &[f64], batch: &[usize]) -> DenseVector {
        let f = self.problem.block2.smooth.as_ref();
        match self.estimator {
            Estimator::Stoc | Estimator::Opt => {
                st.grad_evals += batch.len() as u64;
                minibatch_unchecked(f, z, batch)
            }
            Estimator::Svrg => {
                st.grad_evals += batch.len() as u64;
                let snap = st.snapshot.as_ref().expect("snapshot refreshed before the first SVRG step");
                svrg_unchecked(f, z, snap, batch)
            }
            Estimator::Exact => {
                st.grad_evals += f.len() as u64;
                f.gradient(z)
            }
            Estimator::Sag => {
                let d = f.dim();
                let mut seen: Vec<usize> = batch.to_vec();
                seen.sort_unstable();
                seen.dedup();
                st.grad_evals += batch.len() as u64;
                for i in seen {
                    let g = f.component_gradient(i, z);
                    let row = &mut st.table[i * d..(i + 1) * d];
                    for ((slot, sum), new) in row.iter_mut().zip(st.table_sum.iter_mut()).zip(g.iter()) {
                        *sum += new - *slot;
                        *slot = *new;
                    }
                }
                st.table_mean(f.len())
            }
        }
    }

    /// One iteration under penalty `beta` with the given minibatch.
    pub fn step(&self, st: &mut BaselineState, beta: f64, batch: &[usize]) -> Result<(), SolverError> {
        let p = self.problem;
        st.k += 1;
        let eta1 = self.l1 + beta * p.norm_a1;
        let gamma = self.step_size(st.k, beta);
        if !(eta1 > 0.0) || !(gamma > 0.0) || !gamma.is_finite() {
            return Err(SolverError::InvalidOption(format!("degenerate step sizes: eta1 = {eta1}, gamma = {gamma}")));
        }
        let x1 = block1_step(p, &st.x1, &st.x2, &st.lambda, beta, eta1);
        let z = if self.estimator == Estimator::Opt {
            let c = (st.k as f64 - 1.0) / (st.k as f64 + 2.0);
            let mut z = st.x2.sub(&st.x2_prev);
            z.iter_mut().zip(st.x2.iter()).for_each(|(d, x)| *d = x + c * *d);
            z
        } else {
            st.x2.clone()
        };
        let grad = self.estimate(st, &z, batch);
        let x2 = block2_step(p, &x1, &z, &grad, &st.lambda, beta, 1.0 / gamma);
        st.lambda.add_scaled(beta, &p.residual(&x1, &x2));
        st.x1 = x1;
        st.x2_prev = std::mem::replace(&mut st.x2, x2);
        Ok(())
    }
}

fn estimator_for(kind: SolverKind) -> Estimator {
    match kind {
        SolverKind::Stoc => Estimator::Stoc,
        SolverKind::Svrg => Estimator::Svrg,
        SolverKind::Opt => Estimator::Opt,
        SolverKind::Sag => Estimator::Sag,
        SolverKind::Acc => unreachable!("ACC-SADMM is not a linearized baseline"),
    }
}

fn run_baseline(kind: SolverKind, problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    opts.validate(problem)?;
    let (n, d) = (problem.n(), problem.dim2());
    if kind == SolverKind::Sag {
        let needed = (n as u64).saturating_mul(d as u64).saturating_mul(8);
        if needed > opts.sag_memory_budget {
            return Err(SolverError::MemoryBudget { needed, budget: opts.sag_memory_budget });
        }
    }
    let (l1, l2) = (opts.l1(problem), opts.l2(problem));
    let engine = LinearizedAdmm::new(problem, estimator_for(kind), l1, l2, opts.sigma);
    let (x1, x2) = opts.initial_point(problem);
    let mut st = engine.init(x1, x2);
    let mut sampler = SeededSampler::new(opts.seed, 0);

    if opts.warm_start && matches!(kind, SolverKind::Svrg | SolverKind::Sag) {
        let warm = LinearizedAdmm::new(problem, Estimator::Stoc, l1, l2, opts.sigma);
        sampler.set_stream(WARM_START_STREAM);
        for j in 0..(3 * n).div_ceil(opts.batch) {
            let batch = sampler.sample_minibatch(n, opts.batch)?;
            warm.step(&mut st, opts.beta.min(opts.beta_max), &batch)?;
            check_divergence(&st.x1, &st.x2, opts.divergence_threshold, 0, j)?;
        }
        st.k = 0;
        st.x2_prev = st.x2.clone();
    }

    let mut recorder = Recorder::new(problem, &opts.metrics);
    recorder.record(st.grad_evals, &st.x1, &st.x2);
    for s in 0..opts.epochs {
        let beta = (opts.rho.powi(s as i32) * opts.beta).min(opts.beta_max);
        sampler.set_stream(s as u64);
        let mut avg = DenseVector::zeros(d);
        if kind == SolverKind::Svrg && st.snapshot.is_none() {
            let point = st.x2.clone();
            engine.refresh_snapshot(&mut st, point);
        }
        for j in 0..opts.m {
            let batch = sampler.sample_minibatch(n, opts.batch)?;
            engine.step(&mut st, beta, &batch)?;
            check_divergence(&st.x1, &st.x2, opts.divergence_threshold, s, j)?;
            avg.add_scaled(1.0 / opts.m as f64, &st.x2);
        }
        if kind == SolverKind::Svrg && s + 1 < opts.epochs {
            let point = match opts.snapshot_rule {
                SnapshotRule::EpochAverage => avg,
                SnapshotRule::LastIterate => st.x2.clone(),
            };
            engine.refresh_snapshot(&mut st, point);
        }
        recorder.record(st.grad_evals, &st.x1, &st.x2);
    }
    let last = BlockPoint { x1: st.x1.clone(), x2: st.x2.clone() };
    Ok(Solution {
        solver: kind,
        x_hat: last.clone(),
        x_last: last,
        lambda: st.lambda.clone(),
        trace: recorder.finish(),
        steps: Vec::new(),
        grad_evals: st.grad_evals,
    })
}

pub fn solve_stoc_admm(problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    run_baseline(SolverKind::Stoc, problem, opts)
}

pub fn solve_svrg_admm(problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    run_baseline(SolverKind::Svrg, problem, opts)
}

/// Reconstructed: the extrapolation weights `(k-1)/(k+2)` are the standard
/// Nesterov choice, not taken from the method's original description.
pub fn solve_opt_admm(problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    run_baseline(SolverKind::Opt, problem, opts)
}

pub fn solve_sag_admm(problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    run_baseline(SolverKind::Sag, problem, opts)
}

/// Outcome of a deterministic linearized ADMM run.
#[derive(Debug, Clone)]
pub struct LinearizedAdmmRun {
    pub point: BlockPoint,
    pub lambda: DenseVector,
    pub iterations: usize,
    /// `‖A1x1 + A2x2 - b‖` at the final point.
    pub primal_residual: f64,
    /// Largest entry change over the final iteration, both blocks and `λ`.
    pub step_change: f64,
}

/// Linearized ADMM with exact gradients and fixed `beta`, stopped once both
/// the primal residual and the last iteration's change are at most `tol`.
pub fn linearized_admm(
    problem: &ConstrainedProblem,
    beta: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LinearizedAdmmRun, SolverError> {
    let engine = LinearizedAdmm::new(problem, Estimator::Exact, problem.l1(), problem.l2(), 0.0);
    let mut st = engine.init(DenseVector::zeros(problem.dim1()), DenseVector::zeros(problem.dim2()));
    let mut primal = problem.constraint_violation(&st.x1, &st.x2);
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let (x1, x2, lam) = (st.x1.clone(), st.x2.clone(), st.lambda.clone());
        engine.step(&mut st, beta, &[])?;
        check_divergence(&st.x1, &st.x2, 1e12, 0, it)?;
        change = [(&x1, &st.x1), (&x2, &st.x2), (&lam, &st.lambda)]
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max);
        primal = problem.constraint_violation(&st.x1, &st.x2);
        if primal <= tol && change <= tol {
            return Ok(LinearizedAdmmRun {
                point: BlockPoint { x1: st.x1, x2: st.x2 },
                lambda: st.lambda,
                iterations: it,
                primal_residual: primal,
                step_change: change,
            });
        }
    }
    Ok(LinearizedAdmmRun {
        point: BlockPoint { x1: st.x1, x2: st.x2 },
        lambda: st.lambda,
        iterations: max_iter,
        primal_residual: primal,
        step_change: change,
    })
}
