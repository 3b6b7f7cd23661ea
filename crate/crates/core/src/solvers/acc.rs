use super::{
    block1_step, block2_step, check_divergence, BlockPoint, Solution, SolverError, SolverKind, SolverOptions,
    ThetaSchedule,
};
use crate::diagnostics::Recorder;
use crate::estimators::{svrg_unchecked, SeededSampler, SvrgSnapshot};
use crate::linalg::{combine, DenseVector};
use crate::model::ConstrainedProblem;

/// Iterate state of ACC-SADMM inside epoch `s` after `k` inner steps.
#[derive(Debug, Clone)]
pub struct AccState {
    pub x1: DenseVector,
    pub x2: DenseVector,
    pub x1_prev: DenseVector,
    pub x2_prev: DenseVector,
    pub y1: DenseVector,
    pub y2: DenseVector,
    /// Snapshot `x̃_s`.
    pub xt1: DenseVector,
    pub xt2: DenseVector,
    /// `λ̃^k_s`
    pub lam_tilde: DenseVector,
    /// `λ^{k-1}_s`, the multiplier used by the most recent inner step.
    pub lam: DenseVector,
    /// `b̃_s = A1 x̃1 + A2 x̃2`
    pub b_tilde: DenseVector,
    pub s: usize,
    pub k: usize,
    pub snapshot: SvrgSnapshot,
    /// `Σ x^j_s` over `1 <= j <= min(k, m-1)`.
    pub sum1: DenseVector,
    pub sum2: DenseVector,
    pub grad_evals: u64,
}

/// Multiplier bookkeeping of one inner step, enough to re-derive `λ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub k: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    /// `A x^k - b`
    pub residual_prev: DenseVector,
    /// `A x^{k+1} - b`
    pub residual_next: DenseVector,
    /// `b̃ - b`
    pub snapshot_gap: DenseVector,
    /// `λ̃^k`
    pub lam_tilde: DenseVector,
    /// `λ^k`
    pub lam: DenseVector,
    /// `λ̃^{k+1}`
    pub lam_tilde_next: DenseVector,
}

/// ACC-SADMM bound to a problem and its constants.
#[derive(Debug, Clone)]
pub struct AccSadmm<'a> {
    problem: &'a ConstrainedProblem,
    schedule: ThetaSchedule,
    beta: f64,
    batch: usize,
    l1: f64,
    l2: f64,
}

impl<'a> AccSadmm<'a> {
    pub fn new(problem: &'a ConstrainedProblem, opts: &SolverOptions) -> Result<Self, SolverError> {
        opts.validate(problem)?;
        let schedule = ThetaSchedule::new(opts.c, opts.tau, opts.m)?;
        Ok(AccSadmm { problem, schedule, beta: opts.beta, batch: opts.batch, l1: opts.l1(problem), l2: opts.l2(problem) })
    }

    pub fn problem(&self) -> &ConstrainedProblem {
        self.problem
    }

    pub fn schedule(&self) -> &ThetaSchedule {
        &self.schedule
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// `η1 = L1 + β‖A1ᵀA1‖/θ1,s`
    pub fn eta1(&self, s: usize) -> f64 {
        self.l1 + self.beta * self.problem.norm_a1 / self.schedule.theta1(s)
    }

    /// `α = 1 + 1/(bθ2)`
    pub fn alpha(&self) -> f64 {
        1.0 + 1.0 / (self.batch as f64 * self.schedule.theta2())
    }

    /// `η2 = αL2 + β‖A2ᵀA2‖/θ1,s`
    pub fn eta2(&self, s: usize) -> f64 {
        self.alpha() * self.l2 + self.beta * self.problem.norm_a2 / self.schedule.theta1(s)
    }

    /// State at the start of epoch 0: every point equals `(x1, x2)`, the
    /// snapshot gradient is computed there.
    pub fn init(&self, x1: DenseVector, x2: DenseVector, lam_tilde: DenseVector) -> AccState {
        let snapshot = SvrgSnapshot {
            full_gradient: self.problem.block2.smooth.gradient(&x2),
            point: x2.clone(),
            grad_eval_cost: self.problem.n(),
        };
        AccState {
            b_tilde: self.problem.apply(&x1, &x2),
            x1_prev: x1.clone(),
            x2_prev: x2.clone(),
            y1: x1.clone(),
            y2: x2.clone(),
            xt1: x1.clone(),
            xt2: x2.clone(),
            sum1: DenseVector::zeros(x1.len()),
            sum2: DenseVector::zeros(x2.len()),
            x1,
            x2,
            lam: lam_tilde.clone(),
            lam_tilde,
            s: 0,
            k: 0,
            snapshot,
            grad_evals: self.problem.n() as u64,
        }
    }

    /// `λ^k = λ̃^k + (βθ2/θ1,s)(A x^k - b̃)`
    pub fn lambda(&self, st: &AccState) -> DenseVector {
        let (t1, t2) = self.schedule.theta(st.s);
        let mut r = self.problem.apply(&st.x1, &st.x2);
        r.add_scaled(-1.0, &st.b_tilde);
        let mut lam = st.lam_tilde.clone();
        lam.add_scaled(self.beta * t2 / t1, &r);
        lam
    }

    /// `λ̂^k = λ̃^k + (β(1 - θ1,s)/θ1,s)(A x^k - b)`
    pub fn lambda_hat(&self, st: &AccState) -> DenseVector {
        let t1 = self.schedule.theta1(st.s);
        let mut lam = st.lam_tilde.clone();
        lam.add_scaled(self.beta * (1.0 - t1) / t1, &self.problem.residual(&st.x1, &st.x2));
        lam
    }

    /// One inner iteration with the given minibatch.
    pub fn inner_step(&self, st: &mut AccState, batch: &[usize]) -> Result<(), SolverError> {
        self.step_impl(st, batch, false).map(|_| ())
    }

    /// As [`inner_step`](Self::inner_step), also returning the multiplier record.
    pub fn inner_step_recorded(&self, st: &mut AccState, batch: &[usize]) -> Result<StepRecord, SolverError> {
        self.step_impl(st, batch, true).map(|r| r.expect("recording requested"))
    }

    fn step_impl(&self, st: &mut AccState, batch: &[usize], record: bool) -> Result<Option<StepRecord>, SolverError> {
        let m = self.schedule.m();
        if st.k >= m {
            return Err(SolverError::EpochFinished { m });
        }
        let p = self.problem;
        let (t1, t2) = self.schedule.theta(st.s);
        let pen = self.beta / t1;

        let residual_prev = record.then(|| p.residual(&st.x1, &st.x2));
        let lam = self.lambda(st);

        let x1 = block1_step(p, &st.y1, &st.y2, &lam, pen, self.eta1(st.s));
        let grad = svrg_unchecked(p.block2.smooth.as_ref(), &st.y2, &st.snapshot, batch);
        st.grad_evals += batch.len() as u64;
        let x2 = block2_step(p, &x1, &st.y2, &grad, &lam, pen, self.eta2(st.s));

        let residual_next = p.residual(&x1, &x2);
        let mut lam_tilde = lam.clone();
        lam_tilde.add_scaled(self.beta, &residual_next);

        let mom = 1.0 - t1 - t2;
        st.y1 = extrapolate(&x1, &st.x1, mom);
        st.y2 = extrapolate(&x2, &st.x2, mom);
        st.x1_prev = std::mem::replace(&mut st.x1, x1);
        st.x2_prev = std::mem::replace(&mut st.x2, x2);
        st.k += 1;
        if st.k < m {
            st.sum1.add_scaled(1.0, &st.x1);
            st.sum2.add_scaled(1.0, &st.x2);
        }
        let rec = residual_prev.map(|residual_prev| {
            let mut snapshot_gap = st.b_tilde.clone();
            snapshot_gap.add_scaled(-1.0, &p.rhs);
            StepRecord {
                epoch: st.s,
                k: st.k - 1,
                theta1: t1,
                theta2: t2,
                beta: self.beta,
                residual_prev,
                residual_next,
                snapshot_gap,
                lam_tilde: st.lam_tilde.clone(),
                lam: lam.clone(),
                lam_tilde_next: lam_tilde.clone(),
            }
        });
        st.lam = lam;
        st.lam_tilde = lam_tilde;
        Ok(rec)
    }

    /// Non-ergodic output of the current (completed) epoch.
    pub fn output(&self, st: &AccState) -> Result<BlockPoint, SolverError> {
        let m = self.schedule.m();
        if st.k != m {
            return Err(SolverError::MidEpoch { k: st.k, m });
        }
        let (w_last, w_rest) = self.schedule.output_weights(st.s);
        Ok(BlockPoint {
            x1: combine(&[(w_last, &st.x1), (w_rest, &st.sum1)]),
            x2: combine(&[(w_last, &st.x2), (w_rest, &st.sum2)]),
        })
    }

    /// Snapshot, multiplier and extrapolation reset between epochs `s` and `s+1`.
    pub fn epoch_boundary(&self, st: &mut AccState) -> Result<(), SolverError> {
        let m = self.schedule.m();
        if st.k != m {
            return Err(SolverError::MidEpoch { k: st.k, m });
        }
        let p = self.problem;
        let s = st.s;
        let (t1, t2) = self.schedule.theta(s);
        let t1n = self.schedule.theta1(s + 1);

        let (a, c) = self.schedule.snapshot_weights(s);
        let xt1 = combine(&[(a, &st.x1), (c, &st.sum1)]);
        let xt2 = combine(&[(a, &st.x2), (c, &st.sum2)]);

        let mut lam_tilde = st.lam.clone();
        lam_tilde.add_scaled(self.beta * (1.0 - self.schedule.tau()), &p.residual(&st.x1, &st.x2));

        let r = t1n / t1;
        let y = |xm: &[f64], xm1: &[f64], xt_new: &[f64], xt_old: &[f64]| {
            combine(&[
                (1.0 - t2 + r * (1.0 - t1), xm),
                (t2, xt_new),
                (-r * (1.0 - t1 - t2), xm1),
                (-r * t2, xt_old),
            ])
        };
        st.y1 = y(&st.x1, &st.x1_prev, &xt1, &st.xt1);
        st.y2 = y(&st.x2, &st.x2_prev, &xt2, &st.xt2);

        st.b_tilde = p.apply(&xt1, &xt2);
        st.snapshot = SvrgSnapshot {
            full_gradient: p.block2.smooth.gradient(&xt2),
            point: xt2.clone(),
            grad_eval_cost: p.n(),
        };
        st.grad_evals += p.n() as u64;
        st.xt1 = xt1;
        st.xt2 = xt2;
        st.lam_tilde = lam_tilde;
        st.x1_prev = st.x1.clone();
        st.x2_prev = st.x2.clone();
        st.sum1.iter_mut().for_each(|v| *v = 0.0);
        st.sum2.iter_mut().for_each(|v| *v = 0.0);
        st.k = 0;
        st.s += 1;
        Ok(())
    }
}

/// `x + mom (x - prev)`
fn extrapolate(x: &[f64], prev: &[f64], mom: f64) -> DenseVector {
    x.iter().zip(prev).map(|(a, b)| a + mom * (a - b)).collect()
}

pub fn solve_acc_sadmm(problem: &ConstrainedProblem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    let acc = AccSadmm::new(problem, opts)?;
    let (x1, x2) = opts.initial_point(problem);
    let mut st = acc.init(x1, x2, DenseVector::zeros(problem.constraint_dim()));
    let mut recorder = Recorder::new(problem, &opts.metrics);
    recorder.record(st.grad_evals, &st.x1, &st.x2);

    let mut sampler = SeededSampler::new(opts.seed, 0);
    let mut steps = Vec::new();
    let mut x_hat = BlockPoint { x1: st.x1.clone(), x2: st.x2.clone() };
    for s in 0..opts.epochs {
        sampler.set_stream(s as u64);
        for k in 0..opts.m {
            let batch = sampler.sample_minibatch(problem.n(), opts.batch)?;
            if opts.record_steps {
                steps.push(acc.inner_step_recorded(&mut st, &batch)?);
            } else {
                acc.inner_step(&mut st, &batch)?;
            }
            check_divergence(&st.x1, &st.x2, opts.divergence_threshold, s, k)?;
        }
        x_hat = acc.output(&st)?;
        recorder.record(st.grad_evals, &x_hat.x1, &x_hat.x2);
        if s + 1 < opts.epochs {
            acc.epoch_boundary(&mut st)?;
        }
    }
    Ok(Solution {
        solver: SolverKind::Acc,
        x_hat,
        x_last: BlockPoint { x1: st.x1.clone(), x2: st.x2.clone() },
        lambda: st.lam.clone(),
        trace: recorder.finish(),
        steps,
        grad_evals: st.grad_evals,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linalg::LinearOperator;
    use crate::model::{Block, L1Norm, QuadraticSum, ZeroProx, ZeroSmooth, ZeroSum};

    fn zero_problem(d: usize) -> ConstrainedProblem {
        ConstrainedProblem::new(
            Block { prox: Arc::new(ZeroProx), smooth: Arc::new(ZeroSmooth::new(d)), op: LinearOperator::Identity(d) },
            Block { prox: Arc::new(ZeroProx), smooth: Arc::new(ZeroSum::new(3, d)), op: LinearOperator::NegIdentity(d) },
            DenseVector::zeros(d),
        )
        .unwrap()
    }

    /// `min |x1| + (c/2)(x2 - z)²  s.t.  x1 - x2 = 0` in one dimension.
    fn scalar_problem(z: f64, c: f64) -> ConstrainedProblem {
        ConstrainedProblem::new(
            Block { prox: Arc::new(L1Norm { mu: 1.0 }), smooth: Arc::new(ZeroSmooth::new(1)), op: LinearOperator::Identity(1) },
            Block {
                prox: Arc::new(ZeroProx),
                smooth: Arc::new(QuadraticSum::new(vec![vec![z].into()], vec![c]).unwrap()),
                op: LinearOperator::NegIdentity(1),
            },
            DenseVector::zeros(1),
        )
        .unwrap()
    }

    fn opts(m: usize, epochs: usize) -> SolverOptions {
        SolverOptions { m, epochs, beta: 0.7, ..SolverOptions::default() }
    }

    #[test]
    fn zero_problem_stays_at_zero() {
        let p = zero_problem(3);
        let sol = solve_acc_sadmm(&p, &SolverOptions { record_steps: true, ..opts(4, 3) }).unwrap();
        assert!(sol.x_hat.x1.iter().chain(sol.x_hat.x2.iter()).all(|v| *v == 0.0));
        assert!(sol.trace.records.iter().all(|r| r.constraint_violation == 0.0));
        sol.trace.validate().unwrap();
        assert_eq!(sol.steps.len(), 12);
    }

    #[test]
    fn one_step_matches_hand_execution() {
        let (z, c, beta, m) = (2.0, 1.5, 0.7, 4usize);
        let p = scalar_problem(z, c);
        let acc = AccSadmm::new(&p, &SolverOptions { beta, m, ..SolverOptions::default() }).unwrap();
        let (x1, x2, lt) = (0.3, -0.2, 0.1);
        let mut st = acc.init(vec![x1].into(), vec![x2].into(), vec![lt].into());
        acc.inner_step(&mut st, &[0]).unwrap();

        let t1 = 0.5;
        let t2 = (m as f64 - 2.0) / (2.0 * (m as f64 - 1.0));
        // snapshot at x2, so b̃ = A x^0 and λ^0 = λ̃^0
        let lam = lt;
        let eta1 = beta / t1;
        let v1 = x1 - ((beta / t1) * (x1 - x2) + lam) / eta1;
        let x1n = v1.signum() * (v1.abs() - 1.0 / eta1).max(0.0);
        let grad = c * (x2 - z);
        let eta2 = (1.0 + 1.0 / t2) * c + beta / t1;
        let x2n = x2 - (grad - ((beta / t1) * (x1n - x2) + lam)) / eta2;
        let lt_next = lam + beta * (x1n - x2n);
        let mom = 1.0 - t1 - t2;
        let (y1, y2) = (x1n + mom * (x1n - x1), x2n + mom * (x2n - x2));

        for (got, want) in [(st.x1[0], x1n), (st.x2[0], x2n), (st.lam_tilde[0], lt_next), (st.y1[0], y1), (st.y2[0], y2)] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(st.grad_evals, 2);
    }

    #[test]
    fn stationary_point_is_preserved_by_boundary() {
        let p = zero_problem(2);
        let acc = AccSadmm::new(&p, &opts(5, 2)).unwrap();
        let v = DenseVector::from(vec![1.5, -2.0]);
        let mut st = acc.init(v.clone(), v.clone(), DenseVector::zeros(2));
        for _ in 0..5 {
            acc.inner_step(&mut st, &[0]).unwrap();
        }
        assert!(acc.epoch_boundary(&mut AccState { k: 3, ..st.clone() }).is_err());
        acc.epoch_boundary(&mut st).unwrap();
        for (a, b) in st.xt1.iter().chain(st.y1.iter()).zip(v.iter().cycle()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(acc.inner_step(&mut AccState { k: 5, ..st.clone() }, &[0]).is_err());
    }

    #[test]
    fn output_weights_are_convex() {
        let p = zero_problem(1);
        // m = 2 needs τ < 2; with c = 2, τ = 1.5: θ1 = 1/2, θ2 = 1/3
        let acc = AccSadmm::new(&p, &SolverOptions { tau: 1.5, ..opts(2, 1) }).unwrap();
        let mut st = acc.init(vec![0.0].into(), vec![0.0].into(), vec![0.0].into());
        st.k = 2;
        st.x1 = vec![3.0].into();
        st.sum1 = vec![1.0].into();
        let out = acc.output(&st).unwrap();
        let t = 0.5 + 1.0 / 3.0;
        assert!((out.x1[0] - (3.0 + t * 1.0) / (1.0 + t)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_options() {
        let p = zero_problem(1);
        assert!(solve_acc_sadmm(&p, &opts(4, 0)).is_err());
        assert!(solve_acc_sadmm(&p, &opts(2, 1)).is_err());
        assert!(solve_acc_sadmm(&p, &SolverOptions { batch: 4, ..opts(4, 1) }).is_err());
    }

    #[test]
    fn b_tilde_tracks_snapshot() {
        let p = scalar_problem(1.0, 2.0);
        let acc = AccSadmm::new(&p, &opts(4, 3)).unwrap();
        let mut st = acc.init(vec![0.5].into(), vec![0.1].into(), vec![0.0].into());
        for _ in 0..3 {
            for _ in 0..4 {
                acc.inner_step(&mut st, &[0]).unwrap();
            }
            acc.epoch_boundary(&mut st).unwrap();
            let fresh = p.apply(&st.xt1, &st.xt2);
            assert!((fresh[0] - st.b_tilde[0]).abs() < 1e-12);
            assert!(st.snapshot.deviation(p.block2.smooth.as_ref()) == 0.0);
        }
    }

    #[test]
    fn determinism() {
        let p = scalar_problem(1.0, 2.0);
        let o = SolverOptions { seed: 9, ..opts(4, 3) };
        let a = solve_acc_sadmm(&p, &o).unwrap();
        let b = solve_acc_sadmm(&p, &o).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.x_hat, b.x_hat);
    }
}
