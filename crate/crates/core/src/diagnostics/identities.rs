use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::linalg::{norm2_slice, DenseVector};
use crate::solvers::StepRecord;

pub const IDENTITY_TOL: f64 = 1e-9;

/// Largest relative deviation `‖lhs - rhs‖ / (1 + ‖λ̂‖)` of one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_deviation: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_deviation <= self.tolerance)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }
}

/// `λ̂ = λ̃ + (β(1 - θ1)/θ1)(Ax - b)`
fn lambda_hat(lam_tilde: &[f64], residual: &[f64], beta: f64, theta1: f64) -> DenseVector {
    let mut out = DenseVector::from(lam_tilde);
    out.add_scaled(beta * (1.0 - theta1) / theta1, residual);
    out
}

fn deviation(lhs: &[f64], rhs: &[f64], scale: &[f64]) -> f64 {
    let diff: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
    norm2_slice(&diff) / (1.0 + norm2_slice(scale))
}

/// Recomputes, from recorded multipliers and residuals,
/// `λ̂^{k+1} = λ^k + (β/θ1)(Ax^{k+1} - b)`,
/// `λ̂^{k+1} - λ̂^k = (β/θ1)[(Ax^{k+1} - b) - (1 - θ1 - θ2)(Ax^k - b) - θ2(b̃ - b)]`
/// and `λ̂^0_{s+1} = λ̂^m_s` across epoch boundaries.
pub fn check_multiplier_identities(steps: &[StepRecord]) -> Result<IdentityReport, DiagnosticsError> {
    if steps.is_empty() {
        return Err(DiagnosticsError::MissingRecording);
    }
    let mut step = IdentityCheck { name: "lambda_hat_step".into(), max_deviation: 0.0, count: 0 };
    let mut diff = IdentityCheck { name: "lambda_hat_difference".into(), max_deviation: 0.0, count: 0 };
    let mut cont = IdentityCheck { name: "epoch_continuity".into(), max_deviation: 0.0, count: 0 };

    for r in steps {
        let (beta, t1, t2) = (r.beta, r.theta1, r.theta2);
        let next = lambda_hat(&r.lam_tilde_next, &r.residual_next, beta, t1);

        let mut rhs = r.lam.clone();
        rhs.add_scaled(beta / t1, &r.residual_next);
        step.max_deviation = step.max_deviation.max(deviation(&next, &rhs, &next));
        step.count += 1;

        let prev = lambda_hat(&r.lam_tilde, &r.residual_prev, beta, t1);
        let lhs = next.sub(&prev);
        let mut rhs = r.residual_next.scaled(beta / t1);
        rhs.add_scaled(-beta * (1.0 - t1 - t2) / t1, &r.residual_prev);
        rhs.add_scaled(-beta * t2 / t1, &r.snapshot_gap);
        diff.max_deviation = diff.max_deviation.max(deviation(&lhs, &rhs, &next));
        diff.count += 1;
    }
    for w in steps.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.epoch == a.epoch + 1 && b.k == 0 {
            let end = lambda_hat(&a.lam_tilde_next, &a.residual_next, a.beta, a.theta1);
            let start = lambda_hat(&b.lam_tilde, &b.residual_prev, b.beta, b.theta1);
            cont.max_deviation = cont.max_deviation.max(deviation(&start, &end, &end));
            cont.count += 1;
        }
    }
    Ok(IdentityReport { checks: vec![step, diff, cont], tolerance: IDENTITY_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConstrainedProblem, L1Norm, QuadraticSum};
    use crate::solvers::{solve_acc_sadmm, SolverOptions};

    fn run(problem: &ConstrainedProblem, epochs: usize, m: usize) -> Vec<StepRecord> {
        let opts = SolverOptions { m, epochs, record_steps: true, beta: 0.7, seed: 3, ..Default::default() };
        solve_acc_sadmm(problem, &opts).unwrap().steps
    }

    fn quadratic_problem() -> ConstrainedProblem {
        let centers = vec![vec![1.0, -2.0].into(), vec![0.5, 0.25].into(), vec![-1.0, 3.0].into()];
        let sum = QuadraticSum::new(centers, vec![1.0, 2.0, 0.5]).unwrap();
        ConstrainedProblem::consensus(std::sync::Arc::new(L1Norm { mu: 0.1 }), std::sync::Arc::new(sum)).unwrap()
    }

    #[test]
    fn zero_problem_has_exact_identities() {
        let p = ConstrainedProblem::zero_problem(2, 3);
        let report = check_multiplier_identities(&run(&p, 3, 4)).unwrap();
        assert!(report.checks.iter().all(|c| c.max_deviation == 0.0), "{report:?}");
        assert_eq!(report.checks[2].count, 2);
    }

    #[test]
    fn random_run_satisfies_identities() {
        let report = check_multiplier_identities(&run(&quadratic_problem(), 3, 4)).unwrap();
        assert!(report.max_deviation() <= 1e-10, "{report:?}");
        assert!(report.passed());
        assert_eq!(report.checks[0].count, 12);
    }

    #[test]
    fn perturbation_is_detected() {
        let mut steps = run(&quadratic_problem(), 3, 4);
        steps[5].lam_tilde[0] += 1e-3;
        let report = check_multiplier_identities(&steps).unwrap();
        assert!(!report.passed());
        let dev = report.checks[1].max_deviation;
        assert!(dev > 1e-4 && dev <= 1e-3, "{dev}");
    }

    #[test]
    fn empty_recording_is_an_error() {
        assert!(matches!(check_multiplier_identities(&[]), Err(DiagnosticsError::MissingRecording)));
    }
}
