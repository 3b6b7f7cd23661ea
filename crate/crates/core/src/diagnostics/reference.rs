use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::linalg::{norm2_slice, DenseVector};
use crate::model::ConstrainedProblem;
use crate::solvers::{linearized_admm, BlockPoint};

/// How a reference optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ReferenceMethod {
    /// Deterministic linearized ADMM with exact gradients.
    LinearizedAdmm { beta: f64 },
    /// FISTA with gradient restarts on the unsplit problem `min f2(x) + h1(x)`,
    /// available when `A1 = -I`, `A2 = I`, `b = 0`, `f1 = 0` and `h2 = 0`.
    Fista,
}

impl Default for ReferenceMethod {
    fn default() -> Self {
        ReferenceMethod::LinearizedAdmm { beta: 1.0 }
    }
}

/// Iteration budget, counted in full-gradient evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBudget {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ReferenceBudget {
    fn default() -> Self {
        ReferenceBudget { max_iter: 200_000, tol: 1e-11 }
    }
}

pub const MIN_REFERENCE_ITER: usize = 1_000;
pub const REFERENCE_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub x_star: BlockPoint,
    /// Final dual iterate, used as `λ*`.
    pub lambda_star: DenseVector,
    pub f_star: f64,
    pub method: ReferenceMethod,
    /// `‖A1 x1* + A2 x2* - b‖`
    pub residual: f64,
    pub iterations: usize,
}

pub fn compute_reference(
    problem: &ConstrainedProblem,
    budget: ReferenceBudget,
) -> Result<ReferenceOptimum, DiagnosticsError> {
    compute_reference_with(problem, ReferenceMethod::default(), budget)
}

pub fn compute_reference_with(
    problem: &ConstrainedProblem,
    method: ReferenceMethod,
    budget: ReferenceBudget,
) -> Result<ReferenceOptimum, DiagnosticsError> {
    if budget.max_iter < MIN_REFERENCE_ITER {
        return Err(DiagnosticsError::InsufficientBudget { max_iter: budget.max_iter, min: MIN_REFERENCE_ITER });
    }
    let out = match method {
        ReferenceMethod::LinearizedAdmm { beta } => {
            let run = linearized_admm(problem, beta, budget.max_iter, budget.tol)?;
            if run.primal_residual > budget.tol || run.step_change > budget.tol {
                return Err(DiagnosticsError::ReferenceNotConverged {
                    iterations: run.iterations,
                    residual: run.primal_residual,
                    change: run.step_change,
                });
            }
            ReferenceOptimum {
                f_star: problem.reported_objective(&run.point.x1, &run.point.x2),
                residual: run.primal_residual,
                x_star: run.point,
                lambda_star: run.lambda,
                method,
                iterations: run.iterations,
            }
        }
        ReferenceMethod::Fista => fista(problem, budget)?,
    };
    if out.residual > REFERENCE_RESIDUAL_TOL {
        return Err(DiagnosticsError::ReferenceNotConverged {
            iterations: out.iterations,
            residual: out.residual,
            change: f64::NAN,
        });
    }
    Ok(out)
}

/// Whether [`ReferenceMethod::Fista`] applies to `problem`.
pub fn fista_applicable(problem: &ConstrainedProblem) -> bool {
    problem.block1.op.is_neg_identity()
        && problem.block2.op.is_identity()
        && problem.rhs.iter().all(|v| *v == 0.0)
        && problem.block1.smooth.is_zero()
        && problem.block2.prox.is_zero()
}

fn fista(problem: &ConstrainedProblem, budget: ReferenceBudget) -> Result<ReferenceOptimum, DiagnosticsError> {
    if !fista_applicable(problem) {
        return Err(DiagnosticsError::ReferenceUnavailable(
            "FISTA needs A1 = -I, A2 = I, b = 0, f1 = 0 and h2 = 0".into(),
        ));
    }
    let f = problem.block2.smooth.as_ref();
    let h = problem.block1.prox.as_ref();
    let l = f.lipschitz();
    if !(l > 0.0) {
        return Err(DiagnosticsError::ReferenceUnavailable("FISTA needs a positive Lipschitz constant".into()));
    }
    let step = 1.0 / l;
    let d = problem.dim2();
    let mut x = DenseVector::zeros(d);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut change = f64::INFINITY;
    let mut iterations = budget.max_iter;
    for it in 1..=budget.max_iter {
        let g = f.gradient(&y);
        let mut v = y.clone();
        v.add_scaled(-step, &g);
        let x_next = h.prox(&v, step);
        // gradient mapping norm at y
        change = norm2_slice(&x_next.sub(&y)) * l;
        let restart = x_next.sub(&x).iter().zip(y.sub(&x_next).iter()).map(|(a, b)| a * b).sum::<f64>() > 0.0;
        if restart {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        y = x_next.iter().zip(x.iter()).map(|(a, b)| a + mom * (a - b)).collect();
        x = x_next;
        t = t_next;
        if change <= budget.tol {
            iterations = it;
            break;
        }
    }
    if change > budget.tol {
        return Err(DiagnosticsError::ReferenceNotConverged { iterations, residual: 0.0, change });
    }
    let lambda_star = f.gradient(&x).scaled(-1.0);
    Ok(ReferenceOptimum {
        f_star: problem.reported_objective(&x, &x),
        residual: problem.constraint_violation(&x, &x),
        x_star: BlockPoint { x1: x.clone(), x2: x },
        lambda_star,
        method: ReferenceMethod::Fista,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::model::{build_lasso, soft_threshold, Dataset, LipschitzConvention, LossKind, Split};

    fn lasso(rows: Vec<Vec<f64>>, labels: Vec<f64>, mu: f64) -> ConstrainedProblem {
        let ds = Dataset::new(SparseMatrix::from_dense(&rows).unwrap(), labels.into(), None).unwrap();
        build_lasso(Arc::new(ds), LossKind::Squared, mu, Split::Identity, LipschitzConvention::Safe).unwrap()
    }

    #[test]
    fn zero_problem_stays_at_origin() {
        let p = ConstrainedProblem::zero_problem(3, 2);
        let r = compute_reference(&p, ReferenceBudget::default()).unwrap();
        assert_eq!(r.f_star, 0.0);
        assert_eq!(r.x_star.x1, DenseVector::zeros(3));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn one_dimensional_lasso_matches_closed_form() {
        // (h - x)² + mu |x|  =>  x* = soft(h, mu / 2)
        let (h, mu) = (0.8, 0.3);
        let p = lasso(vec![vec![1.0]], vec![h], mu);
        let expect = soft_threshold(&[h], mu / 2.0).unwrap()[0];
        for method in [ReferenceMethod::default(), ReferenceMethod::Fista] {
            let r = compute_reference_with(&p, method, ReferenceBudget::default()).unwrap();
            assert!((r.x_star.x2[0] - expect).abs() < 1e-8, "{method:?}: {}", r.x_star.x2[0]);
            assert!(r.residual <= 1e-9);
        }
    }

    #[test]
    fn methods_agree_and_repeat() {
        let rows = vec![vec![1.0, 0.5, -0.2], vec![-0.3, 1.0, 0.4], vec![0.2, -0.1, 1.0], vec![0.7, 0.7, 0.0]];
        let p = lasso(rows, vec![1.0, -0.5, 0.25, 0.3], 0.05);
        let a = compute_reference(&p, ReferenceBudget::default()).unwrap();
        let b = compute_reference(&p, ReferenceBudget::default()).unwrap();
        assert_eq!(a, b);
        let c = compute_reference_with(&p, ReferenceMethod::Fista, ReferenceBudget::default()).unwrap();
        assert!((a.f_star - c.f_star).abs() < 1e-8);
        let lam_gap = norm2_slice(&a.lambda_star.sub(&c.lambda_star));
        assert!(lam_gap < 1e-6, "{lam_gap}");
    }

    #[test]
    fn small_budget_is_refused() {
        let p = ConstrainedProblem::zero_problem(1, 1);
        let err = compute_reference(&p, ReferenceBudget { max_iter: 10, tol: 1e-9 }).unwrap_err();
        assert!(matches!(err, DiagnosticsError::InsufficientBudget { .. }));
    }

    #[test]
    fn fista_rejects_general_split() {
        let mut p = lasso(vec![vec![1.0]], vec![1.0], 0.1);
        p.rhs = vec![1.0].into();
        assert!(!fista_applicable(&p));
        assert!(compute_reference_with(&p, ReferenceMethod::Fista, ReferenceBudget::default()).is_err());
    }
}
