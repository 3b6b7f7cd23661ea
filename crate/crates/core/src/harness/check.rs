use super::config::{ExperimentConfig, SolverSpec};
use super::runner::check_options;
use super::HarnessError;
use crate::diagnostics::{
    check_lemma1, check_multiplier_identities, compute_reference_with, fista_applicable, DiagnosticReport,
    ReferenceMethod, ReferenceOptimum, REFERENCE_RESIDUAL_TOL,
};
use crate::estimators::{variance_bound_lhs_rhs, Expectation, SvrgSnapshot, EXHAUSTIVE_LIMIT};
use crate::linalg::DenseVector;
use crate::model::ConstrainedProblem;
use crate::solvers::{solve, AccSadmm, SolverKind};

pub const REFERENCE_AGREEMENT_TOL: f64 = 1e-8;
pub const VARIANCE_SLACK_TOL: f64 = 1e-12;
pub const LEMMA_SLACK_TOL: f64 = 1e-9;
pub const LEMMA_MAX_N: usize = 8;

/// Runs the diagnostics suite on the configured problem: reference optimum,
/// multiplier identities of ACC-SADMM per seed, the SVRG variance bound at the
/// final iterate and, for tiny unit-batch problems, the one-step bound.
pub fn check(config: &ExperimentConfig) -> Result<DiagnosticReport, HarnessError> {
    config.validate()?;
    let built = config.build_problem()?;
    let problem = &built.problem;
    let n = problem.n();
    let mut report = DiagnosticReport::default();

    let budget = config.reference.unwrap_or_default();
    let reference = match compute_reference_with(problem, config.reference_method, budget) {
        Ok(r) => {
            report.push(
                "reference_residual",
                true,
                Some(r.residual),
                Some(REFERENCE_RESIDUAL_TOL),
                format!("{} iterations", r.iterations),
            );
            Some(r)
        }
        Err(e) => {
            report.push("reference_residual", false, None, Some(REFERENCE_RESIDUAL_TOL), e.to_string());
            None
        }
    };
    if let Some(r) = &reference {
        if fista_applicable(problem) && config.reference_method != ReferenceMethod::Fista {
            match compute_reference_with(problem, ReferenceMethod::Fista, budget) {
                Ok(f) => {
                    let gap = (r.f_star - f.f_star).abs();
                    report.push(
                        "reference_agreement",
                        gap <= REFERENCE_AGREEMENT_TOL,
                        Some(gap),
                        Some(REFERENCE_AGREEMENT_TOL),
                        "|F*(admm) - F*(fista)|",
                    );
                }
                Err(e) => report.push("reference_agreement", false, None, Some(REFERENCE_AGREEMENT_TOL), e.to_string()),
            }
        }
    }

    let spec = config
        .solvers
        .iter()
        .map(|s| s.spec())
        .find(|s| s.name == SolverKind::Acc)
        .unwrap_or_else(SolverSpec::default);
    for &seed in &config.seeds {
        let mut opts = config.solver_options(&spec, n, seed);
        opts.record_steps = true;
        check_options(SolverKind::Acc, problem, &opts)
            .map_err(|e| HarnessError::Config(format!("solver acc: {e}")))?;
        let sol = solve(SolverKind::Acc, problem, &opts)?;
        let ids = check_multiplier_identities(&sol.steps)?;
        report.add_identities(&format!("seed{seed}_"), &ids);

        let f2 = problem.block2.smooth.as_ref();
        if n <= EXHAUSTIVE_LIMIT {
            let snap = SvrgSnapshot::new(f2, sol.x_hat.x2.clone()).map_err(crate::solvers::SolverError::from)?;
            let (lhs, rhs) = variance_bound_lhs_rhs(f2, &sol.x_last.x2, &snap, 1, Expectation::Exhaustive)
                .map_err(crate::solvers::SolverError::from)?;
            report.push(
                format!("seed{seed}_variance_bound"),
                rhs - lhs >= -VARIANCE_SLACK_TOL,
                Some(rhs - lhs),
                Some(-VARIANCE_SLACK_TOL),
                "slack at the final iterate",
            );
        }
    }

    if let Some(r) = &reference {
        if n <= LEMMA_MAX_N && config.batch == 1 {
            lemma_entry(problem, config, &spec, r, &mut report)?;
        }
    }
    Ok(report)
}

fn lemma_entry(
    problem: &ConstrainedProblem,
    config: &ExperimentConfig,
    spec: &SolverSpec,
    reference: &ReferenceOptimum,
    report: &mut DiagnosticReport,
) -> Result<(), HarnessError> {
    let opts = config.solver_options(spec, problem.n(), config.seeds[0]);
    let acc = AccSadmm::new(problem, &opts)?;
    let state = acc.init(
        DenseVector::zeros(problem.dim1()),
        DenseVector::zeros(problem.dim2()),
        DenseVector::zeros(problem.constraint_dim()),
    );
    let check = check_lemma1(&acc, &state, &reference.x_star, &reference.lambda_star)?;
    let slack = check.centered.slack();
    report.push("lemma1_first_step", slack >= -LEMMA_SLACK_TOL, Some(slack), Some(-LEMMA_SLACK_TOL), "centered form");
    Ok(())
}
