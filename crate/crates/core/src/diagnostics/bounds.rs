use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::linalg::{dot_slice, DenseVector};
use crate::model::ConstrainedProblem;
use crate::solvers::{AccSadmm, AccState, BlockPoint, SolverOptions};

/// Largest number of minibatch paths an exact expectation may enumerate.
pub const PATH_LIMIT: u64 = 100_000;

/// Two sides of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalityCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// `L(x1, x2, λ) = F(x1, x2) + ⟨λ, A1 x1 + A2 x2 - b⟩`
pub fn lagrangian(problem: &ConstrainedProblem, x1: &[f64], x2: &[f64], lambda: &[f64]) -> f64 {
    problem.objective(x1, x2) + dot_slice(lambda, &problem.residual(x1, x2))
}

fn path_count(n: usize, steps: usize) -> Result<u64, DiagnosticsError> {
    let mut total: u64 = 1;
    for _ in 0..steps {
        total = total.saturating_mul(n as u64);
        if total > PATH_LIMIT {
            return Err(DiagnosticsError::TooManyPaths { n, steps, limit: PATH_LIMIT });
        }
    }
    Ok(total)
}

/// `z = v - (1 - θ1 - θ2) x^k - θ2 x̃ - θ1 x*`
fn shifted(v: &[f64], xk: &[f64], xt: &[f64], xs: &[f64], t1: f64, t2: f64) -> DenseVector {
    v.iter()
        .zip(xk)
        .zip(xt)
        .zip(xs)
        .map(|(((v, a), b), c)| v - (1.0 - t1 - t2) * a - t2 * b - t1 * c)
        .collect()
}

/// `‖v‖²_{G3}` with `G3 = η1 I - (β/θ1) A1ᵀA1`.
fn g3_norm_sq(acc: &AccSadmm<'_>, s: usize, v: &[f64]) -> f64 {
    let p = acc.problem();
    let t1 = acc.schedule().theta1(s);
    let av = p.block1.op.apply(v);
    acc.eta1(s) * dot_slice(v, v) - acc.beta() / t1 * dot_slice(&av, &av)
}

/// `‖v‖²_{G4}` with `G4 = η2 I`.
fn g4_norm_sq(acc: &AccSadmm<'_>, s: usize, v: &[f64]) -> f64 {
    acc.eta2(s) * dot_slice(v, v)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// One-step bound in two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// LHS `E L(x^{k+1}, λ*) - θ2 L(x̃, λ*) - (1 - θ2 - θ1) L(x^k, λ*)` as printed.
    pub printed: InequalityCheck,
    /// The same LHS minus `θ1 L(x*, λ*)`, i.e. with `L` measured relative to
    /// `L(x*, λ*)`. Coincides with `printed` when `F(x*) = 0`.
    pub centered: InequalityCheck,
}

/// One inner step of ACC-SADMM from `state`, both sides of the one-step
/// inequality with the expectation over the sampled index taken exactly.
///
/// RHS: `(θ1/2β)(‖λ̂^k - λ*‖² - E‖λ̂^{k+1} - λ*‖²)` plus the `G3`, `G4`
/// weighted differences of `y^k` and `x^{k+1}` around
/// `(1 - θ1 - θ2) x^k + θ2 x̃ + θ1 x*`. `x*` must satisfy the constraint.
pub fn check_lemma1(
    acc: &AccSadmm<'_>,
    state: &AccState,
    x_star: &BlockPoint,
    lambda_star: &[f64],
) -> Result<LemmaCheck, DiagnosticsError> {
    if acc.batch() != 1 {
        return Err(DiagnosticsError::NeedsUnitBatch(acc.batch()));
    }
    let p = acc.problem();
    let n = p.n();
    path_count(n, 1)?;
    let s = state.s;
    let (t1, t2) = acc.schedule().theta(s);
    let beta = acc.beta();

    let mut e_lagr = 0.0;
    let mut e_lam = 0.0;
    let mut e_g3 = 0.0;
    let mut e_g4 = 0.0;
    for i in 0..n {
        let mut next = state.clone();
        acc.inner_step(&mut next, &[i])?;
        e_lagr += lagrangian(p, &next.x1, &next.x2, lambda_star);
        e_lam += dist_sq(&acc.lambda_hat(&next), lambda_star);
        e_g3 += g3_norm_sq(acc, s, &shifted(&next.x1, &state.x1, &state.xt1, &x_star.x1, t1, t2));
        e_g4 += g4_norm_sq(acc, s, &shifted(&next.x2, &state.x2, &state.xt2, &x_star.x2, t1, t2));
    }
    let nf = n as f64;
    let (e_lagr, e_lam, e_g3, e_g4) = (e_lagr / nf, e_lam / nf, e_g3 / nf, e_g4 / nf);

    let lhs = e_lagr
        - t2 * lagrangian(p, &state.xt1, &state.xt2, lambda_star)
        - (1.0 - t2 - t1) * lagrangian(p, &state.x1, &state.x2, lambda_star);
    let lam_now = dist_sq(&acc.lambda_hat(state), lambda_star);
    let g3_now = g3_norm_sq(acc, s, &shifted(&state.y1, &state.x1, &state.xt1, &x_star.x1, t1, t2));
    let g4_now = g4_norm_sq(acc, s, &shifted(&state.y2, &state.x2, &state.xt2, &x_star.x2, t1, t2));
    let rhs = t1 / (2.0 * beta) * (lam_now - e_lam) + 0.5 * (g3_now - e_g3) + 0.5 * (g4_now - e_g4);
    let l_star = lagrangian(p, &x_star.x1, &x_star.x2, lambda_star);
    Ok(LemmaCheck {
        printed: InequalityCheck { lhs, rhs },
        centered: InequalityCheck { lhs: lhs - t1 * l_star, rhs },
    })
}

/// Theorem-level bound after `S` epochs, in two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    /// As printed: coefficient `m/θ1,S` with `θ1,S = 1/(c + τS)`, norm weights
    /// `(θ1,0 L1 + ‖A1ᵀA1‖)I - A1ᵀA1` and `(αθ1,0 L2 + ‖A2ᵀA2‖)I`.
    pub printed: InequalityCheck,
    /// Summed one-step bounds: coefficient `W = (1 + (m-1)(θ1 + θ2))/θ1` at the
    /// last epoch run, norm weights `(θ1,0 L1 + β‖A1ᵀA1‖)I - βA1ᵀA1` and
    /// `(αθ1,0 L2 + β‖A2ᵀA2‖)I`.
    pub telescoped: InequalityCheck,
    pub paths: u64,
}

/// Runs `opts.epochs` epochs of ACC-SADMM from `x0` and `λ̃⁰₀ = lam0` along
/// every minibatch path (`b = 1`) and evaluates the expectation exactly.
pub fn check_theorem1(
    problem: &ConstrainedProblem,
    opts: &SolverOptions,
    x0: &BlockPoint,
    lam0: &[f64],
    x_star: &BlockPoint,
    lambda_star: &[f64],
) -> Result<TheoremCheck, DiagnosticsError> {
    let acc = AccSadmm::new(problem, opts)?;
    if opts.batch != 1 {
        return Err(DiagnosticsError::NeedsUnitBatch(opts.batch));
    }
    let n = problem.n();
    let m = opts.m;
    let epochs = opts.epochs;
    let paths = path_count(n, m * epochs)?;
    let sch = *acc.schedule();
    let beta = acc.beta();
    let t10 = sch.theta1(0);
    let t2 = sch.theta2();
    let t1_printed = sch.theta1(epochs);
    let t1_last = sch.theta1(epochs - 1);
    let mf = m as f64;
    let w_printed = mf / t1_printed;
    let w_last = (1.0 + (mf - 1.0) * (t1_last + t2)) / t1_last;

    let f_star = problem.objective(&x_star.x1, &x_star.x2);
    let r0 = problem.residual(&x0.x1, &x0.x2);
    // λ̃⁰₀ - β(m-1)θ2/θ1,0 (Ax⁰ - b) - λ*
    let mut base = DenseVector::from(lam0);
    base.add_scaled(-beta * (mf - 1.0) * t2 / t10, &r0);
    base.add_scaled(-1.0, lambda_star);

    let mut e_printed = 0.0;
    let mut e_telescoped = 0.0;
    let state = acc.init(x0.x1.clone(), x0.x2.clone(), DenseVector::from(lam0));
    let mut stack = vec![state];
    while let Some(st) = stack.pop() {
        if st.s == epochs - 1 && st.k == m {
            let out = acc.output(&st)?;
            let r = problem.residual(&out.x1, &out.x2);
            let gap = problem.objective(&out.x1, &out.x2) - f_star + dot_slice(lambda_star, &r);
            let term = |w: f64| {
                let mut v = base.clone();
                v.add_scaled(beta * w, &r);
                dist_sq(&v, &vec![0.0; v.len()]) / (2.0 * beta) + w * gap
            };
            e_printed += term(w_printed);
            e_telescoped += term(w_last);
            continue;
        }
        let mut st = st;
        if st.k == m {
            acc.epoch_boundary(&mut st)?;
        }
        for i in (0..n).rev() {
            let mut next = st.clone();
            acc.inner_step(&mut next, &[i])?;
            stack.push(next);
        }
    }
    e_printed /= paths as f64;
    e_telescoped /= paths as f64;

    let alpha = acc.alpha();
    let c3 = (1.0 - t10 + (mf - 1.0) * t2) / t10;
    let gap0 = problem.objective(&x0.x1, &x0.x2) - f_star + dot_slice(lambda_star, &r0);
    let mut lam_hat0 = DenseVector::from(lam0);
    lam_hat0.add_scaled(beta * (1.0 - t10) / t10, &r0);
    let dual0 = dist_sq(&lam_hat0, lambda_star) / (2.0 * beta);
    let d1 = x0.x1.sub(&x_star.x1);
    let d2 = x0.x2.sub(&x_star.x2);
    let a_d1 = problem.block1.op.apply(&d1);
    let (n1, n2) = (problem.norm_a1, problem.norm_a2);
    let block_terms = |scale: f64| {
        0.5 * ((t10 * acc.l1() + scale * n1) * d1.norm_sq() - scale * a_d1.norm_sq())
            + 0.5 * (alpha * t10 * acc.l2() + scale * n2) * d2.norm_sq()
    };
    let rhs_printed = c3 * gap0 + dual0 + block_terms(1.0);
    let rhs_telescoped = c3 * gap0 + dual0 + block_terms(beta);
    Ok(TheoremCheck {
        printed: InequalityCheck { lhs: e_printed, rhs: rhs_printed },
        telescoped: InequalityCheck { lhs: e_telescoped, rhs: rhs_telescoped },
        paths,
    })
}
