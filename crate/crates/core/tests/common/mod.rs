#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sadmm_core::linalg::{DenseVector, LinearOperator, SparseMatrix};
use sadmm_core::model::{
    build_lasso, Block, ConstrainedProblem, Dataset, FiniteSumPart, L1Norm, LeastSquaresLoss, LipschitzConvention,
    LogisticLoss, LossKind, QuadraticSmooth, QuadraticSum, SmoothPart, Split, ZeroProx,
};
use sadmm_core::solvers::BlockPoint;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DenseVector {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Dense rows with roughly a third of the entries zeroed; labels are signs for logistic loss.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, loss: LossKind) -> Arc<Dataset> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.sample::<f64, _>(StandardNormal) })
                .collect()
        })
        .collect();
    let labels: DenseVector = (0..n)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            match loss {
                LossKind::Squared => v,
                LossKind::Logistic => v.signum(),
            }
        })
        .collect();
    Arc::new(Dataset::new(SparseMatrix::from_dense(&rows).unwrap(), labels, None).unwrap())
}

pub fn random_loss(rng: &mut ChaCha8Rng, n: usize, d: usize, loss: LossKind) -> Arc<dyn FiniteSumPart> {
    let data = random_dataset(rng, n, d, loss);
    match loss {
        LossKind::Squared => Arc::new(LeastSquaresLoss::new(data, false).unwrap()),
        LossKind::Logistic => Arc::new(LogisticLoss::new(data).unwrap()),
    }
}

pub fn random_quadratic_sum(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Arc<dyn FiniteSumPart> {
    let centers = (0..n).map(|_| normal_vec(rng, d)).collect();
    let curv = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    Arc::new(QuadraticSum::new(centers, curv).unwrap())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> SparseMatrix {
    let dense: Vec<Vec<f64>> = (0..rows).map(|_| normal_vec(rng, cols).to_vec()).collect();
    SparseMatrix::from_dense(&dense).unwrap()
}

pub fn lasso(rng: &mut ChaCha8Rng, n: usize, d: usize, loss: LossKind, mu: f64) -> ConstrainedProblem {
    build_lasso(random_dataset(rng, n, d, loss), loss, mu, Split::Identity, LipschitzConvention::Safe).unwrap()
}

/// A random problem of one of four families plus a feasible point.
///
/// Families: quadratic consensus, squared-loss Lasso with a random operator
/// split, logistic Lasso, and a general instance with `f1 ≠ 0`, random `A1`,
/// `A2` and `b ≠ 0`.
pub fn tiny_instance(rng: &mut ChaCha8Rng, n: usize, family: usize) -> (ConstrainedProblem, BlockPoint) {
    let d = rng.gen_range(1..=3);
    let mu = rng.gen_range(0.01..0.5);
    let problem = match family % 4 {
        0 => ConstrainedProblem::consensus(Arc::new(L1Norm { mu }), random_quadratic_sum(rng, n, d)).unwrap(),
        1 => {
            let p = rng.gen_range(1..=3);
            let a = random_matrix(rng, p, d);
            build_lasso(
                random_dataset(rng, n, d, LossKind::Squared),
                LossKind::Squared,
                mu,
                Split::Operator(a),
                LipschitzConvention::Safe,
            )
            .unwrap()
        }
        2 => lasso(rng, n, d, LossKind::Logistic, mu),
        _ => {
            let d1 = rng.gen_range(1..=3);
            let p = rng.gen_range(1..=3);
            let a1 = random_matrix(rng, p, d1);
            let a2 = random_matrix(rng, p, d);
            let u1 = normal_vec(rng, d1);
            let u2 = normal_vec(rng, d);
            let mut b = LinearOperator::matrix(a1.clone()).forward(&u1).unwrap();
            b.add_scaled(1.0, &LinearOperator::matrix(a2.clone()).forward(&u2).unwrap());
            let block1 = Block {
                prox: Arc::new(L1Norm { mu }),
                smooth: Arc::new(QuadraticSmooth { center: normal_vec(rng, d1), curvature: rng.gen_range(0.2..2.0) })
                    as Arc<dyn SmoothPart>,
                op: LinearOperator::matrix(a1),
            };
            let block2 = Block { prox: Arc::new(ZeroProx), smooth: random_quadratic_sum(rng, n, d), op: LinearOperator::matrix(a2) };
            let problem = ConstrainedProblem::new(block1, block2, b).unwrap();
            return (problem, BlockPoint { x1: u1, x2: u2 });
        }
    };
    let x2 = normal_vec(rng, problem.dim2());
    let x1 = problem.completion(&x2).unwrap();
    (problem, BlockPoint { x1, x2 })
}
