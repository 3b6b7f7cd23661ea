use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    Block, ConstrainedProblem, Dataset, FiniteSumPart, L1Norm, LeastSquaresLoss, LogisticLoss, ModelError, ZeroProx,
    ZeroSmooth,
};
use crate::linalg::{DenseVector, LinearOperator, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[default]
    Squared,
    Logistic,
}

/// Lipschitz constant for the squared loss `(h_i - a_iᵀx)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LipschitzConvention {
    /// `2 max_i ‖a_i‖²`
    #[default]
    Safe,
    /// `max_i ‖a_i‖²`
    Paper,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// `x1 = x2`: plain Lasso.
    Identity,
    /// `x1 = [G; I] x2`: graph-guided fused Lasso with pattern `G`.
    Graph(SparseMatrix),
    /// `x1 = A x2` for an arbitrary `A`.
    Operator(SparseMatrix),
}

/// `min μ‖x1‖₁ + (1/n) Σ l_i(x2)  s.t.  -x1 + A x2 = 0`.
pub fn build_lasso(
    data: Arc<Dataset>,
    loss: LossKind,
    mu: f64,
    split: Split,
    lipschitz: LipschitzConvention,
) -> Result<ConstrainedProblem, ModelError> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(ModelError::InvalidMu(mu));
    }
    if data.n() == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let d = data.d();
    let smooth: Arc<dyn FiniteSumPart> = match loss {
        LossKind::Squared => Arc::new(LeastSquaresLoss::new(data, lipschitz == LipschitzConvention::Paper)?),
        LossKind::Logistic => Arc::new(LogisticLoss::new(data)?),
    };
    let op2 = match split {
        Split::Identity => LinearOperator::Identity(d),
        Split::Graph(g) => {
            if g.cols() != d {
                return Err(ModelError::Invalid(format!("graph has {} columns but data has {d} features", g.cols())));
            }
            LinearOperator::matrix(SparseMatrix::vstack(&g, &SparseMatrix::identity(d))?)
        }
        Split::Operator(a) => {
            if a.cols() != d {
                return Err(ModelError::Invalid(format!("operator has {} columns but data has {d} features", a.cols())));
            }
            LinearOperator::matrix(a)
        }
    };
    let p = op2.out_dim();
    ConstrainedProblem::new(
        Block { prox: Arc::new(L1Norm { mu }), smooth: Arc::new(ZeroSmooth::new(p)), op: LinearOperator::NegIdentity(p) },
        Block { prox: Arc::new(ZeroProx), smooth, op: op2 },
        DenseVector::zeros(p),
    )
}
