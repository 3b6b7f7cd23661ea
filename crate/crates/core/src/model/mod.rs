//! Two-block composite problems with a linear coupling constraint
//!
//! ```text
//! min  h1(x1) + f1(x1) + h2(x2) + (1/n) Σ_i f2_i(x2)
//! s.t. A1 x1 + A2 x2 = b
//! ```
//!
//! together with the pieces needed to instantiate them: proximal terms,
//! smooth and finite-sum losses, datasets and the two Lasso splits.

mod dataset;
mod graph;
mod lasso;
mod libsvm;
mod loss;
mod prox;

use std::fmt::Debug;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{norm2_slice, DenseVector, LinalgError, LinearOperator};

pub use dataset::{Dataset, Normalization};
pub use graph::{build_graph_pattern, correlation_edges, edges_to_matrix, parse_edge_list, Edge, GraphSource};
pub use lasso::{build_lasso, LipschitzConvention, LossKind, Split};
pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm};
pub use loss::{LeastSquaresLoss, LogisticLoss, QuadraticSmooth, QuadraticSum, ZeroSmooth, ZeroSum};
pub use prox::{soft_threshold, L1Norm, ZeroProx};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("sample index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("label {value} of sample {index} is not in {{-1, +1}}")]
    InvalidLabel { index: usize, value: f64 },
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("no samples")]
    NoSamples,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: feature indices must be strictly ascending")]
    NonAscending { line: usize },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mu must be positive, got {0}")]
    InvalidMu(f64),
    #[error("{0}")]
    Invalid(String),
}

/// A smooth convex term `f(x)` with an `L`-Lipschitz gradient.
pub trait SmoothPart: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DenseVector;
    fn lipschitz(&self) -> f64;

    /// True only when the term is identically zero.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `f(x) = (1/n) Σ_i f_i(x)`; `lipschitz` bounds every component.
pub trait FiniteSumPart: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn component_value(&self, i: usize, x: &[f64]) -> f64;
    /// `out += alpha * ∇f_i(x)`
    fn add_component_gradient(&self, i: usize, x: &[f64], alpha: f64, out: &mut [f64]);
    fn lipschitz(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn component_gradient(&self, i: usize, x: &[f64]) -> DenseVector {
        let mut g = DenseVector::zeros(self.dim());
        self.add_component_gradient(i, x, 1.0, &mut g);
        g
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.len();
        (0..n).map(|i| self.component_value(i, x)).sum::<f64>() / n as f64
    }

    fn gradient(&self, x: &[f64]) -> DenseVector {
        let n = self.len();
        let mut g = DenseVector::zeros(self.dim());
        for i in 0..n {
            self.add_component_gradient(i, x, 1.0, &mut g);
        }
        g.iter_mut().for_each(|v| *v /= n as f64);
        g
    }
}

/// A convex term with a computable proximal map.
pub trait ProxPart: Debug + Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// `argmin_x h(x) + ‖x - v‖² / (2t)`
    fn prox(&self, v: &[f64], t: f64) -> DenseVector;

    fn is_zero(&self) -> bool {
        false
    }
}

/// One block of the objective: `h + f` composed with its coupling operator.
#[derive(Debug)]
pub struct Block<F: ?Sized> {
    pub prox: Arc<dyn ProxPart>,
    pub smooth: Arc<F>,
    pub op: LinearOperator,
}

impl<F: ?Sized> Clone for Block<F> {
    fn clone(&self) -> Self {
        Block { prox: self.prox.clone(), smooth: self.smooth.clone(), op: self.op.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    pub block1: Block<dyn SmoothPart>,
    pub block2: Block<dyn FiniteSumPart>,
    pub rhs: DenseVector,
    /// `‖A1ᵀA1‖`
    pub norm_a1: f64,
    /// `‖A2ᵀA2‖`
    pub norm_a2: f64,
}

impl ConstrainedProblem {
    pub fn new(
        block1: Block<dyn SmoothPart>,
        block2: Block<dyn FiniteSumPart>,
        rhs: DenseVector,
    ) -> Result<Self, ModelError> {
        let m = rhs.len();
        for (name, op) in [("A1", &block1.op), ("A2", &block2.op)] {
            if op.out_dim() != m {
                return Err(ModelError::Invalid(format!(
                    "{name} maps into dimension {} but b has dimension {m}",
                    op.out_dim()
                )));
            }
        }
        if block1.smooth.dim() != block1.op.in_dim() || block2.smooth.dim() != block2.op.in_dim() {
            return Err(ModelError::Invalid("smooth term dimension does not match its operator".into()));
        }
        if block2.smooth.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let norm_a1 = block1.op.norm_sq()?;
        let norm_a2 = block2.op.norm_sq()?;
        Ok(ConstrainedProblem { block1, block2, rhs, norm_a1, norm_a2 })
    }

    /// `min h1(x1) + f2(x2)` s.t. `-x1 + x2 = 0`.
    pub fn consensus(h1: Arc<dyn ProxPart>, f2: Arc<dyn FiniteSumPart>) -> Result<Self, ModelError> {
        let d = f2.dim();
        ConstrainedProblem::new(
            Block { prox: h1, smooth: Arc::new(ZeroSmooth::new(d)), op: LinearOperator::NegIdentity(d) },
            Block { prox: Arc::new(ZeroProx), smooth: f2, op: LinearOperator::Identity(d) },
            DenseVector::zeros(d),
        )
    }

    pub fn dim1(&self) -> usize {
        self.block1.op.in_dim()
    }

    pub fn dim2(&self) -> usize {
        self.block2.op.in_dim()
    }

    pub fn constraint_dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn n(&self) -> usize {
        self.block2.smooth.len()
    }

    pub fn l1(&self) -> f64 {
        self.block1.smooth.lipschitz()
    }

    pub fn l2(&self) -> f64 {
        self.block2.smooth.lipschitz()
    }

    /// `A1 x1 + A2 x2 - b`
    pub fn residual(&self, x1: &[f64], x2: &[f64]) -> DenseVector {
        let mut r = self.block1.op.apply(x1);
        self.block2.op.apply_add(1.0, x2, &mut r);
        r.add_scaled(-1.0, &self.rhs);
        r
    }

    /// `A1 x1 + A2 x2`
    pub fn apply(&self, x1: &[f64], x2: &[f64]) -> DenseVector {
        let mut r = self.block1.op.apply(x1);
        self.block2.op.apply_add(1.0, x2, &mut r);
        r
    }

    pub fn constraint_violation(&self, x1: &[f64], x2: &[f64]) -> f64 {
        norm2_slice(&self.residual(x1, x2))
    }

    pub fn block1_value(&self, x1: &[f64]) -> f64 {
        self.block1.prox.value(x1) + self.block1.smooth.value(x1)
    }

    pub fn block2_value(&self, x2: &[f64]) -> f64 {
        self.block2.prox.value(x2) + self.block2.smooth.value(x2)
    }

    /// `F(x1, x2) = F1(x1) + F2(x2)`
    pub fn objective(&self, x1: &[f64], x2: &[f64]) -> f64 {
        self.block1_value(x1) + self.block2_value(x2)
    }

    /// When `A1 = -I`, the `x1` that makes `(x1, x2)` feasible: `A2 x2 - b`.
    pub fn completion(&self, x2: &[f64]) -> Option<DenseVector> {
        if !self.block1.op.is_neg_identity() {
            return None;
        }
        let mut x1 = self.block2.op.apply(x2);
        x1.add_scaled(-1.0, &self.rhs);
        Some(x1)
    }

    /// Objective at `(A2 x2 - b, x2)` when that completion exists, else at `(x1, x2)`.
    pub fn reported_objective(&self, x1: &[f64], x2: &[f64]) -> f64 {
        match self.completion(x2) {
            Some(c) => self.objective(&c, x2),
            None => self.objective(x1, x2),
        }
    }

    /// Recomputes both operator norms and compares with the cached ones.
    pub fn verify_norms(&self, rel_tol: f64) -> Result<(), ModelError> {
        for (name, cached, op) in [("A1", self.norm_a1, &self.block1.op), ("A2", self.norm_a2, &self.block2.op)] {
            let fresh = op.norm_sq()?;
            if (fresh - cached).abs() > rel_tol * fresh.abs().max(1e-300) {
                return Err(ModelError::Invalid(format!("cached ‖{name}ᵀ{name}‖ = {cached} but recomputed {fresh}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
impl ConstrainedProblem {
    pub(crate) fn zero_problem(d: usize, n: usize) -> ConstrainedProblem {
        ConstrainedProblem::new(
            Block { prox: Arc::new(ZeroProx), smooth: Arc::new(ZeroSmooth::new(d)), op: LinearOperator::Identity(d) },
            Block { prox: Arc::new(ZeroProx), smooth: Arc::new(ZeroSum::new(n, d)), op: LinearOperator::NegIdentity(d) },
            DenseVector::zeros(d),
        )
        .unwrap()
    }
}
