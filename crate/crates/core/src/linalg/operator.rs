use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, dot_slice, spectral_norm_sq_default, DenseVector, LinalgError, SparseMatrix};

/// A linear map `v ↦ Mv` with its adjoint `u ↦ Mᵀu`.
///
/// `±I` are kept matrix-free; everything else goes through a shared CSR
/// matrix.
#[derive(Debug, Clone)]
pub enum LinearOperator {
    Identity(usize),
    NegIdentity(usize),
    Matrix(Arc<SparseMatrix>),
}

/// Result of probing `⟨Mv, u⟩ = ⟨v, Mᵀu⟩` on random vectors.
#[derive(Debug, Clone, Copy)]
pub struct AdjointCheck {
    pub probes: usize,
    pub max_relative_error: f64,
}

impl LinearOperator {
    pub fn matrix(m: SparseMatrix) -> Self {
        LinearOperator::Matrix(Arc::new(m))
    }

    pub fn in_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(d) | LinearOperator::NegIdentity(d) => *d,
            LinearOperator::Matrix(m) => m.cols(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearOperator::Identity(d) | LinearOperator::NegIdentity(d) => *d,
            LinearOperator::Matrix(m) => m.rows(),
        }
    }

    pub fn is_neg_identity(&self) -> bool {
        matches!(self, LinearOperator::NegIdentity(_))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearOperator::Identity(_))
    }

    pub fn forward(&self, v: &[f64]) -> Result<DenseVector, LinalgError> {
        check_dims(self.in_dim(), v.len())?;
        Ok(self.apply(v))
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<DenseVector, LinalgError> {
        check_dims(self.out_dim(), u.len())?;
        Ok(self.apply_adjoint(u))
    }

    /// Unchecked forward product; lengths are the caller's responsibility.
    pub(crate) fn apply(&self, v: &[f64]) -> DenseVector {
        match self {
            LinearOperator::Identity(_) => DenseVector::from(v),
            LinearOperator::NegIdentity(_) => v.iter().map(|x| -x).collect(),
            LinearOperator::Matrix(m) => (0..m.rows()).map(|r| m.row_dot(r, v)).collect(),
        }
    }

    /// `out += alpha * M v`
    pub(crate) fn apply_add(&self, alpha: f64, v: &[f64], out: &mut [f64]) {
        match self {
            LinearOperator::Identity(_) => out.iter_mut().zip(v).for_each(|(o, x)| *o += alpha * x),
            LinearOperator::NegIdentity(_) => out.iter_mut().zip(v).for_each(|(o, x)| *o -= alpha * x),
            LinearOperator::Matrix(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o += alpha * m.row_dot(r, v);
                }
            }
        }
    }

    pub(crate) fn apply_adjoint(&self, u: &[f64]) -> DenseVector {
        match self {
            LinearOperator::Identity(_) => DenseVector::from(u),
            LinearOperator::NegIdentity(_) => u.iter().map(|x| -x).collect(),
            LinearOperator::Matrix(m) => {
                let mut out = DenseVector::zeros(m.cols());
                for (r, &ur) in u.iter().enumerate() {
                    if ur != 0.0 {
                        m.add_row_scaled(r, ur, &mut out);
                    }
                }
                out
            }
        }
    }

    /// `‖MᵀM‖`: exact for `±I`, power iteration otherwise.
    pub fn norm_sq(&self) -> Result<f64, LinalgError> {
        match self {
            LinearOperator::Identity(d) | LinearOperator::NegIdentity(d) => Ok(if *d == 0 { 0.0 } else { 1.0 }),
            LinearOperator::Matrix(m) => spectral_norm_sq_default(m),
        }
    }

    /// Max relative error of `⟨Mv, u⟩` against `⟨v, Mᵀu⟩` over random probes.
    pub fn check_adjoint(&self, probes: usize, seed: u64) -> AdjointCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let v: Vec<f64> = (0..self.in_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..self.out_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = dot_slice(&self.apply(&v), &u);
            let rhs = dot_slice(&v, &self.apply_adjoint(&u));
            let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        AdjointCheck { probes, max_relative_error: worst }
    }
}
