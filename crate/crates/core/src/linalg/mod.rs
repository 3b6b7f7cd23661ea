//! Dense vectors, CSR sparse matrices, matrix-free linear operators and a
//! power-iteration spectral norm estimate. All scalars are `f64`.

mod operator;
mod sparse;
mod spectral;

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use operator::{AdjointCheck, LinearOperator};
pub use sparse::SparseMatrix;
pub use spectral::{power_iteration, spectral_norm_sq, spectral_norm_sq_default, PowerIteration, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("duplicate coordinate ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NotConverged { iterations: usize, last_estimate: f64 },
    #[error("invalid tolerance {0}; must be positive")]
    InvalidTolerance(f64),
    #[error("matrix has a zero dimension ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
}

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(len: usize) -> Self {
        DenseVector(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        DenseVector(vec![value; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        DenseVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2_slice(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot_slice(&self.0, &self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self - other`, panicking on length mismatch (internal use).
    pub fn sub(&self, other: &[f64]) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, alpha: f64) -> DenseVector {
        DenseVector(self.0.iter().map(|v| alpha * v).collect())
    }

    /// `self += alpha * x`
    pub fn add_scaled(&mut self, alpha: f64, x: &[f64]) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.0.iter_mut().zip(x) {
            *s += alpha * v;
        }
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        DenseVector(v)
    }
}

impl From<&[f64]> for DenseVector {
    fn from(v: &[f64]) -> Self {
        DenseVector(v.to_vec())
    }
}

impl FromIterator<f64> for DenseVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        DenseVector(iter.into_iter().collect())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected != found {
        return Err(LinalgError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn dot(u: &[f64], v: &[f64]) -> Result<f64, LinalgError> {
    check_dims(u.len(), v.len())?;
    Ok(dot_slice(u, v))
}

pub fn norm2(v: &[f64]) -> f64 {
    norm2_slice(v)
}

/// `alpha * u + v` as a new vector.
pub fn axpy(alpha: f64, u: &[f64], v: &[f64]) -> Result<DenseVector, LinalgError> {
    check_dims(u.len(), v.len())?;
    Ok(u.iter().zip(v).map(|(a, b)| alpha * a + b).collect())
}

#[inline]
pub(crate) fn dot_slice(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Euclidean norm with scaling so that huge entries do not overflow.
pub(crate) fn norm2_slice(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// `Σ_i w_i x_i` for equally sized slices.
pub(crate) fn combine(terms: &[(f64, &[f64])]) -> DenseVector {
    let len = terms.first().map_or(0, |t| t.1.len());
    let mut out = DenseVector::zeros(len);
    for (w, x) in terms {
        out.add_scaled(*w, x);
    }
    out
}
