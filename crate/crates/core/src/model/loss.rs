use std::sync::Arc;

use super::{Dataset, FiniteSumPart, ModelError, SmoothPart};
use crate::linalg::DenseVector;

/// `f ≡ 0` on `R^dim`; `L = 0`.
#[derive(Debug, Clone)]
pub struct ZeroSmooth {
    dim: usize,
}

impl ZeroSmooth {
    pub fn new(dim: usize) -> Self {
        ZeroSmooth { dim }
    }
}

impl SmoothPart for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &[f64]) -> DenseVector {
        DenseVector::zeros(self.dim)
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// `f(x) = (curvature / 2) ‖x - center‖²`
#[derive(Debug, Clone)]
pub struct QuadraticSmooth {
    pub center: DenseVector,
    pub curvature: f64,
}

impl SmoothPart for QuadraticSmooth {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.curvature * x.iter().zip(self.center.iter()).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> DenseVector {
        x.iter().zip(self.center.iter()).map(|(a, c)| self.curvature * (a - c)).collect()
    }
    fn lipschitz(&self) -> f64 {
        self.curvature
    }
}

/// `n` zero components on `R^dim`.
#[derive(Debug, Clone)]
pub struct ZeroSum {
    n: usize,
    dim: usize,
}

impl ZeroSum {
    pub fn new(n: usize, dim: usize) -> Self {
        ZeroSum { n, dim }
    }
}

impl FiniteSumPart for ZeroSum {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.n
    }
    fn component_value(&self, _i: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn add_component_gradient(&self, _i: usize, _x: &[f64], _alpha: f64, _out: &mut [f64]) {}
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

/// `f_i(x) = (c_i / 2) ‖x - z_i‖²`
#[derive(Debug, Clone)]
pub struct QuadraticSum {
    pub centers: Vec<DenseVector>,
    pub curvatures: Vec<f64>,
}

impl QuadraticSum {
    pub fn new(centers: Vec<DenseVector>, curvatures: Vec<f64>) -> Result<Self, ModelError> {
        if centers.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        if centers.len() != curvatures.len() || centers.iter().any(|c| c.len() != centers[0].len()) {
            return Err(ModelError::Invalid("centers and curvatures must agree in count and dimension".into()));
        }
        if curvatures.iter().any(|c| !(*c >= 0.0)) {
            return Err(ModelError::Invalid("curvatures must be nonnegative".into()));
        }
        Ok(QuadraticSum { centers, curvatures })
    }
}

impl FiniteSumPart for QuadraticSum {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }
    fn len(&self) -> usize {
        self.centers.len()
    }
    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let c = &self.centers[i];
        0.5 * self.curvatures[i] * x.iter().zip(c.iter()).map(|(a, z)| (a - z) * (a - z)).sum::<f64>()
    }
    fn add_component_gradient(&self, i: usize, x: &[f64], alpha: f64, out: &mut [f64]) {
        let w = alpha * self.curvatures[i];
        for ((o, a), z) in out.iter_mut().zip(x).zip(self.centers[i].iter()) {
            *o += w * (a - z);
        }
    }
    fn lipschitz(&self) -> f64 {
        self.curvatures.iter().cloned().fold(0.0, f64::max)
    }
}

/// `f_i(x) = (h_i - a_iᵀx)²`
#[derive(Debug, Clone)]
pub struct LeastSquaresLoss {
    data: Arc<Dataset>,
    lipschitz: f64,
}

impl LeastSquaresLoss {
    /// `paper_constant` selects `max_i ‖a_i‖²` instead of the safe `2 max_i ‖a_i‖²`.
    pub fn new(data: Arc<Dataset>, paper_constant: bool) -> Result<Self, ModelError> {
        if data.n() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let scale = if paper_constant { 1.0 } else { 2.0 };
        let lipschitz = scale * data.max_row_norm_sq();
        Ok(LeastSquaresLoss { data, lipschitz })
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    /// Value and gradient of component `i`.
    pub fn component(&self, i: usize, x: &[f64]) -> Result<(f64, DenseVector), ModelError> {
        self.data.check_sample(i)?;
        self.data.check_dim(x.len())?;
        Ok((self.component_value(i, x), self.component_gradient(i, x)))
    }
}

impl FiniteSumPart for LeastSquaresLoss {
    fn dim(&self) -> usize {
        self.data.d()
    }
    fn len(&self) -> usize {
        self.data.n()
    }
    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.data.labels[i] - self.data.features.row_dot(i, x);
        r * r
    }
    fn add_component_gradient(&self, i: usize, x: &[f64], alpha: f64, out: &mut [f64]) {
        let r = self.data.features.row_dot(i, x) - self.data.labels[i];
        self.data.features.add_row_scaled(i, alpha * 2.0 * r, out);
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// `f_i(x) = log(1 + exp(-h_i a_iᵀx))` with labels in `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    data: Arc<Dataset>,
    lipschitz: f64,
}

/// `log(1 + exp(u))` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-u))` without overflow.
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl LogisticLoss {
    pub fn new(data: Arc<Dataset>) -> Result<Self, ModelError> {
        if data.n() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        for (index, &value) in data.labels.iter().enumerate() {
            if value != 1.0 && value != -1.0 {
                return Err(ModelError::InvalidLabel { index, value });
            }
        }
        let lipschitz = data.max_row_norm_sq() / 4.0;
        Ok(LogisticLoss { data, lipschitz })
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn component(&self, i: usize, x: &[f64]) -> Result<(f64, DenseVector), ModelError> {
        self.data.check_sample(i)?;
        self.data.check_dim(x.len())?;
        Ok((self.component_value(i, x), self.component_gradient(i, x)))
    }
}

impl FiniteSumPart for LogisticLoss {
    fn dim(&self) -> usize {
        self.data.d()
    }
    fn len(&self) -> usize {
        self.data.n()
    }
    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let margin = self.data.labels[i] * self.data.features.row_dot(i, x);
        softplus(-margin)
    }
    fn add_component_gradient(&self, i: usize, x: &[f64], alpha: f64, out: &mut [f64]) {
        let h = self.data.labels[i];
        let margin = h * self.data.features.row_dot(i, x);
        self.data.features.add_row_scaled(i, -alpha * h * sigmoid(-margin), out);
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Descent-lemma slack `f(x) + ⟨∇f(x), y-x⟩ + L/2 ‖y-x‖² - f(y)`; nonnegative
/// whenever `L` is a valid gradient Lipschitz constant.
#[cfg(test)]
pub(crate) fn descent_lemma_slack(fx: f64, grad: &[f64], fy: f64, x: &[f64], y: &[f64], l: f64) -> f64 {
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    fx + crate::linalg::dot_slice(grad, &diff) + 0.5 * l * crate::linalg::dot_slice(&diff, &diff) - fy
}
