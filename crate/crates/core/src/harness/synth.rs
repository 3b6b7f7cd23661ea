use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::linalg::{DenseVector, SparseMatrix};
use crate::model::{Dataset, LossKind};

/// Parameters of a synthetic sparse regression or classification set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    /// Number of nonzero entries of the ground truth.
    pub sparsity: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Dataset plus the ground truth `x°` that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticLasso {
    pub dataset: Dataset,
    pub truth: DenseVector,
}

/// Standard normal features, each row scaled to unit norm, and labels
/// `h_i = a_iᵀx° + noise·ε_i` (squared loss) or their sign (logistic, `sign 0 = +1`).
pub fn synth_lasso(spec: &SynthSpec, loss: LossKind) -> Result<SyntheticLasso, HarnessError> {
    let SynthSpec { n, d, sparsity, noise, seed } = *spec;
    if n == 0 || d == 0 {
        return Err(HarnessError::Config(format!("synthetic data needs n, d >= 1, got n = {n}, d = {d}")));
    }
    if sparsity == 0 || sparsity > d {
        return Err(HarnessError::Config(format!("sparsity must be in 1..={d}, got {sparsity}")));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(HarnessError::Config(format!("noise must be a nonnegative number, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = DenseVector::zeros(d);
    for j in sample(&mut rng, d, sparsity) {
        let v: f64 = StandardNormal.sample(&mut rng);
        truth[j] = v;
    }
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        let h = row.iter().zip(truth.iter()).map(|(a, x)| a * x).sum::<f64>() + noise * eps;
        labels.push(match loss {
            LossKind::Squared => h,
            LossKind::Logistic => {
                if h >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        });
        rows.push(row);
    }
    let features = SparseMatrix::from_dense(&rows).map_err(|e| HarnessError::Config(e.to_string()))?;
    let dataset = Dataset::new(features, labels.into(), None)?;
    Ok(SyntheticLasso { dataset, truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, d: usize, sparsity: usize, noise: f64, seed: u64) -> SynthSpec {
        SynthSpec { n, d, sparsity, noise, seed }
    }

    #[test]
    fn noiseless_one_dimensional() {
        let s = synth_lasso(&spec(10, 1, 1, 0.0, 4), LossKind::Squared).unwrap();
        let ratio: Vec<f64> = (0..10).map(|i| s.dataset.labels[i] / s.dataset.features.row(i).1[0]).collect();
        assert!(ratio.iter().all(|r| *r == ratio[0]), "{ratio:?}");
        assert!(ratio[0] != 0.0);
    }

    #[test]
    fn seeded_reproduction() {
        let a = synth_lasso(&spec(30, 5, 2, 0.1, 9), LossKind::Squared).unwrap();
        let b = synth_lasso(&spec(30, 5, 2, 0.1, 9), LossKind::Squared).unwrap();
        assert_eq!(a.dataset.features, b.dataset.features);
        assert_eq!(a.dataset.labels, b.dataset.labels);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.truth.iter().filter(|v| **v != 0.0).count(), 2);
        let c = synth_lasso(&spec(30, 5, 2, 0.1, 10), LossKind::Squared).unwrap();
        assert_ne!(a.dataset.labels, c.dataset.labels);
    }

    #[test]
    fn rows_have_unit_norm_and_logistic_labels_are_signs() {
        let s = synth_lasso(&spec(20, 4, 4, 0.5, 1), LossKind::Logistic).unwrap();
        for i in 0..20 {
            assert!((s.dataset.features.row_norm_sq(i) - 1.0).abs() < 1e-12);
            assert!(s.dataset.labels[i] == 1.0 || s.dataset.labels[i] == -1.0);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(synth_lasso(&spec(0, 3, 1, 0.0, 0), LossKind::Squared).is_err());
        assert!(synth_lasso(&spec(3, 3, 4, 0.0, 0), LossKind::Squared).is_err());
    }
}
