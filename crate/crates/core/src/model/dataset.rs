use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::{DenseVector, LinalgError, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Every sample row scaled to unit Euclidean norm.
    #[default]
    PerSample,
    /// Every feature column scaled to unit Euclidean norm.
    PerFeature,
    None,
}

/// `n` samples `a_i ∈ R^d` (rows of `features`) with labels `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: SparseMatrix,
    pub labels: DenseVector,
    pub names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: SparseMatrix, labels: DenseVector, names: Option<Vec<String>>) -> Result<Self, ModelError> {
        if labels.len() != features.rows() {
            return Err(LinalgError::DimensionMismatch { expected: features.rows(), found: labels.len() }.into());
        }
        if let Some(names) = &names {
            if names.len() != features.cols() {
                return Err(LinalgError::DimensionMismatch { expected: features.cols(), found: names.len() }.into());
            }
        }
        if !labels.is_finite() {
            return Err(ModelError::Invalid("labels must be finite".into()));
        }
        Ok(Dataset { features, labels, names })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.n()).map(|i| self.features.row_norm_sq(i)).fold(0.0, f64::max)
    }

    pub(crate) fn check_sample(&self, i: usize) -> Result<(), ModelError> {
        if i >= self.n() {
            return Err(ModelError::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<(), ModelError> {
        if d != self.d() {
            return Err(LinalgError::DimensionMismatch { expected: self.d(), found: d }.into());
        }
        Ok(())
    }

    /// Rows rescaled to unit norm; all-zero rows are left alone.
    pub fn normalize_samples(&self) -> Dataset {
        let scales: Vec<f64> = (0..self.n())
            .map(|i| {
                let norm = self.features.row_norm_sq(i).sqrt();
                if norm > 0.0 { 1.0 / norm } else { 1.0 }
            })
            .collect();
        let features = self.features.scale_rows(&scales).expect("one scale per row");
        Dataset { features, labels: self.labels.clone(), names: self.names.clone() }
    }

    /// Columns rescaled to unit norm; all-zero columns are left alone.
    pub fn normalize_features(&self) -> Dataset {
        let mut sq = vec![0.0; self.d()];
        for (_, c, v) in self.features.triplets() {
            sq[c] += v * v;
        }
        let scales: Vec<f64> = sq.iter().map(|s| if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 }).collect();
        let features = self.features.scale_cols(&scales).expect("one scale per column");
        Dataset { features, labels: self.labels.clone(), names: self.names.clone() }
    }

    pub fn normalized(&self, mode: Normalization) -> Dataset {
        match mode {
            Normalization::PerSample => self.normalize_samples(),
            Normalization::PerFeature => self.normalize_features(),
            Normalization::None => self.clone(),
        }
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            names: self.names.clone(),
        }
    }

    /// First `n_train` samples and the remainder.
    pub fn split_at(&self, n_train: usize) -> (Dataset, Dataset) {
        let n_train = n_train.min(self.n());
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.n()).collect();
        (self.select(&train), self.select(&test))
    }
}
