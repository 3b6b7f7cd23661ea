use serde::{Deserialize, Serialize};

use super::{check_dims, DenseVector, LinalgError};

/// Compressed sparse row matrix.
///
/// Construction rejects out-of-range and duplicate coordinates and drops
/// explicit zeros, so every stored value is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::IndexOutOfRange { row: r, col: c, rows, cols });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite { row: r, col: c, value: v });
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|a| (a.0, a.1));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(LinalgError::DuplicateEntry { row: w[0].0, col: w[0].1 });
            }
        }
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if v == 0.0 {
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix { rows, cols, indptr, indices, values })
    }

    /// Builds a matrix from rows given as `(col, value)` lists with
    /// strictly ascending columns.
    pub fn from_rows(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self, LinalgError> {
        let triplets: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(rows.len(), cols, &triplets)
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = dense.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (r, row) in dense.iter().enumerate() {
            check_dims(cols, row.len())?;
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(dense.len(), cols, &triplets)
    }

    pub fn identity(d: usize) -> Self {
        Self::diag(&vec![1.0; d])
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        let triplets: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d, d, &triplets).expect("diagonal coordinates are distinct and in range")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Stacks `top` above `bottom`.
    pub fn vstack(top: &SparseMatrix, bottom: &SparseMatrix) -> Result<Self, LinalgError> {
        check_dims(top.cols, bottom.cols)?;
        let mut indptr = top.indptr.clone();
        let offset = top.nnz();
        indptr.extend(bottom.indptr[1..].iter().map(|p| p + offset));
        let mut indices = top.indices.clone();
        indices.extend_from_slice(&bottom.indices);
        let mut values = top.values.clone();
        values.extend_from_slice(&bottom.values);
        Ok(SparseMatrix { rows: top.rows + bottom.rows, cols: top.cols, indptr, indices, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(r);
        idx.iter().zip(val).map(|(&c, v)| v * x[c]).sum()
    }

    pub fn row_norm_sq(&self, r: usize) -> f64 {
        self.row(r).1.iter().map(|v| v * v).sum()
    }

    /// `out += alpha * row_r`
    pub fn add_row_scaled(&self, r: usize, alpha: f64, out: &mut [f64]) {
        let (idx, val) = self.row(r);
        for (&c, v) in idx.iter().zip(val) {
            out[c] += alpha * v;
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|r| {
                let (idx, val) = self.row(r);
                idx.iter().zip(val).map(move |(&c, &v)| (r, c, v)).collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Result<DenseVector, LinalgError> {
        check_dims(self.cols, v.len())?;
        Ok((0..self.rows).map(|r| self.row_dot(r, v)).collect())
    }

    pub fn matvec_transpose(&self, u: &[f64]) -> Result<DenseVector, LinalgError> {
        check_dims(self.rows, u.len())?;
        let mut out = DenseVector::zeros(self.cols);
        for (r, &ur) in u.iter().enumerate() {
            if ur != 0.0 {
                self.add_row_scaled(r, ur, &mut out);
            }
        }
        Ok(out)
    }

    /// Returns a copy with row `r` multiplied by `scales[r]`.
    pub fn scale_rows(&self, scales: &[f64]) -> Result<SparseMatrix, LinalgError> {
        check_dims(self.rows, scales.len())?;
        let triplets: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, v * scales[r])).collect();
        Self::from_triplets(self.rows, self.cols, &triplets)
    }

    /// Returns a copy with column `c` multiplied by `scales[c]`.
    pub fn scale_cols(&self, scales: &[f64]) -> Result<SparseMatrix, LinalgError> {
        check_dims(self.cols, scales.len())?;
        let triplets: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, v * scales[c])).collect();
        Self::from_triplets(self.rows, self.cols, &triplets)
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (idx, val) = self.row(r);
            indices.extend_from_slice(idx);
            values.extend_from_slice(val);
            indptr.push(indices.len());
        }
        SparseMatrix { rows: rows.len(), cols: self.cols, indptr, indices, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_examples() {
        let id = SparseMatrix::identity(2);
        assert_eq!(id.matvec(&[3.0, -1.0]).unwrap().as_slice(), &[3.0, -1.0]);
        let zero = SparseMatrix::zeros(2, 2);
        assert_eq!(zero.matvec(&[5.0, 7.0]).unwrap().as_slice(), &[0.0, 0.0]);
        let m = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(m.matvec(&[1.0, 1.0]).unwrap().as_slice(), &[3.0, 3.0]);
    }

    #[test]
    fn matvec_reports_both_dims() {
        let m = SparseMatrix::zeros(2, 3);
        let err = m.matvec(&[1.0, 2.0]).unwrap_err();
        assert_eq!(err, LinalgError::DimensionMismatch { expected: 3, found: 2 });
        assert!(err.to_string().contains('3') && err.to_string().contains('2'));
    }

    #[test]
    fn construction_invariants() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(LinalgError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0)]),
            Err(LinalgError::DuplicateEntry { row: 0, col: 1 })
        ));
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn vstack_and_transpose() {
        let g = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
        let a = SparseMatrix::vstack(&g, &SparseMatrix::identity(3)).unwrap();
        assert_eq!(a.rows(), 4);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap().as_slice(), &[-1.0, 1.0, 2.0, 3.0]);
        assert_eq!(a.matvec_transpose(&[1.0, 0.0, 0.0, 1.0]).unwrap().as_slice(), &[1.0, -1.0, 1.0]);
    }
}
