use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError};
use crate::linalg::SparseMatrix;

/// Edge between features `i` and `j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSource {
    /// Edge-list file: `i j [weight]` per line, 1-based, `#` comments.
    File(PathBuf),
    /// Edge `(i, j)` iff `|corr(feature_i, feature_j)| ≥ threshold`.
    Correlation { threshold: f64 },
    Edges(Vec<Edge>),
}

pub fn parse_edge_list(text: &str, d: usize) -> Result<Vec<Edge>, ModelError> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(ModelError::Parse { line: line_no, message: format!("expected `i j [weight]`, got {line:?}") });
        }
        let node = |tok: &str| -> Result<usize, ModelError> {
            let v: usize = tok
                .parse()
                .map_err(|_| ModelError::Parse { line: line_no, message: format!("non-numeric node {tok:?}") })?;
            if v == 0 || v > d {
                return Err(ModelError::Parse { line: line_no, message: format!("node {v} outside 1..={d}") });
            }
            Ok(v - 1)
        };
        let i = node(tokens[0])?;
        let j = node(tokens[1])?;
        if i == j {
            return Err(ModelError::SelfLoop { line: line_no, node: i + 1 });
        }
        let weight = match tokens.get(2) {
            Some(t) => t
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| ModelError::Parse { line: line_no, message: format!("bad weight {t:?}") })?,
            None => 1.0,
        };
        edges.push(Edge { i, j, weight });
    }
    Ok(edges)
}

/// One row per edge: `+w` at `i`, `-w` at `j`.
pub fn edges_to_matrix(edges: &[Edge], d: usize) -> Result<SparseMatrix, ModelError> {
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for (r, e) in edges.iter().enumerate() {
        if e.i == e.j {
            return Err(ModelError::SelfLoop { line: r + 1, node: e.i + 1 });
        }
        triplets.push((r, e.i, e.weight));
        triplets.push((r, e.j, -e.weight));
    }
    Ok(SparseMatrix::from_triplets(edges.len(), d, &triplets)?)
}

/// Pairs of features whose Pearson correlation over samples has magnitude at
/// least `threshold`. Constant features have no edges.
pub fn correlation_edges(ds: &Dataset, threshold: f64) -> Vec<Edge> {
    let (n, d) = (ds.n(), ds.d());
    let dense = ds.features.to_dense();
    let mut centered = vec![vec![0.0; n]; d];
    for (f, col) in centered.iter_mut().enumerate() {
        let mean = dense.iter().map(|row| row[f]).sum::<f64>() / n as f64;
        for (s, v) in col.iter_mut().enumerate() {
            *v = dense[s][f] - mean;
        }
    }
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            if (cov / (norms[i] * norms[j])).abs() >= threshold {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
    }
    edges
}

fn read(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })
}

pub fn build_graph_pattern(source: &GraphSource, ds: &Dataset) -> Result<SparseMatrix, ModelError> {
    let d = ds.d();
    let edges = match source {
        GraphSource::File(path) => parse_edge_list(&read(path)?, d)?,
        GraphSource::Correlation { threshold } => correlation_edges(ds, *threshold),
        GraphSource::Edges(edges) => edges.clone(),
    };
    edges_to_matrix(&edges, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseVector;

    #[test]
    fn examples() {
        assert_eq!(edges_to_matrix(&[], 3).unwrap().rows(), 0);
        let g = edges_to_matrix(&parse_edge_list("1 2\n", 3).unwrap(), 3).unwrap();
        assert_eq!(g.to_dense(), vec![vec![1.0, -1.0, 0.0]]);
    }

    #[test]
    fn correlated_pair_gives_one_edge() {
        // features 0 and 1 perfectly correlated, feature 2 uncorrelated with both
        let rows = vec![vec![1.0, 2.0, 1.0], vec![2.0, 4.0, -1.0], vec![3.0, 6.0, -1.0], vec![4.0, 8.0, 1.0]];
        let ds = Dataset::new(SparseMatrix::from_dense(&rows).unwrap(), DenseVector::zeros(4), None).unwrap();
        let edges = correlation_edges(&ds, 0.9);
        assert_eq!(edges, vec![Edge { i: 0, j: 1, weight: 1.0 }]);
    }

    #[test]
    fn edge_file_format() {
        let edges = parse_edge_list("# header\n1 3 0.5\n\n2 3\n", 3).unwrap();
        assert_eq!(edges, vec![Edge { i: 0, j: 2, weight: 0.5 }, Edge { i: 1, j: 2, weight: 1.0 }]);
        assert!(matches!(parse_edge_list("2 2\n", 3), Err(ModelError::SelfLoop { line: 1, node: 2 })));
        assert!(matches!(parse_edge_list("1 x\n", 3), Err(ModelError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("1 4\n", 3), Err(ModelError::Parse { .. })));
        assert!(matches!(parse_edge_list("1 2 3 4\n", 3), Err(ModelError::Parse { .. })));
    }

    #[test]
    fn graph_source_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "1 2\n2 3\n").unwrap();
        let ds = Dataset::new(SparseMatrix::identity(3), DenseVector::zeros(3), None).unwrap();
        let g = build_graph_pattern(&GraphSource::File(path), &ds).unwrap();
        assert_eq!(g.rows(), 2);
    }
}
