use super::{dot_slice, norm2_slice, LinalgError, SparseMatrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Outcome of a power iteration on `MᵀM`.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub estimate: f64,
    pub iterations: usize,
    /// Rayleigh quotient after every iteration.
    pub history: Vec<f64>,
}

/// Fixed start vector: ones plus a golden-ratio perturbation.
///
/// Plain all-ones is an exact null vector of every fused-difference row
/// `(+1, -1)`, which would pin the iteration to the wrong eigenvalue.
fn start_vector(d: usize) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + (((i + 1) as f64 * PHI).fract() - 0.5)).collect();
    let n = norm2_slice(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Power iteration on `MᵀM` with full history; see [`spectral_norm_sq`].
pub fn power_iteration(m: &SparseMatrix, tol: f64, max_iter: usize) -> Result<PowerIteration, LinalgError> {
    if !(tol > 0.0) {
        return Err(LinalgError::InvalidTolerance(tol));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Err(LinalgError::EmptyMatrix { rows: m.rows(), cols: m.cols() });
    }
    let mut v = start_vector(m.cols());
    let mut history = Vec::new();
    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let mv = m.matvec(&v)?;
        // Rayleigh quotient of MᵀM at the unit vector v
        let rayleigh = dot_slice(&mv, &mv);
        history.push(rayleigh);
        if rayleigh == 0.0 {
            return Ok(PowerIteration { estimate: 0.0, iterations: it, history });
        }
        if (rayleigh - prev).abs() <= tol * rayleigh {
            return Ok(PowerIteration { estimate: rayleigh, iterations: it, history });
        }
        prev = rayleigh;
        let mut w = m.matvec_transpose(&mv)?;
        let n = norm2_slice(&w);
        w.iter_mut().for_each(|x| *x /= n);
        v = w.into_vec();
    }
    Err(LinalgError::NotConverged { iterations: max_iter, last_estimate: prev })
}

/// `λ_max(MᵀM) = σ_max(M)²` by power iteration from a fixed start vector.
pub fn spectral_norm_sq(m: &SparseMatrix, tol: f64, max_iter: usize) -> Result<f64, LinalgError> {
    power_iteration(m, tol, max_iter).map(|p| p.estimate)
}

pub fn spectral_norm_sq_default(m: &SparseMatrix) -> Result<f64, LinalgError> {
    spectral_norm_sq(m, DEFAULT_TOL, DEFAULT_MAX_ITER)
}
