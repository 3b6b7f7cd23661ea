//! Gradient oracles over a finite sum `f(x) = (1/n) Σ_i f_i(x)`: exact, plain
//! minibatch and SVRG snapshot estimators, plus seeded minibatch sampling.
//!
//! Sampling uses ChaCha8 (`rand_chacha`) seeded with the run seed. Each epoch
//! draws from its own ChaCha stream (`set_stream(epoch)`), so two solvers run
//! with the same seed see the same indices in the same epoch.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{dot_slice, DenseVector};
use crate::model::FiniteSumPart;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("minibatch size {b} must satisfy 1 <= b <= n = {n}")]
    InvalidBatch { b: usize, n: usize },
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("sample index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("stale snapshot: cached full gradient deviates by {deviation:e}")]
    StaleSnapshot { deviation: f64 },
    #[error("exhaustive expectation requires b = 1, got b = {0}")]
    ExhaustiveNeedsUnitBatch(usize),
    #[error("exhaustive expectation limited to n <= {limit}, got n = {n}")]
    TooManySamples { n: usize, limit: usize },
}

/// Deterministic index source: ChaCha8 keyed by `seed`, on stream `stream_id`.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        SeededSampler { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Rewinds to the start of the current stream.
    pub fn reset(&mut self) {
        *self = SeededSampler::new(self.seed, self.stream_id);
    }

    /// Jumps to the start of another stream under the same seed.
    pub fn set_stream(&mut self, stream_id: u64) {
        *self = SeededSampler::new(self.seed, stream_id);
    }

    /// `b` indices drawn uniformly from `0..n` with replacement.
    pub fn sample_minibatch(&mut self, n: usize, b: usize) -> Result<Vec<usize>, EstimatorError> {
        if b == 0 || b > n {
            return Err(EstimatorError::InvalidBatch { b, n });
        }
        Ok((0..b).map(|_| self.rng.gen_range(0..n)).collect())
    }
}

/// Anchor point `x̃` with its cached full gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgSnapshot {
    pub point: DenseVector,
    pub full_gradient: DenseVector,
    /// Component gradients spent building the snapshot (`n`).
    pub grad_eval_cost: usize,
}

impl SvrgSnapshot {
    pub fn new(f: &dyn FiniteSumPart, point: DenseVector) -> Result<Self, EstimatorError> {
        check_dim(f, &point)?;
        let full_gradient = f.gradient(&point);
        Ok(SvrgSnapshot { point, full_gradient, grad_eval_cost: f.len() })
    }

    /// Largest entrywise deviation between the cached and recomputed gradient.
    pub fn deviation(&self, f: &dyn FiniteSumPart) -> f64 {
        let fresh = f.gradient(&self.point);
        fresh.iter().zip(self.full_gradient.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn verify(&self, f: &dyn FiniteSumPart) -> Result<(), EstimatorError> {
        if self.point.len() != f.dim() || self.full_gradient.len() != f.dim() {
            return Err(EstimatorError::StaleSnapshot { deviation: f64::INFINITY });
        }
        let deviation = self.deviation(f);
        let scale = 1.0 + self.full_gradient.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(deviation <= 1e-12 * scale) {
            return Err(EstimatorError::StaleSnapshot { deviation });
        }
        Ok(())
    }
}

fn check_dim(f: &dyn FiniteSumPart, x: &[f64]) -> Result<(), EstimatorError> {
    if x.len() != f.dim() {
        return Err(EstimatorError::DimensionMismatch { expected: f.dim(), found: x.len() });
    }
    Ok(())
}

fn check_indices(f: &dyn FiniteSumPart, indices: &[usize]) -> Result<(), EstimatorError> {
    if indices.is_empty() {
        return Err(EstimatorError::EmptyIndexSet);
    }
    let n = f.len();
    if let Some(&index) = indices.iter().find(|&&i| i >= n) {
        return Err(EstimatorError::IndexOutOfRange { index, n });
    }
    Ok(())
}

/// `∇f(x)`, the mean of all `n` component gradients.
pub fn full_gradient(f: &dyn FiniteSumPart, x: &[f64]) -> Result<DenseVector, EstimatorError> {
    check_dim(f, x)?;
    Ok(f.gradient(x))
}

/// `(1/b) Σ_{i∈I} ∇f_i(x)`
pub fn minibatch_gradient(f: &dyn FiniteSumPart, x: &[f64], indices: &[usize]) -> Result<DenseVector, EstimatorError> {
    check_dim(f, x)?;
    check_indices(f, indices)?;
    Ok(minibatch_unchecked(f, x, indices))
}

pub(crate) fn minibatch_unchecked(f: &dyn FiniteSumPart, x: &[f64], indices: &[usize]) -> DenseVector {
    let mut g = DenseVector::zeros(f.dim());
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        f.add_component_gradient(i, x, w, &mut g);
    }
    g
}

pub(crate) fn svrg_unchecked(f: &dyn FiniteSumPart, y: &[f64], snapshot: &SvrgSnapshot, indices: &[usize]) -> DenseVector {
    let mut g = DenseVector::zeros(f.dim());
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        f.add_component_gradient(i, y, w, &mut g);
        f.add_component_gradient(i, &snapshot.point, -w, &mut g);
    }
    g.add_scaled(1.0, &snapshot.full_gradient);
    g
}

/// `(1/b) Σ_{i∈I} (∇f_i(y) - ∇f_i(x̃)) + ∇f(x̃)`; verifies the snapshot first.
pub fn svrg_gradient(
    f: &dyn FiniteSumPart,
    y: &[f64],
    snapshot: &SvrgSnapshot,
    indices: &[usize],
) -> Result<DenseVector, EstimatorError> {
    check_dim(f, y)?;
    check_indices(f, indices)?;
    snapshot.verify(f)?;
    Ok(svrg_unchecked(f, y, snapshot, indices))
}

pub const EXHAUSTIVE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    /// Average over all `n` single-sample choices.
    Exhaustive,
    /// Average over `samples` seeded minibatches.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Both sides of `E‖∇f(y) - ∇̃f(y)‖² ≤ (2L/b)[f(x̃) - f(y) - ⟨∇f(y), x̃ - y⟩]`.
pub fn variance_bound_lhs_rhs(
    f: &dyn FiniteSumPart,
    y: &[f64],
    snapshot: &SvrgSnapshot,
    b: usize,
    mode: Expectation,
) -> Result<(f64, f64), EstimatorError> {
    check_dim(f, y)?;
    snapshot.verify(f)?;
    let n = f.len();
    let grad_y = f.gradient(y);
    let sq_err = |indices: &[usize]| {
        let est = svrg_unchecked(f, y, snapshot, indices);
        est.iter().zip(grad_y.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let lhs = match mode {
        Expectation::Exhaustive => {
            if b != 1 {
                return Err(EstimatorError::ExhaustiveNeedsUnitBatch(b));
            }
            if n > EXHAUSTIVE_LIMIT {
                return Err(EstimatorError::TooManySamples { n, limit: EXHAUSTIVE_LIMIT });
            }
            (0..n).map(|i| sq_err(&[i])).sum::<f64>() / n as f64
        }
        Expectation::MonteCarlo { samples, seed } => {
            let mut sampler = SeededSampler::new(seed, 0);
            let mut total = 0.0;
            for _ in 0..samples.max(1) {
                total += sq_err(&sampler.sample_minibatch(n, b)?);
            }
            total / samples.max(1) as f64
        }
    };
    let diff: Vec<f64> = snapshot.point.iter().zip(y).map(|(a, b)| a - b).collect();
    let bregman = f.value(&snapshot.point) - f.value(y) - dot_slice(&grad_y, &diff);
    let rhs = 2.0 * f.lipschitz() / b as f64 * bregman;
    Ok((lhs, rhs))
}

/// Gradient source bound to one finite sum, counting component-gradient work.
///
/// SVRG steps are charged `b` evaluations, snapshots `n`.
#[derive(Debug, Clone)]
pub struct GradientOracle {
    f: Arc<dyn FiniteSumPart>,
    grad_evals: u64,
}

impl GradientOracle {
    pub fn new(f: Arc<dyn FiniteSumPart>) -> Self {
        GradientOracle { f, grad_evals: 0 }
    }

    pub fn part(&self) -> &Arc<dyn FiniteSumPart> {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn grad_evals(&self) -> u64 {
        self.grad_evals
    }

    pub fn full(&mut self, x: &[f64]) -> DenseVector {
        self.grad_evals += self.f.len() as u64;
        self.f.gradient(x)
    }

    pub fn snapshot(&mut self, point: DenseVector) -> SvrgSnapshot {
        self.grad_evals += self.f.len() as u64;
        let full_gradient = self.f.gradient(&point);
        SvrgSnapshot { point, full_gradient, grad_eval_cost: self.f.len() }
    }

    pub fn minibatch(&mut self, x: &[f64], indices: &[usize]) -> DenseVector {
        self.grad_evals += indices.len() as u64;
        minibatch_unchecked(self.f.as_ref(), x, indices)
    }

    pub fn svrg(&mut self, y: &[f64], snapshot: &SvrgSnapshot, indices: &[usize]) -> DenseVector {
        self.grad_evals += indices.len() as u64;
        svrg_unchecked(self.f.as_ref(), y, snapshot, indices)
    }

    /// `∇f_i(x)` for a single sample, charged one evaluation.
    pub fn component(&mut self, i: usize, x: &[f64]) -> DenseVector {
        self.grad_evals += 1;
        self.f.component_gradient(i, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuadraticSum;

    fn random_quadratics(n: usize, d: usize, seed: u64) -> QuadraticSum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QuadraticSum::new(
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            (0..n).map(|_| rng.gen_range(0.1..2.0)).collect(),
        )
        .unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn full_gradient_examples() {
        let one = random_quadratics(1, 3, 0);
        let x = [0.2, -0.4, 1.0];
        assert_eq!(full_gradient(&one, &x).unwrap(), one.component_gradient(0, &x));

        let same = QuadraticSum::new(vec![vec![1.0, 2.0].into(); 4], vec![0.5; 4]).unwrap();
        let g = full_gradient(&same, &[0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&g, &same.component_gradient(2, &[0.0, 0.0])) < 1e-15);

        let five = random_quadratics(5, 3, 1);
        let mut sum = [0.0; 3];
        for i in 0..5 {
            for (s, v) in sum.iter_mut().zip(five.component_gradient(i, &x).iter()) {
                *s += v;
            }
        }
        let oracle: Vec<f64> = sum.iter().map(|s| s / 5.0).collect();
        assert!(max_abs_diff(&full_gradient(&five, &x).unwrap(), &oracle) < 1e-14);
    }

    #[test]
    fn sampler_examples() {
        let mut s = SeededSampler::new(7, 3);
        assert_eq!(s.sample_minibatch(1, 1).unwrap(), vec![0]);
        let first = s.sample_minibatch(10, 5).unwrap();
        s.reset();
        s.sample_minibatch(1, 1).unwrap();
        assert_eq!(s.sample_minibatch(10, 5).unwrap(), first);
        assert_eq!(s.sample_minibatch(0, 1), Err(EstimatorError::InvalidBatch { b: 1, n: 0 }));
        assert_eq!(s.sample_minibatch(3, 0), Err(EstimatorError::InvalidBatch { b: 0, n: 3 }));
        assert_eq!(s.sample_minibatch(3, 4), Err(EstimatorError::InvalidBatch { b: 4, n: 3 }));

        let mut a = SeededSampler::new(11, 0);
        let mut b = SeededSampler::new(11, 1);
        assert_ne!(a.sample_minibatch(1000, 20).unwrap(), b.sample_minibatch(1000, 20).unwrap());
    }

    #[test]
    fn sampler_is_uniform() {
        let n = 10;
        let draws = 1_000_000;
        let mut s = SeededSampler::new(2024, 0);
        let mut counts = vec![0usize; n];
        for i in s.sample_minibatch(n, n).unwrap() {
            counts[i] += 1;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..draws / n {
            for i in s.sample_minibatch(n, n).unwrap() {
                counts[i] += 1;
            }
        }
        let p = 1.0 / n as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in &counts {
            assert!((*c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - mean).powi(2) / mean).sum();
        // 99.9% quantile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "{chi2}");
    }

    #[test]
    fn minibatch_examples() {
        let f = random_quadratics(4, 2, 3);
        let x = [0.3, 0.1];
        let all = minibatch_gradient(&f, &x, &[0, 1, 2, 3]).unwrap();
        assert!(max_abs_diff(&all, &f.gradient(&x)) < 1e-15);
        assert_eq!(minibatch_gradient(&f, &x, &[2]).unwrap(), f.component_gradient(2, &x));
        let mean: DenseVector = {
            let mut m = DenseVector::zeros(2);
            for i in 0..4 {
                m.add_scaled(0.25, &minibatch_gradient(&f, &x, &[i]).unwrap());
            }
            m
        };
        assert!(max_abs_diff(&mean, &f.gradient(&x)) < 1e-15);
        assert_eq!(minibatch_gradient(&f, &x, &[]), Err(EstimatorError::EmptyIndexSet));
        assert_eq!(minibatch_gradient(&f, &x, &[4]), Err(EstimatorError::IndexOutOfRange { index: 4, n: 4 }));
    }

    #[test]
    fn svrg_examples() {
        let f = random_quadratics(6, 3, 4);
        let snap = SvrgSnapshot::new(&f, vec![0.5, -0.5, 0.1].into()).unwrap();
        assert_eq!(snap.grad_eval_cost, 6);
        for idx in [vec![0], vec![3, 3, 5]] {
            assert_eq!(svrg_gradient(&f, &snap.point.clone(), &snap, &idx).unwrap(), snap.full_gradient);
        }

        let one = random_quadratics(1, 3, 5);
        let snap1 = SvrgSnapshot::new(&one, vec![1.0, 1.0, 1.0].into()).unwrap();
        let y = [0.2, 0.0, -1.0];
        assert!(max_abs_diff(&svrg_gradient(&one, &y, &snap1, &[0]).unwrap(), &one.component_gradient(0, &y)) < 1e-15);

        let mut mean = DenseVector::zeros(3);
        for i in 0..6 {
            mean.add_scaled(1.0 / 6.0, &svrg_gradient(&f, &y, &snap, &[i]).unwrap());
        }
        assert!(max_abs_diff(&mean, &f.gradient(&y)) < 1e-14);

        let mut stale = snap.clone();
        stale.point[0] += 1e-3;
        assert!(matches!(svrg_gradient(&f, &y, &stale, &[0]), Err(EstimatorError::StaleSnapshot { .. })));
    }

    #[test]
    fn variance_bound_examples() {
        let f = random_quadratics(5, 2, 6);
        let snap = SvrgSnapshot::new(&f, vec![0.1, 0.2].into()).unwrap();
        let (lhs, rhs) = variance_bound_lhs_rhs(&f, &snap.point.clone(), &snap, 1, Expectation::Exhaustive).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(rhs.abs() < 1e-15);

        let one = random_quadratics(1, 2, 7);
        let snap1 = SvrgSnapshot::new(&one, vec![0.0, 0.0].into()).unwrap();
        let (lhs, _) = variance_bound_lhs_rhs(&one, &[1.0, 2.0], &snap1, 1, Expectation::Exhaustive).unwrap();
        assert!(lhs < 1e-28);

        let y = [1.0, -1.0];
        let (lhs, rhs) = variance_bound_lhs_rhs(&f, &y, &snap, 1, Expectation::Exhaustive).unwrap();
        assert!(lhs <= rhs + 1e-12);
        let (mc, rhs2) =
            variance_bound_lhs_rhs(&f, &y, &snap, 2, Expectation::MonteCarlo { samples: 20_000, seed: 1 }).unwrap();
        assert!((rhs2 - rhs / 2.0).abs() < 1e-12);
        assert!((mc - lhs / 2.0).abs() < 0.05 * lhs);
        assert_eq!(
            variance_bound_lhs_rhs(&f, &y, &snap, 2, Expectation::Exhaustive),
            Err(EstimatorError::ExhaustiveNeedsUnitBatch(2))
        );
    }

    #[test]
    fn oracle_counts_evaluations() {
        let f: Arc<dyn FiniteSumPart> = Arc::new(random_quadratics(4, 2, 8));
        let mut o = GradientOracle::new(f);
        let snap = o.snapshot(vec![0.0, 0.0].into());
        o.svrg(&[1.0, 1.0], &snap, &[0, 1]);
        o.minibatch(&[1.0, 1.0], &[3]);
        o.full(&[0.0, 0.0]);
        assert_eq!(o.grad_evals(), 4 + 2 + 1 + 4);
    }
}
