use super::SolverError;

/// `θ1,s = 1/(c + τs)` and the constant `θ2 = (m - τ)/(τ(m - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSchedule {
    c: f64,
    tau: f64,
    m: usize,
}

impl ThetaSchedule {
    pub fn new(c: f64, tau: f64, m: usize) -> Result<Self, SolverError> {
        if !(c > 0.0) || !c.is_finite() || !(tau >= 1.0) || !tau.is_finite() {
            return Err(SolverError::InvalidOption(format!("c = {c} and tau = {tau} must satisfy c > 0, tau >= 1")));
        }
        if m <= 1 || (m as f64) <= tau {
            return Err(SolverError::InvalidOption(format!("epoch length m = {m} must exceed tau = {tau} and 1")));
        }
        Ok(ThetaSchedule { c, tau, m })
    }

    /// The default `c = τ = 2`.
    pub fn standard(m: usize) -> Result<Self, SolverError> {
        Self::new(2.0, 2.0, m)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `1/θ1,s = c + τs`, exact while it stays below 2^53 for integral `c`, `τ`.
    pub fn inv_theta1(&self, s: usize) -> f64 {
        self.c + self.tau * s as f64
    }

    pub fn theta1(&self, s: usize) -> f64 {
        1.0 / self.inv_theta1(s)
    }

    pub fn theta2(&self) -> f64 {
        let m = self.m as f64;
        (m - self.tau) / (self.tau * (m - 1.0))
    }

    pub fn theta(&self, s: usize) -> (f64, f64) {
        (self.theta1(s), self.theta2())
    }

    /// Coefficients of `x^m_s` and of each `x^k_s`, `1 <= k < m`, in `x̃_{s+1}`.
    pub fn snapshot_weights(&self, s: usize) -> (f64, f64) {
        let m = self.m as f64;
        let r = (self.tau - 1.0) * self.theta1(s + 1) / self.theta2();
        ((1.0 - r) / m, (1.0 + r / (m - 1.0)) / m)
    }

    /// Coefficients of `x^m` and of each `x^k`, `1 <= k < m`, in the output of
    /// an epoch run with `θ1,s`.
    pub fn output_weights(&self, s: usize) -> (f64, f64) {
        let t = self.theta1(s) + self.theta2();
        let denom = (self.m as f64 - 1.0) * t + 1.0;
        (1.0 / denom, t / denom)
    }

    /// Whether the snapshot combination for `x̃_{s+1}` has nonnegative weights.
    pub fn snapshot_is_convex(&self, s: usize) -> bool {
        self.theta2() >= (self.tau - 1.0) * self.theta1(s + 1)
    }
}
