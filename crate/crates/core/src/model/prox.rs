use super::{ModelError, ProxPart};
use crate::linalg::DenseVector;

/// Componentwise `sign(v_i) · max(|v_i| - t, 0)`.
pub fn soft_threshold(v: &[f64], t: f64) -> Result<DenseVector, ModelError> {
    if t < 0.0 || t.is_nan() {
        return Err(ModelError::NegativeThreshold(t));
    }
    Ok(shrink(v, t))
}

fn shrink(v: &[f64], t: f64) -> DenseVector {
    v.iter().map(|&x| x.signum() * (x.abs() - t).max(0.0)).collect()
}

/// `h ≡ 0`; its prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroProx;

impl ProxPart for ZeroProx {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, v: &[f64], _t: f64) -> DenseVector {
        DenseVector::from(v)
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `h(x) = mu ‖x‖₁`
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub mu: f64,
}

impl ProxPart for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.mu * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], t: f64) -> DenseVector {
        shrink(v, self.mu * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force minimizer of `t|x| + (x - v)²/2` on a grid of step `h`.
    fn grid_argmin(v: f64, t: f64, h: f64) -> f64 {
        let lo = v - t - 1.0;
        let steps = ((2.0 * t + 2.0) / h).ceil() as usize;
        (0..=steps)
            .map(|k| lo + k as f64 * h)
            .map(|x| (x, t * x.abs() + 0.5 * (x - v) * (x - v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    }

    #[test]
    fn examples() {
        assert_eq!(soft_threshold(&[0.0, 0.0], 1.0).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(soft_threshold(&[3.0, -0.5], 1.0).unwrap().as_slice(), &[2.0, 0.0]);
        // grid oracle, step 1e-4, gives 1.4
        let brute = grid_argmin(1.7, 0.3, 1e-4);
        assert!((brute - 1.4).abs() < 1e-4);
        assert!((soft_threshold(&[1.7], 0.3).unwrap()[0] - 1.4).abs() < 1e-12);
        assert!(matches!(soft_threshold(&[1.0], -0.1), Err(ModelError::NegativeThreshold(_))));
    }

    #[test]
    fn l1_prox_scales_threshold_by_mu() {
        let h = L1Norm { mu: 0.5 };
        assert_eq!(h.prox(&[2.0, -0.2], 2.0).as_slice(), &[1.0, 0.0]);
        assert_eq!(h.value(&[1.0, -3.0]), 2.0);
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(u in prop::collection::vec(-5.0f64..5.0, 4), v in prop::collection::vec(-5.0f64..5.0, 4), t in 0.0f64..3.0) {
            let h = L1Norm { mu: 0.7 };
            let pu = h.prox(&u, t);
            let pv = h.prox(&v, t);
            let d_out: f64 = pu.iter().zip(pv.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_in: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(d_out <= d_in + 1e-12);
        }

        #[test]
        fn prox_beats_grid_probes(v in -3.0f64..3.0, t in 0.01f64..1.5) {
            let x = soft_threshold(&[v], t).unwrap()[0];
            let obj = |x: f64| t * x.abs() + 0.5 * (x - v) * (x - v);
            let brute = grid_argmin(v, t, 1e-3);
            prop_assert!(obj(x) <= obj(brute) + 1e-12);
        }
    }
}
