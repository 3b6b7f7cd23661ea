use serde::{Deserialize, Serialize};

use super::DiagnosticsError;

pub const MIN_RATE_POINTS: usize = 4;

/// Least-squares fit of `log value = slope · log S + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub used: usize,
    /// Points with nonpositive value, treated as converged and left out.
    pub excluded: Vec<f64>,
}

pub fn rate_slope(series: &[(f64, f64)]) -> Result<SlopeFit, DiagnosticsError> {
    if series.len() < MIN_RATE_POINTS {
        return Err(DiagnosticsError::TooFewPoints { found: series.len(), needed: MIN_RATE_POINTS });
    }
    if let Some((s, _)) = series.iter().find(|(s, _)| !(*s > 0.0) || !s.is_finite()) {
        return Err(DiagnosticsError::InvalidTrace(format!("abscissa {s} must be positive")));
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for &(s, v) in series {
        if v > 0.0 && v.is_finite() {
            pts.push((s.ln(), v.ln()));
        } else {
            excluded.push(s);
        }
    }
    if pts.len() < 2 {
        return Err(DiagnosticsError::TooFewPoints { found: pts.len(), needed: 2 });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticsError::InvalidTrace("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx, used: pts.len(), excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        [8.0, 16.0, 32.0, 64.0].iter().map(|&s| (s, f(s))).collect()
    }

    #[test]
    fn power_laws() {
        assert!((rate_slope(&series(|s| 1.0 / s)).unwrap().slope + 1.0).abs() < 1e-12);
        assert!((rate_slope(&series(|s| 1.0 / (s * s))).unwrap().slope + 2.0).abs() < 1e-12);
        assert_eq!(rate_slope(&series(|_| 3.0)).unwrap().slope, 0.0);
    }

    #[test]
    fn nonpositive_values_are_excluded() {
        let mut s = series(|s| 5.0 / s);
        s.push((128.0, 0.0));
        let fit = rate_slope(&s).unwrap();
        assert_eq!(fit.excluded, vec![128.0]);
        assert_eq!(fit.used, 4);
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(rate_slope(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(rate_slope(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 1.0)]).is_err());
    }
}
