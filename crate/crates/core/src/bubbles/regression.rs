use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!("length mismatch: {} abscissae, {} ordinates", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(Error::Domain("degenerate abscissa: all x equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(LinearFit { slope, intercept, slope_stderr, rms: (ss_res / n).sqrt() })
}

/// Slope and its standard error for data already in log-log form.
pub fn power_law_slope(log_x: &[f64], log_y: &[f64]) -> Result<(f64, f64)> {
    let fit = linear_fit(log_x, log_y)?;
    Ok((fit.slope, fit.slope_stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let (s, e) = power_law_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn small_noise() {
        // deterministic pseudo-noise of size 1e-6
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| -0.5 * v + 1e-6 * ((i * 7919 % 13) as f64 / 6.0 - 1.0)).collect();
        let (s, e) = power_law_slope(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-5 && e < 1e-5, "{s} {e}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(power_law_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(power_law_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(power_law_slope(&[1.0, 2.0, f64::NAN], &[1.0, 2.0, 3.0]).is_err());
        assert!(power_law_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
