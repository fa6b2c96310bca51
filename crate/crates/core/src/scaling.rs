//! Log-log least squares for reading off scaling exponents.

use crate::error::{Error, Result};

/// One sweep point: abscissa, sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<SweepPoint>,
    /// Fitted exponent: slope of ln(mean) against ln(x).
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl ScalingResult {
    /// `exp(intercept) * x^slope`.
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }

    pub fn slope_within(&self, expected: f64, tol: f64) -> bool {
        (self.slope - expected).abs() <= tol
    }
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<ScalingResult> {
    let pts: Vec<SweepPoint> = points
        .iter()
        .map(|&(x, mean)| SweepPoint {
            x,
            mean,
            stderr: 0.0,
        })
        .collect();
    fit_points(pts)
}

/// Fit over per-point samples; each sample set is summarised by its mean.
pub fn fit_samples(xs: &[f64], samples: &[Vec<f64>]) -> Result<ScalingResult> {
    if xs.len() != samples.len() {
        return Err(Error::InvalidData(format!(
            "{} abscissae but {} sample sets",
            xs.len(),
            samples.len()
        )));
    }
    let pts = xs
        .iter()
        .zip(samples)
        .map(|(&x, s)| {
            let (mean, stderr) = mean_stderr(s);
            SweepPoint { x, mean, stderr }
        })
        .collect();
    fit_points(pts)
}

pub fn fit_points(points: Vec<SweepPoint>) -> Result<ScalingResult> {
    if points.len() < 3 {
        return Err(Error::InvalidData(format!(
            "log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for p in &points {
        if !(p.x > 0.0 && p.mean > 0.0) || !p.x.is_finite() || !p.mean.is_finite() {
            return Err(Error::InvalidData(format!(
                "log-log fit needs positive finite values, got ({}, {})",
                p.x, p.mean
            )));
        }
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.mean.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidData(
            "log-log fit needs distinct x values".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot <= f64::EPSILON * k {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(ScalingResult {
        points,
        slope,
        intercept,
        r2,
    })
}

/// Sample mean and standard error of the mean (0 for fewer than two samples).
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let k = samples.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// `k` log-uniformly spaced values from `lo` to `hi` inclusive.
pub fn geometric_sweep(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || k == 0 {
        return Err(Error::invalid(format!(
            "bad geometric sweep {lo}..{hi} x{k}"
        )));
    }
    if k == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (k - 1) as f64;
    Ok((0..k)
        .map(|i| {
            if i + 1 == k {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, x * x)).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.predict(3.0) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn constant_is_flat() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 7.0)).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(2.0, 1.0), (2.0, 3.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn sweep_is_log_uniform() {
        let s = geometric_sweep(0.04, 0.32, 4).unwrap();
        assert_eq!(s.len(), 4);
        for (a, b) in s.iter().zip(&s[1..]) {
            assert!((b / a - 2.0).abs() < 1e-12);
        }
        assert_eq!(s[3], 0.32);
    }
}
