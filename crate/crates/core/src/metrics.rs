//! Forecast scores: MSE, MAPE, band coverage and the Winkler interval score.

use crate::envelope::Band;
use crate::error::{FtsError, Result};

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(FtsError::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if truth.is_empty() {
        return Err(FtsError::domain("empty segments"));
    }
    Ok(())
}

/// Mean squared pointwise error.
pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    if truth.contains(&0.0) {
        return Err(FtsError::domain("MAPE undefined: truth has zero values"));
    }
    Ok(100.0 * pred.iter().zip(truth).map(|(p, t)| ((t - p) / t).abs()).sum::<f64>() / truth.len() as f64)
}

/// Fraction of grid points where `lower <= truth <= upper`.
pub fn coverage(band: &Band, truth: &[f64]) -> Result<f64> {
    check(&band.lower, truth)?;
    check(&band.upper, truth)?;
    let inside = truth
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .filter(|(x, (l, u))| *l <= *x && *x <= *u)
        .count();
    Ok(inside as f64 / truth.len() as f64)
}

/// Mean Winkler score `(u - l) + (2/α)(l - x)⁺ + (2/α)(x - u)⁺` over the grid points.
pub fn winkler(band: &Band, truth: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FtsError::domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    check(&band.lower, truth)?;
    check(&band.upper, truth)?;
    let penalty = 2.0 / alpha;
    let total: f64 = truth
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .map(|(&x, (&l, &u))| (u - l) + penalty * (l - x).max(0.0) + penalty * (x - u).max(0.0))
        .sum();
    Ok(total / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(lower: f64, upper: f64, n: usize) -> Band {
        Band { lower: vec![lower; n], upper: vec![upper; n] }
    }

    #[test]
    fn mse_cases() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert!((mse(&[1.5, 2.5, 3.5], &t).unwrap() - 0.25).abs() < 1e-15);
        assert!(mse(&t[..2], &t).is_err());
    }

    #[test]
    fn mape_cases() {
        let t = [1.0, -2.0, 4.0];
        assert_eq!(mape(&t, &t).unwrap(), 0.0);
        let scaled: Vec<f64> = t.iter().map(|v| 1.1 * v).collect();
        assert!((mape(&scaled, &t).unwrap() - 10.0).abs() < 1e-12);
        assert!(mape(&t, &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn coverage_cases() {
        assert_eq!(coverage(&band(0.0, 1.0, 4), &[0.5; 4]).unwrap(), 1.0);
        assert_eq!(coverage(&band(0.0, 1.0, 4), &[2.0; 4]).unwrap(), 0.0);
        assert_eq!(coverage(&band(0.0, 1.0, 4), &[0.0, 1.0, 1.5, -0.1]).unwrap(), 0.5);
    }

    #[test]
    fn winkler_cases() {
        assert!((winkler(&band(0.0, 3.0, 5), &[1.0; 5], 0.1).unwrap() - 3.0).abs() < 1e-15);
        assert!((winkler(&band(0.0, 1.0, 1), &[1.2], 0.2).unwrap() - 3.0).abs() < 1e-12);
        assert!(winkler(&band(0.0, 1.0, 1), &[1.2], 1.0).is_err());
        assert!(winkler(&band(0.0, 1.0, 1), &[1.2], 0.0).is_err());
    }
}
